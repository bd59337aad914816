"""Independent reference implementations used by the test suite."""

from itertools import combinations, permutations

import numpy as np
from scipy.optimize import linprog

from polyfacet.mip import MipInstance


def mip_exhaustive(inst):
    """Optimum of a facet MIP by enumerating every binary pattern.

    Patterns are visited by increasing number of off-facet points; each one is
    an LP in (theta, delta) solved with scipy's HiGHS. Enumeration stops once
    the best objective cannot be beaten by more off-facet points.
    """
    c, a, senses, b, lower, upper = inst.relaxation()
    ys = inst.y_slice()
    n = inst.n
    a_ub = np.where(np.array([s == ">=" for s in senses])[:, None], -a, a)
    b_ub = np.where(np.array([s == ">=" for s in senses]), -b, b)
    best = np.inf
    for k in range(n + 1):
        if best <= k:
            break
        for off in combinations(range(n), k):
            y = np.zeros(n)
            y[list(off)] = 1.0
            lo, hi = lower.copy(), upper.copy()
            lo[ys] = y
            hi[ys] = y
            res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=list(zip(lo, hi)), method="highs")
            if res.status == 0:
                best = min(best, res.fun)
    return best


def brute_force_assignment(cost):
    r = cost.shape[0]
    best, arg = np.inf, None
    for perm in permutations(range(r)):
        v = cost[np.arange(r), list(perm)].sum()
        if v < best - 1e-15:
            best, arg = v, np.array(perm)
    return arg, best


def simplex_ls_active_set(w, x):
    """min ||x - W h|| over the simplex by enumerating supports (small r only)."""
    r = w.shape[1]
    best, best_h = np.inf, None
    for k in range(1, r + 1):
        for supp in combinations(range(r), k):
            s = list(supp)
            ws = w[:, s]
            # KKT on the affine set sum(h_s) = 1
            kkt = np.zeros((k + 1, k + 1))
            kkt[:k, :k] = ws.T @ ws
            kkt[:k, k] = 1
            kkt[k, :k] = 1
            rhs = np.concatenate([ws.T @ x, [1.0]])
            try:
                sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            except np.linalg.LinAlgError:
                continue
            h = np.zeros(r)
            h[s] = sol[:k]
            if np.any(h < -1e-12):
                continue
            h = np.maximum(h, 0)
            h /= h.sum()
            v = np.sum((x - w @ h) ** 2)
            if v < best:
                best, best_h = v, h
    return best_h, best


def random_instance(rng, n=None, k=None, n_max=10):
    """Random facet MIP with k in {1, 2}, optionally with a planted facet and a cut."""
    n = n or int(rng.integers(4, n_max + 1))
    k = k or int(rng.integers(1, 3))
    pts = rng.standard_normal((k, n))
    if rng.random() < 0.5:
        # plant a facet: a few points exactly on theta.x = 1
        theta = rng.standard_normal(k)
        m = int(rng.integers(k, min(n, k + 3) + 1))
        for j in range(m):
            v = rng.standard_normal(k)
            pts[:, j] = v + (1 - theta @ v) * theta / (theta @ theta)
    pts -= pts.mean(axis=1, keepdims=True)
    gamma = float(rng.choice([0.0, 0.01, 0.1]))
    lam = float(rng.choice([0.5, 10.0, 1000.0]))
    big_m = float(rng.choice([10.0, 100.0]))
    cuts, eta = None, 0.0
    if rng.random() < 0.3:
        cuts = rng.standard_normal((k, 1)) * 0.3
        eta = float(rng.choice([0.1, 0.5]))
    return MipInstance(pts, gamma, lam, big_m, cut_points=cuts, eta=eta)

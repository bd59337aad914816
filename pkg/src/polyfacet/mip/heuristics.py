"""Primal heuristics for the facet MIP.

For a fixed ``theta`` the best completion is available in closed form
(:meth:`MipInstance.evaluate`), so every heuristic here only proposes facet
normals. Candidates come from the facets of the hull of the points, from
hyperplanes through subsets of points, and from local refinement of the best
candidates.
"""

from math import comb

import numpy as np

from .lp import LPNumericalError, solve_lp

SUBSET_BUDGET = 20000


def hull_candidates(points):
    """Normals ``theta`` (with offset 1) of the facets of ``conv(points)``."""
    from scipy.spatial import ConvexHull, QhullError

    k, n = points.shape
    if k == 1:
        vals = points[0]
        out = [1.0 / v for v in (vals.min(), vals.max()) if v != 0]
        return np.array(out, dtype=float)[None, :]
    if n < k + 1:
        return np.zeros((k, 0))
    try:
        hull = ConvexHull(points.T)
    except (QhullError, ValueError):
        return np.zeros((k, 0))
    eq = hull.equations
    keep = eq[:, -1] < -1e-12
    return (eq[keep, :-1] / -eq[keep, -1:]).T


def subset_candidates(points, budget=SUBSET_BUDGET, seed=0):
    """Hyperplanes ``theta.T x = 1`` through ``k``-subsets of the points.

    All subsets are used when there are at most ``budget`` of them, otherwise
    ``budget`` subsets are drawn at random with a fixed seed.
    """
    k, n = points.shape
    if n < k:
        return np.zeros((k, 0))
    if comb(n, k) <= budget:
        from itertools import combinations

        subsets = np.array(list(combinations(range(n), k)), dtype=int).reshape(-1, k)
    else:
        rng = np.random.default_rng(seed)
        subsets = np.argpartition(rng.random((budget, n)), k, axis=1)[:, :k]
    mats = np.transpose(points[:, subsets], (1, 2, 0))
    dets = np.linalg.det(mats)
    scale = np.prod(np.linalg.norm(mats, axis=2), axis=1)
    ok = np.abs(dets) > 1e-10 * np.maximum(scale, 1e-300)
    if not ok.any():
        return np.zeros((k, 0))
    sol = np.linalg.solve(mats[ok], np.ones((int(ok.sum()), k, 1)))[..., 0]
    return sol.T


def refit(inst, theta, max_iter=10):
    """Alternate between slab membership and a least-squares facet fit."""
    best = inst.evaluate(theta)
    if best is None:
        return None
    best_theta = np.asarray(theta, dtype=float)
    k = inst.dim
    for _ in range(max_iter):
        members = np.flatnonzero(best[1] == 0)
        if members.size < k:
            break
        pts = inst.points[:, members]
        cand, *_ = np.linalg.lstsq(pts.T, np.ones(members.size), rcond=None)
        res = inst.evaluate(cand)
        if res is None or res[0] >= best[0] - 1e-12:
            break
        best, best_theta = res, cand
    return best_theta, best


def lp_polish(inst, theta, max_iter=5, weight=1e-3):
    """Fix membership at the current slab and re-optimize ``theta`` by LP.

    A small reward on the values of non-members nudges more points into the
    slab. Only improvements of the true objective are kept.
    """
    best = inst.evaluate(theta)
    if best is None:
        return None
    best_theta = np.asarray(theta, dtype=float)
    c, a, senses, b, lower, upper = inst.relaxation()
    ys = inst.y_slice()
    nf = inst.n_free
    xs = inst.points.T @ inst.theta_map()
    for _ in range(max_iter):
        y = best[1]
        lo, hi = lower.copy(), upper.copy()
        lo[ys] = y
        hi[ys] = y
        cc = c.copy()
        cc[:nf] -= weight * xs[y > 0].sum(axis=0)
        try:
            res = solve_lp(cc, a, senses, b, (lo, hi))
        except LPNumericalError:
            break
        if res.status != "optimal":
            break
        cand = inst.theta_of(res.x)
        out = inst.evaluate(cand)
        if out is None or out[0] >= best[0] - 1e-12:
            break
        best, best_theta = out, cand
    return best_theta, best


def root_candidates(inst, budget=SUBSET_BUDGET, seed=0, extra=None):
    """Rank candidate normals by objective; returns ``(thetas, objectives)`` sorted."""
    parts = [hull_candidates(inst.points), subset_candidates(inst.points, budget, seed)]
    if extra is not None and np.size(extra):
        parts.append(np.asarray(extra, dtype=float).reshape(inst.dim, -1))
    thetas = np.concatenate(parts, axis=1)
    if thetas.shape[1] == 0:
        return thetas, np.zeros(0)
    obj = inst.evaluate_many(thetas)
    finite = np.isfinite(obj)
    thetas, obj = thetas[:, finite], obj[finite]
    order = np.lexsort((np.arange(obj.size), obj))
    return thetas[:, order], obj[order]

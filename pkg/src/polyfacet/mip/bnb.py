"""Branch-and-bound over the membership binaries of the facet MIP.

Each node solves the LP relaxation with some ``y_j`` fixed. Branching uses
the most fractional ``y_j``; nodes are explored depth first until the first
incumbent and best bound afterwards (``node_order='best_bound'``), or depth
first throughout (``node_order='depth_first'``). Every LP solution is also
rounded through the closed-form completion of ``theta``.
"""

import heapq
import itertools
import time

import numpy as np

from . import heuristics
from .lp import LPNumericalError, solve_lp
from .model import MipSolution

__all__ = ["solve_mip", "NODE_ORDERS"]

INT_TOL = 1e-6
BOUND_RTOL = 1e-7
NODE_ORDERS = ("best_bound", "depth_first")


class _Search:
    def __init__(self, inst, deadline, min_members):
        self.inst = inst
        self.deadline = deadline
        self.min_members = min_members
        self.best = None
        self.best_theta = None
        self.history = []
        self.t0 = time.perf_counter()
        self.duality_violations = 0
        self.lp_failures = 0

    def offer(self, theta, result=None, source=""):
        if result is None:
            result = self.inst.evaluate(theta)
        if result is None:
            return False
        if self.best is None or result[0] < self.best[0] - 1e-12:
            self.best = result
            self.best_theta = np.asarray(theta, dtype=float).copy()
            self.history.append((time.perf_counter() - self.t0, result[0], source))
            return True
        return False

    @property
    def incumbent(self):
        return np.inf if self.best is None else self.best[0]

    def satisfied(self):
        if self.min_members is None or self.best is None:
            return False
        return int(np.sum(self.best[1] == 0)) >= self.min_members

    def out_of_time(self):
        return self.deadline is not None and time.perf_counter() >= self.deadline


def _prunable(bound, incumbent):
    return bound >= incumbent - BOUND_RTOL * max(1.0, abs(incumbent))


def _run_heuristics(search, inst, budget, n_polish):
    thetas, objs = heuristics.root_candidates(inst, budget=budget)
    if thetas.shape[1] == 0:
        return
    search.offer(thetas[:, 0], source="candidates")
    # local search from the few best distinct objective values
    seen = []
    for i in range(thetas.shape[1]):
        if len(seen) >= n_polish or search.out_of_time() or search.satisfied():
            break
        if any(abs(objs[i] - s) < 1e-9 for s in seen):
            continue
        seen.append(objs[i])
        out = heuristics.refit(inst, thetas[:, i])
        if out is None:
            continue
        theta, res = out
        search.offer(theta, res, "refit")
        if search.out_of_time():
            break
        out = heuristics.lp_polish(inst, theta)
        if out is not None:
            search.offer(out[0], out[1], "polish")


def _branch_and_bound(search, inst, node_order, node_limit):
    c, a, senses, b, lower, upper = inst.relaxation()
    ys = inst.y_slice()
    counter = itertools.count()
    root_lo = lower[ys].copy()
    root_hi = upper[ys].copy()
    # heap entries: (key, seq, bound, depth, ylo, yhi)
    open_nodes = []
    stack = [(-np.inf, 0, root_lo, root_hi)]
    diving = node_order == "best_bound" and search.best is None
    use_stack = node_order == "depth_first" or diving
    nodes = 0
    root_bound = None
    stopped = None
    while stack or open_nodes:
        if search.out_of_time():
            stopped = "time_limit"
            break
        if node_limit is not None and nodes >= node_limit:
            stopped = "node_limit"
            break
        if search.satisfied():
            stopped = "min_members"
            break
        if use_stack and stack:
            parent_bound, depth, ylo, yhi = stack.pop()
        else:
            if stack:
                for item in stack:
                    heapq.heappush(open_nodes, (item[0], next(counter)) + item)
                stack = []
            _, _, parent_bound, depth, ylo, yhi = heapq.heappop(open_nodes)
        if _prunable(parent_bound, search.incumbent):
            continue
        lo, hi = lower.copy(), upper.copy()
        lo[ys], hi[ys] = ylo, yhi
        nodes += 1
        try:
            res = solve_lp(c, a, senses, b, (lo, hi))
        except LPNumericalError:
            search.lp_failures += 1
            continue
        if res.status == "infeasible":
            continue
        if res.status != "optimal":
            search.lp_failures += 1
            continue
        bound = res.objective
        if root_bound is None:
            root_bound = bound
        if np.isfinite(parent_bound) and bound < parent_bound - 1e-6 * max(1.0, abs(parent_bound)):
            search.duality_violations += 1
        theta = inst.theta_of(res.x)
        found = search.offer(theta, source="node")
        if found and diving:
            diving = False
            use_stack = node_order == "depth_first"
        if _prunable(bound, search.incumbent):
            continue
        y = res.x[ys]
        frac = np.where(ylo < yhi, np.minimum(y, 1.0 - y), 0.0)
        j = int(np.argmax(frac))
        if frac[j] <= INT_TOL:
            # integral relaxation: the closed-form completion already covers it
            continue
        down_lo, down_hi = ylo.copy(), yhi.copy()
        down_hi[j] = 0.0
        up_lo, up_hi = ylo.copy(), yhi.copy()
        up_lo[j] = 1.0
        near = (down_lo, down_hi) if y[j] < 0.5 else (up_lo, up_hi)
        far = (up_lo, up_hi) if y[j] < 0.5 else (down_lo, down_hi)
        if use_stack:
            stack.append((bound, depth + 1) + far)
            stack.append((bound, depth + 1) + near)
        else:
            for child in (near, far):
                heapq.heappush(open_nodes, (bound, next(counter), bound, depth + 1) + child)
    pending = [item[0] for item in stack] + [item[2] for item in open_nodes]
    if stopped is None:
        lower_bound = search.incumbent
    else:
        lower_bound = min(pending + [search.incumbent]) if pending else search.incumbent
        if root_bound is not None:
            lower_bound = max(lower_bound, root_bound) if np.isfinite(lower_bound) else root_bound
    return stopped, nodes, lower_bound, root_bound


def solve_mip(inst, time_limit=None, node_order="best_bound", node_limit=None,
              min_members=None, heuristics_budget=heuristics.SUBSET_BUDGET,
              n_polish=4, start_thetas=None, _retry=0):
    """Solve a facet MIP by branch-and-bound.

    Parameters
    ----------
    inst : MipInstance
    time_limit : float, optional
        Wall-clock budget in seconds. When it runs out the best incumbent is
        returned with status ``time_limit``.
    node_order : {'best_bound', 'depth_first'}
    node_limit : int, optional
        Stop after this many LP nodes (status ``feasible``). Unlike the time
        limit this keeps the result reproducible.
    min_members : int, optional
        Accept the first incumbent with at least this many points on the facet.
    heuristics_budget : int
        Number of point subsets tried by the root heuristic; 0 disables the
        root heuristics.
    start_thetas : ndarray, optional
        Extra candidate normals (one per column) offered before the search.

    Returns
    -------
    MipSolution
    """
    if node_order not in NODE_ORDERS:
        raise ValueError(f"node_order must be one of {NODE_ORDERS}, got {node_order!r}")
    t0 = time.perf_counter()
    deadline = None if time_limit is None else t0 + float(time_limit)
    search = _Search(inst, deadline, min_members)
    if start_thetas is not None and np.size(start_thetas):
        for th in np.asarray(start_thetas, dtype=float).reshape(inst.dim, -1).T:
            search.offer(th, source="start")
    if heuristics_budget and not search.out_of_time():
        _run_heuristics(search, inst, heuristics_budget, n_polish)
    root_bound = None
    if search.out_of_time():
        stopped, nodes, lower_bound = "time_limit", 0, -np.inf
    elif search.satisfied():
        stopped, nodes, lower_bound = "min_members", 0, -np.inf
    else:
        stopped, nodes, lower_bound, root_bound = _branch_and_bound(search, inst, node_order, node_limit)

    if search.best is None:
        status = "infeasible" if stopped is None else "time_limit"
        return MipSolution(theta=None, membership=np.zeros(0, dtype=int), slacks=None,
                           objective=np.inf, status=status, nodes_explored=nodes,
                           wall_time=time.perf_counter() - t0, lower_bound=lower_bound,
                           history=search.history,
                           info={"lp_failures": search.lp_failures, "root_bound": root_bound,
                                 "duality_violations": search.duality_violations})
    if stopped is None:
        status = "optimal" if search.lp_failures == 0 else "feasible"
    elif stopped == "time_limit":
        status = "time_limit"
    else:
        status = "feasible"
    obj, y, delta = search.best
    theta = search.best_theta
    if _retry < 2 and _box_active(inst, theta):
        bigger = _with_bound(inst, inst.theta_bound * 10)
        remaining = None if deadline is None else max(0.0, deadline - time.perf_counter())
        return solve_mip(bigger, remaining, node_order, node_limit, min_members,
                         heuristics_budget, n_polish, theta[:, None], _retry + 1)
    if lower_bound > obj:
        lower_bound = obj
    return MipSolution(theta=theta, membership=np.flatnonzero(y == 0), slacks=delta,
                       objective=obj, status=status, nodes_explored=nodes,
                       wall_time=time.perf_counter() - t0, lower_bound=lower_bound, y=y,
                       history=search.history,
                       info={"lp_failures": search.lp_failures, "root_bound": root_bound,
                             "duality_violations": search.duality_violations,
                             "stopped": stopped, "theta_bound": inst.theta_bound})


def _box_active(inst, theta):
    free = inst.free_of_theta(theta)
    return free is not None and np.any(np.abs(free) >= 0.999 * inst.theta_bound)


def _with_bound(inst, bound):
    from dataclasses import replace

    return replace(inst, theta_bound=bound)

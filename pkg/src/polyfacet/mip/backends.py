"""Pluggable MIP backends.

A backend is a callable ``fn(inst, time_limit=None, node_order='best_bound',
**options) -> MipSolution``. The built-in branch-and-bound is the default;
``highs`` wraps :func:`scipy.optimize.milp` as an example of an external
solver.
"""

import time

import numpy as np

from .bnb import solve_mip
from .model import MipSolution

__all__ = ["MipSolveError", "register_backend", "get_backend", "available_backends", "solve"]


class MipSolveError(RuntimeError):
    """A backend failed; the message carries the backend's own error."""


_REGISTRY = {}


def register_backend(name, fn, overwrite=False):
    if not callable(fn):
        raise TypeError("backend must be callable")
    if name in _REGISTRY and not overwrite:
        raise ValueError(f"backend {name!r} is already registered")
    _REGISTRY[name] = fn


def get_backend(name):
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown MIP backend {name!r}; available: {sorted(_REGISTRY)}") from None


def available_backends():
    return sorted(_REGISTRY)


def solve(inst, backend="builtin", time_limit=None, node_order="best_bound", **options):
    """Solve ``inst`` with a registered backend and canonicalize the answer.

    Whatever ``theta`` the backend returns, membership, slacks and objective
    are recomputed from it so that every backend reports them consistently.
    """
    fn = get_backend(backend) if isinstance(backend, str) else backend
    try:
        sol = fn(inst, time_limit=time_limit, node_order=node_order, **options)
    except (ValueError, TypeError):
        raise
    except Exception as exc:
        name = backend if isinstance(backend, str) else getattr(fn, "__name__", "custom")
        raise MipSolveError(f"backend {name!r} failed: {exc}") from exc
    if not isinstance(sol, MipSolution):
        raise MipSolveError(f"backend returned {type(sol).__name__}, expected MipSolution")
    if sol.theta is None:
        return sol
    res = inst.evaluate(sol.theta)
    if res is None:
        raise MipSolveError("backend returned a theta that violates the instance constraints")
    obj, y, delta = res
    sol.objective = obj
    sol.y = y
    sol.slacks = delta
    sol.membership = np.flatnonzero(y == 0)
    sol.lower_bound = min(sol.lower_bound, obj)
    return sol


def _builtin(inst, time_limit=None, node_order="best_bound", **options):
    return solve_mip(inst, time_limit=time_limit, node_order=node_order, **options)


def _highs(inst, time_limit=None, node_order="best_bound", **options):
    from scipy.optimize import Bounds, LinearConstraint, milp

    t0 = time.perf_counter()
    c, a, senses, b, lower, upper = inst.relaxation()
    lo_rows = np.where(np.array([s == ">=" for s in senses]), b, -np.inf)
    hi_rows = np.where(np.array([s == "<=" for s in senses]), b, np.inf)
    integrality = np.zeros(c.size)
    integrality[inst.y_slice()] = 1
    opts = {"disp": False}
    if time_limit is not None:
        opts["time_limit"] = float(time_limit)
    res = milp(c, constraints=LinearConstraint(a, lo_rows, hi_rows), integrality=integrality,
               bounds=Bounds(lower, upper), options=opts)
    elapsed = time.perf_counter() - t0
    if res.x is None:
        status = "infeasible" if res.status == 2 else "time_limit"
        if res.status not in (1, 2):
            raise RuntimeError(res.message)
        return MipSolution(None, np.zeros(0, dtype=int), None, np.inf, status, wall_time=elapsed)
    status = "optimal" if res.status == 0 else "time_limit"
    theta = inst.theta_of(res.x)
    bound = getattr(res, "mip_dual_bound", None)
    return MipSolution(theta=theta, membership=np.zeros(0, dtype=int), slacks=None,
                       objective=float(res.fun), status=status, wall_time=elapsed,
                       lower_bound=float(bound) if bound is not None else -np.inf,
                       nodes_explored=int(getattr(res, "mip_node_count", 0) or 0))


register_backend("builtin", _builtin)
register_backend("highs", _highs)

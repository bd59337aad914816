"""Two-phase primal simplex for small dense linear programs.

Solves::

    min  c @ x
    s.t. a[i] @ x  (<= | >= | =)  b[i]
         lower <= x <= upper

Variable bounds are handled implicitly (bounded-variable simplex); free
variables start nonbasic at zero and may move in either direction. Pricing is
Dantzig's rule with a Harris two-pass ratio test; after ``10 * (rows + cols)``
consecutive degenerate pivots the method falls back to Bland's rule.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = ["LPResult", "LPNumericalError", "solve_lp"]

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
PIVOT_TOL = 1e-11
DEGENERATE_STEP = 1e-12

_SENSES = {"<=": "L", "L": "L", "<": "L", ">=": "G", "G": "G", ">": "G", "=": "E", "==": "E", "E": "E"}


class LPNumericalError(ArithmeticError):
    """Raised when the simplex method meets a pivot too small to trust."""


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    objective: float
    iterations: int = 0
    bland: bool = False
    info: dict = field(default_factory=dict)


def _parse_bounds(bounds, n):
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    if bounds is None:
        return lower, upper
    if isinstance(bounds, tuple) and len(bounds) == 2 and not np.isscalar(bounds[0]) and np.ndim(bounds[0]) == 1:
        lo, hi = bounds
        lower = np.array([-np.inf if v is None else v for v in lo], dtype=float)
        upper = np.array([np.inf if v is None else v for v in hi], dtype=float)
        return lower, upper
    if isinstance(bounds, tuple) and len(bounds) == 2 and (bounds[0] is None or np.isscalar(bounds[0])):
        bounds = [bounds] * n
    if len(bounds) != n:
        raise ValueError(f"expected {n} bounds, got {len(bounds)}")
    for i, (lo, hi) in enumerate(bounds):
        lower[i] = -np.inf if lo is None else lo
        upper[i] = np.inf if hi is None else hi
    return lower, upper


class _Tableau:
    def __init__(self, t, x, basis, lower, upper, n_struct):
        self.t = t
        self.x = x
        self.basis = basis
        self.lower = lower
        self.upper = upper
        self.n_struct = n_struct
        self.is_basic = np.zeros(t.shape[1], dtype=bool)
        self.is_basic[basis] = True
        self.iterations = 0
        self.bland = False

    def run(self, cost, max_iter, degenerate_limit):
        t, x = self.t, self.x
        d = cost - cost[self.basis] @ t
        lower, upper = self.lower, self.upper
        movable = lower < upper
        degenerate_run = 0
        while True:
            if self.iterations >= max_iter:
                return "iteration_limit"
            can_up = (d < -OPT_TOL) & (x < upper - FEAS_TOL)
            can_down = (d > OPT_TOL) & (x > lower + FEAS_TOL)
            cand = (can_up | can_down) & ~self.is_basic & movable
            if not cand.any():
                return "optimal"
            if self.bland:
                q = int(np.flatnonzero(cand)[0])
            else:
                q = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
            direction = 1.0 if d[q] < 0 else -1.0
            alpha = t[:, q] * direction
            xb = x[self.basis]
            lb = lower[self.basis]
            ub = upper[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                dec = alpha > PIVOT_TOL
                inc = alpha < -PIVOT_TOL
                exact = np.full(alpha.size, np.inf)
                relaxed = np.full(alpha.size, np.inf)
                m1 = dec & np.isfinite(lb)
                exact[m1] = (xb[m1] - lb[m1]) / alpha[m1]
                relaxed[m1] = (xb[m1] - lb[m1] + FEAS_TOL) / alpha[m1]
                m2 = inc & np.isfinite(ub)
                exact[m2] = (ub[m2] - xb[m2]) / -alpha[m2]
                relaxed[m2] = (ub[m2] - xb[m2] + FEAS_TOL) / -alpha[m2]
            own = upper[q] - x[q] if direction > 0 else x[q] - lower[q]
            t_max = relaxed.min() if relaxed.size else np.inf
            if not np.isfinite(t_max) and not np.isfinite(own):
                return "unbounded"
            if own <= t_max:
                step = own
                row = -1
            else:
                eligible = np.flatnonzero(exact <= t_max)
                if self.bland:
                    row = int(eligible[np.argmin(self.basis[eligible])])
                else:
                    row = int(eligible[np.argmax(np.abs(alpha[eligible]))])
                step = max(exact[row], 0.0)
            self.iterations += 1
            if step <= DEGENERATE_STEP:
                degenerate_run += 1
                if degenerate_run > degenerate_limit:
                    self.bland = True
            else:
                degenerate_run = 0
            if step > 0:
                x[q] += direction * step
                x[self.basis] = xb - step * alpha
            if row < 0:
                continue
            leaving = self.basis[row]
            x[leaving] = lower[leaving] if alpha[row] > 0 else upper[leaving]
            self.pivot(row, q)
            d -= d[q] * t[row]

    def pivot(self, row, q):
        t = self.t
        piv = t[row, q]
        if abs(piv) < PIVOT_TOL:
            raise LPNumericalError(
                f"pivot {piv:.3e} below {PIVOT_TOL:g} at row {row}, column {q} "
                f"(iteration {self.iterations})"
            )
        t[row] /= piv
        col = t[:, q].copy()
        col[row] = 0.0
        t -= np.outer(col, t[row])
        leaving = self.basis[row]
        self.is_basic[leaving] = False
        self.is_basic[q] = True
        self.basis[row] = q


def solve_lp(c, a, senses, b, bounds=None, max_iter=None):
    """Solve a linear program with the two-phase primal simplex method.

    Parameters
    ----------
    c : array_like, shape (n,)
        Objective coefficients (minimized).
    a : array_like, shape (m, n)
        Constraint matrix.
    senses : sequence of str
        One of ``'<='``, ``'>='``, ``'='`` per row.
    b : array_like, shape (m,)
        Right-hand sides.
    bounds : sequence of (lo, hi), optional
        Per-variable bounds, ``None`` meaning infinite. Defaults to ``x >= 0``.
    max_iter : int, optional
        Pivot budget shared by both phases.

    Returns
    -------
    LPResult
        ``status`` is one of ``optimal``, ``infeasible``, ``unbounded`` or
        ``iteration_limit``.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    a = np.asarray(a, dtype=float).reshape(-1, n) if np.size(a) else np.zeros((0, n))
    b = np.asarray(b, dtype=float).ravel()
    m = a.shape[0]
    if b.size != m or len(senses) != m:
        raise ValueError("a, b and senses must agree on the number of rows")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        raise ValueError("LP data must be finite")
    lower, upper = _parse_bounds(bounds, n)
    if np.any(lower > upper):
        return LPResult("infeasible", None, np.nan)
    kinds = [_SENSES[s] for s in senses]

    sl_lo = np.array([0.0 if k in "LE" else -np.inf for k in kinds])
    sl_hi = np.array([0.0 if k in "GE" else np.inf for k in kinds])

    x0 = np.clip(np.zeros(n), lower, upper)
    resid = b - a @ x0
    target = np.clip(resid, sl_lo, sl_hi)
    gap = resid - target
    art_rows = np.flatnonzero(np.abs(gap) > FEAS_TOL * max(1.0, np.abs(b).max(initial=0.0)))
    n_art = art_rows.size
    sign = np.sign(gap[art_rows])

    total = n + m + n_art
    mat = np.zeros((m, total))
    mat[:, :n] = a
    mat[:, n:n + m] = np.eye(m)
    mat[art_rows, n + m + np.arange(n_art)] = sign

    lo_all = np.concatenate([lower, sl_lo, np.zeros(n_art)])
    hi_all = np.concatenate([upper, sl_hi, np.full(n_art, np.inf)])
    x = np.concatenate([x0, np.zeros(m + n_art)])
    basis = np.arange(n, n + m)
    basis[art_rows] = n + m + np.arange(n_art)
    x[n + art_rows] = target[art_rows]
    binv = np.ones(m)
    binv[art_rows] = sign
    tab = mat * binv[:, None]
    x[basis] = binv * (b - mat[:, ~np.isin(np.arange(total), basis)] @ x[~np.isin(np.arange(total), basis)])

    state = _Tableau(tab, x, basis, lo_all, hi_all, n)
    max_iter = max_iter or 50 * (m + n + 10)
    degenerate_limit = 10 * (m + n)

    if n_art:
        cost1 = np.zeros(total)
        cost1[n + m:] = 1.0
        status = state.run(cost1, max_iter, degenerate_limit)
        if status == "iteration_limit":
            return LPResult(status, None, np.nan, state.iterations, state.bland)
        infeas = float(state.x[n + m:].sum())
        if infeas > FEAS_TOL * max(1.0, np.abs(b).max(initial=0.0)):
            return LPResult("infeasible", None, np.nan, state.iterations, state.bland,
                            {"phase1_infeasibility": infeas})
        _drive_out_artificials(state, n + m)
        state.upper[n + m:] = 0.0
        state.x[n + m:] = np.where(state.is_basic[n + m:], state.x[n + m:], 0.0)

    cost2 = np.zeros(total)
    cost2[:n] = c
    status = state.run(cost2, max_iter, degenerate_limit)
    if status != "optimal":
        return LPResult(status, None, np.nan if status != "unbounded" else -np.inf,
                        state.iterations, state.bland)
    _refresh_basic_values(state, mat, b)
    xs = state.x[:n].copy()
    return LPResult("optimal", xs, float(c @ xs), state.iterations, state.bland)


def _drive_out_artificials(state, first_art):
    t = state.t
    for row in range(t.shape[0]):
        var = state.basis[row]
        if var < first_art:
            continue
        cand = np.flatnonzero((np.abs(t[row, :first_art]) > 1e-9) & ~state.is_basic[:first_art])
        if cand.size == 0:
            continue
        q = int(cand[np.argmax(np.abs(t[row, cand]))])
        state.pivot(row, q)
        state.x[var] = 0.0


def _refresh_basic_values(state, mat, b):
    """Recompute basic values from the nonbasic ones to shed pivot drift."""
    m = mat.shape[0]
    n_struct = state.n_struct
    binv = state.t[:, n_struct:n_struct + m]
    nonbasic = ~state.is_basic
    rhs = b - mat[:, nonbasic] @ state.x[nonbasic]
    state.x[state.basis] = binv @ rhs

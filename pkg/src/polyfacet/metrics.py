"""Recovery metrics, abundance estimation and the facet-based-condition checker."""

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .linalg import as_data_matrix, preprocess, project_simplex_columns
from .polytope import UnboundedError, dual_vertices

__all__ = [
    "MetricReport",
    "FbcReport",
    "match_columns",
    "err",
    "mrsa",
    "mrsa_matrix",
    "estimate_h",
    "re",
    "evaluate",
    "check_fbc",
]


@dataclass
class MetricReport:
    err: float
    mrsa: float
    permutation: list
    per_column: list
    re: float | None = None

    def to_dict(self):
        return asdict(self)


def _check_pair(w_true, w_est):
    w_true = as_data_matrix(w_true, "w_true")
    w_est = as_data_matrix(w_est, "w_est")
    if w_true.shape != w_est.shape:
        raise ValueError(f"shape mismatch: w_true {w_true.shape} vs w_est {w_est.shape}")
    return w_true, w_est


def match_columns(w_true, w_est):
    """Permutation ``perm`` minimizing ``sum_k ||w_true[:, k] - w_est[:, perm[k]]||^2``."""
    w_true, w_est = _check_pair(w_true, w_est)
    cost = ((w_true[:, :, None] - w_est[:, None, :]) ** 2).sum(axis=0)
    _, perm = linear_sum_assignment(cost)
    return perm


def err(w_true, w_est):
    """Relative Frobenius error after optimal column matching."""
    w_true, w_est = _check_pair(w_true, w_est)
    denom = np.linalg.norm(w_true)
    if denom == 0:
        raise ValueError("w_true is zero")
    perm = match_columns(w_true, w_est)
    return float(np.linalg.norm(w_true - w_est[:, perm]) / denom)


def mrsa(x, y):
    """Mean-removed spectral angle between two vectors, scaled to [0, 100]."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError("vectors must have the same length")
    xc, yc = x - x.mean(), y - y.mean()
    nx, ny = np.linalg.norm(xc), np.linalg.norm(yc)
    if nx == 0 or ny == 0:
        raise ValueError("mrsa is undefined for constant vectors")
    cos = np.clip(xc @ yc / (nx * ny), -1.0, 1.0)
    return float(100.0 / np.pi * np.arccos(cos))


def _mrsa_cost(w_true, w_est):
    r = w_true.shape[1]
    return np.array([[mrsa(w_true[:, i], w_est[:, j]) for j in range(r)] for i in range(r)])


def mrsa_matrix(w_true, w_est):
    """Average MRSA over columns matched by the Hungarian method on the MRSA cost.

    Returns ``(mean, per_column, permutation)``.
    """
    w_true, w_est = _check_pair(w_true, w_est)
    cost = _mrsa_cost(w_true, w_est)
    _, perm = linear_sum_assignment(cost)
    per = cost[np.arange(cost.shape[0]), perm]
    return float(per.mean()), per, perm


def _project_capped(a):
    """Projection onto ``{h >= 0, sum(h) <= 1}`` column by column."""
    p = np.maximum(a, 0.0)
    over = p.sum(axis=0) > 1.0
    if np.any(over):
        p[:, over] = project_simplex_columns(a[:, over])
    return p


def estimate_h(x, w, sum_to_one=True, tol=1e-9, max_iter=500, h0=None, return_history=False):
    """Column-wise simplex-constrained least squares ``min ||x_j - W h_j||``.

    Accelerated projected gradient with step ``1 / sigma_max(W)^2``. The
    momentum of a column is reset whenever its objective would increase, so
    every column's objective is nonincreasing. Stops when the relative change
    of the total objective falls below ``tol`` or after ``max_iter`` steps.

    Parameters
    ----------
    x : ndarray, shape (m, n)
    w : ndarray, shape (m, r)
    sum_to_one : bool
        Constrain columns to the unit simplex (default) or to
        ``{h >= 0, sum(h) <= 1}``.

    Returns
    -------
    h : ndarray, shape (r, n)
    history : list of float, only if ``return_history``
    """
    x = as_data_matrix(x, "x")
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if w.shape[0] != x.shape[0]:
        raise ValueError(f"w has {w.shape[0]} rows, x has {x.shape[0]}")
    r, n = w.shape[1], x.shape[1]
    project = project_simplex_columns if sum_to_one else _project_capped
    lip = np.linalg.norm(w, 2) ** 2
    wtw, wtx = w.T @ w, w.T @ x
    if h0 is None:
        h = np.full((r, n), 1.0 / r) if sum_to_one else np.zeros((r, n))
    else:
        h = project(np.asarray(h0, dtype=float))
    if lip == 0:
        return (h, [0.0]) if return_history else h

    def colobj(hh, cols=slice(None)):
        res = x[:, cols] - w @ hh
        return 0.5 * np.sum(res * res, axis=0)

    f = colobj(h)
    history = [float(f.sum())]
    z, tk = h.copy(), np.ones(n)
    for _ in range(max_iter):
        h_new = project(z - (wtw @ z - wtx) / lip)
        f_new = colobj(h_new)
        bad = f_new > f
        if np.any(bad):
            # restart: plain projected gradient step from the current point
            hb = project(h[:, bad] - (wtw @ h[:, bad] - wtx[:, bad]) / lip)
            h_new[:, bad] = hb
            f_new[bad] = colobj(hb, bad)
            tk[bad] = 1.0
            worse = f_new > f
            h_new[:, worse] = h[:, worse]
            f_new[worse] = f[worse]
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        z = h_new + ((tk - 1.0) / t_next) * (h_new - h)
        z[:, bad] = h_new[:, bad]
        tk = t_next
        h = h_new
        total_old, total = history[-1], float(f_new.sum())
        f = f_new
        history.append(total)
        if abs(total_old - total) <= tol * max(total_old, 1e-300):
            break
    return (h, history) if return_history else h


def re(x, w, h):
    """Relative reconstruction error ``||X - W H||_F / ||X||_F``."""
    x = as_data_matrix(x, "x")
    w = np.atleast_2d(np.asarray(w, dtype=float))
    h = np.atleast_2d(np.asarray(h, dtype=float))
    if w.shape[0] != x.shape[0] or h.shape[1] != x.shape[1] or w.shape[1] != h.shape[0]:
        raise ValueError("x, w and h do not conform")
    denom = np.linalg.norm(x)
    if denom == 0:
        raise ValueError("x is zero")
    return float(np.linalg.norm(x - w @ h) / denom)


def evaluate(w_true, w_est, x=None, h=None):
    """Bundle ERR, MRSA (and RE when ``x`` and ``h`` are given) into a report."""
    w_true, w_est = _check_pair(w_true, w_est)
    perm = match_columns(w_true, w_est)
    mean, per, _ = mrsa_matrix(w_true, w_est)
    rel = None if x is None or h is None else re(x, w_est, h)
    return MetricReport(err=err(w_true, w_est), mrsa=mean, permutation=perm.tolist(),
                        per_column=per.tolist(), re=rel)


@dataclass
class FbcReport:
    """Outcome of the facet-based-condition checks, one flag per item."""

    a_vertices: bool
    b_simplex: bool
    c_facets: bool
    d_other_facets: bool
    facet_counts: list = field(default_factory=list)
    offending: list = field(default_factory=list)
    d_method: str = ""

    @property
    def passed(self):
        return self.a_vertices and self.b_simplex and self.c_facets and self.d_other_facets

    def to_dict(self):
        out = asdict(self)
        out["passed"] = self.passed
        return out


def _in_hull_of_others(w, k):
    others = np.delete(w, k, axis=1)
    q = others.shape[1]
    a_eq = np.vstack([others, np.ones((1, q))])
    b_eq = np.concatenate([w[:, k], [1.0]])
    res = linprog(np.zeros(q), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return res.status == 0


def _affine_rank(pts):
    if pts.shape[1] == 0:
        return -1
    return int(np.linalg.matrix_rank(pts - pts[:, :1], tol=1e-9 * max(1.0, np.abs(pts).max())))


def check_fbc(w, h, s, tol=1e-9):
    """Check the facet-based conditions for an exact pair ``(W, H)``.

    (a) no column of ``W`` lies in the hull of the others; (b) columns of
    ``H`` lie in the unit simplex; (c) every facet of ``conv(W)`` holds at
    least ``s`` distinct data points that span it; (d) no other facet of
    ``conv(X)`` holds ``s`` or more points. For (d) the facets of ``conv(X)``
    are enumerated exactly when ``n <= 40`` and read from qhull otherwise.
    """
    w = as_data_matrix(w, "w")
    h = np.atleast_2d(np.asarray(h, dtype=float))
    if h.shape[0] != w.shape[1]:
        raise ValueError("h must have one row per column of w")
    r = w.shape[1]
    a_ok = not any(_in_hull_of_others(w, k) for k in range(r)) if r > 1 else True
    b_ok = bool(np.all(h >= -1e-6) and np.allclose(h.sum(axis=0), 1.0, atol=1e-6))
    x = w @ h
    xu = np.unique(np.round(x, 12), axis=1)

    rd_w = preprocess(w, dedup=True)
    k = rd_w.d - 1
    w_red = rd_w.reduced
    x_red = rd_w.to_reduced(xu)
    counts, offending = [], []
    c_ok = True
    try:
        facets = dual_vertices(w_red)
    except UnboundedError:
        facets = None
        c_ok = False
    w_facets = []
    if facets is not None:
        for i in range(len(facets)):
            theta = facets.vertices[:, i]
            on = np.abs(theta @ x_red - 1.0) <= 1e-7 * max(1.0, np.abs(theta).max())
            cnt = int(on.sum())
            counts.append(cnt)
            w_facets.append(theta / np.linalg.norm(theta))
            spans = _affine_rank(x_red[:, on]) >= k - 1
            if cnt < s or not spans:
                c_ok = False
                offending.append({"facet": i, "count": cnt, "spans": bool(spans)})

    d_ok, method = True, "enumerate" if xu.shape[1] <= 40 else "qhull"
    try:
        rd_x = preprocess(xu, d=rd_w.d, dedup=False)
        xf = dual_vertices(rd_x.reduced, method=method)
        w_in_x = rd_x.to_reduced(w)
        for i in range(len(xf)):
            theta = xf.vertices[:, i]
            on_x = int(np.sum(np.abs(theta @ rd_x.reduced - 1.0) <= 1e-7 * max(1.0, np.abs(theta).max())))
            tight_w = np.abs(theta @ w_in_x - 1.0) <= 1e-7 * max(1.0, np.abs(theta).max())
            is_w_facet = _affine_rank(w_in_x[:, tight_w]) >= k - 1 and np.all(theta @ w_in_x <= 1 + 1e-7)
            if not is_w_facet and on_x >= s:
                d_ok = False
                offending.append({"data_facet": i, "count": on_x})
    except (UnboundedError, ValueError):
        method = method + " (skipped: degenerate data hull)"
    return FbcReport(a_vertices=bool(a_ok), b_simplex=b_ok, c_facets=bool(c_ok),
                     d_other_facets=bool(d_ok), facet_counts=counts, offending=offending,
                     d_method=method)

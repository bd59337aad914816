"""Facet-based polytope identification: brute force (BFPI) and greedy (GFPI).

Both algorithms work on the reduced data ``X~`` (see :func:`preprocess`),
find hyperplanes ``theta.T x = 1`` that hold many data points, intersect the
corresponding half-spaces and map the vertices back to the original space.
"""

import time
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import mip
from .linalg import ReducedData, as_data_matrix, preprocess, restore
from .mip.model import BoundednessRecord, build_facet_mip
from .polytope import (
    Polytope,
    UnboundedError,
    count_on_facet,
    dual_vertices,
    enumerate_vertices,
    intersect_facets,
    is_bounded,
)

__all__ = [
    "GfpiParams",
    "FacetRecord",
    "FactorPair",
    "MarginState",
    "GfpiError",
    "SNR_PRESETS",
    "bfpi",
    "gfpi",
    "refine_facet",
    "anchor_selection",
    "adapt_margin",
]

ON_FACET_TOL = 1e-7
DUP_ANGLE = 1e-3
DUP_OFFSET = 1e-3
TRIM_SIGMAS = 3.0
TRIM_PASSES = 25
LMEDS_TRIALS = 200
EXACT_BAND_RATIO = 0.01

# (lambda, gamma, eta) per SNR in dB
SNR_PRESETS = {
    float("inf"): (1000.0, 0.001, 0.5),
    80.0: (100.0, 0.01, 0.5),
    60.0: (100.0, 0.01, 0.5),
    50.0: (10.0, 0.05, 0.5),
    40.0: (10.0, 0.1, 0.5),
    30.0: (10.0, 0.2, 0.5),
}


class GfpiError(RuntimeError):
    """GFPI could not extract a facet or build a bounded polytope.

    ``kind`` is ``'infeasible'`` when no facet was found within the margin
    and time budget, ``'numerical'`` when a solver failed and ``'unbounded'``
    when the facets do not enclose a polytope.
    """

    def __init__(self, message, kind="infeasible"):
        super().__init__(message)
        self.kind = kind


@dataclass(frozen=True)
class GfpiParams:
    """Parameters of GFPI.

    Parameters
    ----------
    t_facets : int
        Number of facets ``T`` to extract.
    dim : int, optional
        Rank ``d`` of the data. When omitted it is estimated during
        preprocessing and capped at ``t_facets``.
    gamma, eta, lam, big_m, epsilon : float
        Safety gap, cut margin, outlier penalty, BIG-M constant and lower
        bound of the boundedness multipliers.
    time_limit : float or None
        Seconds per facet MIP.
    eta_retries : int
        How many margin adaptations are allowed per facet.
    node_limit : int, optional
        Branch-and-bound node budget per facet (reproducible alternative to
        ``time_limit``).
    anchor_mode : {'mean', 'snpa_mean'}
    auto_t : bool
        Ignore ``t_facets`` and decide the number of facets heuristically.
    inlier_passes : int
        Extra passes that re-center and re-project the data using only the
        points found on facets in the previous pass. Zero (default) keeps the
        plain mean-centering and truncated SVD, which outliers can tilt.
    """

    t_facets: int = 3
    dim: int | None = None
    gamma: float = 0.001
    eta: float = 0.5
    lam: float = 1000.0
    big_m: float = 10.0
    epsilon: float = 0.1
    time_limit: float | None = 10.0
    eta_retries: int = 6
    node_limit: int | None = None
    node_order: str = "best_bound"
    anchor_mode: str = "mean"
    auto_t: bool = False
    backend: str = "builtin"
    heuristics_budget: int = 20000
    inlier_passes: int = 0

    def __post_init__(self):
        if self.inlier_passes < 0:
            raise ValueError("inlier_passes must be nonnegative")
        if self.dim is not None and self.dim < 2:
            raise ValueError("dim must be at least 2")
        if not self.auto_t and self.dim is not None and self.t_facets < self.dim:
            raise ValueError(f"t_facets = {self.t_facets} must be at least dim = {self.dim}")
        if self.t_facets < 2:
            raise ValueError("t_facets must be at least 2")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.big_m <= self.gamma:
            raise ValueError("big_m must exceed gamma")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.eta_retries < 0:
            raise ValueError("eta_retries must be nonnegative")
        if self.anchor_mode not in ("mean", "snpa_mean"):
            raise ValueError("anchor_mode must be 'mean' or 'snpa_mean'")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")

    @classmethod
    def from_snr(cls, snr, t_facets, **overrides):
        """Preset ``lam``, ``gamma`` and ``eta`` for a noise level in dB.

        SNRs without a preset use the nearest listed one and emit a warning.
        """
        snr = float(snr)
        if snr in SNR_PRESETS:
            key = snr
        else:
            finite = [k for k in SNR_PRESETS if np.isfinite(k)]
            key = min(finite, key=lambda k: abs(k - snr)) if np.isfinite(snr) else float("inf")
            warnings.warn(f"no preset for SNR {snr:g} dB; using the {key:g} dB preset", stacklevel=2)
        lam, gamma, eta = SNR_PRESETS[key]
        values = {"lam": lam, "gamma": gamma, "eta": eta, "t_facets": t_facets}
        values.update(overrides)
        return cls(**values)

    def to_dict(self):
        return asdict(self)


@dataclass
class FacetRecord:
    theta_raw: np.ndarray
    theta_refined: np.ndarray
    offset: float
    members: np.ndarray
    anchor: np.ndarray
    objective: float = np.nan
    status: str = ""
    eta: float = np.nan
    wall_time: float = 0.0
    nodes: int = 0

    def to_dict(self):
        return {
            "theta_raw": self.theta_raw.tolist(),
            "theta_refined": self.theta_refined.tolist(),
            "offset": self.offset,
            "members": self.members.tolist(),
            "n_members": int(self.members.size),
            "anchor": self.anchor.tolist(),
            "objective": self.objective,
            "status": self.status,
            "eta": self.eta,
            "wall_time": self.wall_time,
            "nodes": self.nodes,
        }


@dataclass
class FactorPair:
    """Estimated factors with provenance.

    ``w`` is ``m x r``; ``h`` (``r x n``) is filled in on request.
    """

    w: np.ndarray
    h: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"w": self.w.tolist(), "h": None if self.h is None else self.h.tolist()}
        meta = dict(self.meta)
        if "facets" in meta:
            meta["facets"] = [f.to_dict() for f in meta["facets"]]
        out["meta"] = meta
        return out


@dataclass
class MarginState:
    eta: float
    gamma: float
    retries: int = 0
    max_retries: int = 6


def adapt_margin(state, outcome):
    """Update the cut margin after a facet attempt.

    ``outcome`` is ``'infeasible'`` (halve ``eta``), ``'duplicate'`` (double
    it, capped at ``0.95 * (1 - gamma)``) or ``'ok'`` (unchanged). Raises
    :class:`GfpiError` once the retry budget is spent.
    """
    if outcome == "ok":
        return state.eta
    if outcome not in ("infeasible", "duplicate"):
        raise ValueError(f"unknown outcome {outcome!r}")
    state.retries += 1
    if state.retries > state.max_retries:
        raise GfpiError(f"facet extraction failed ({outcome}) after {state.max_retries} margin adaptations")
    if outcome == "infeasible":
        state.eta = state.eta / 2.0
    else:
        state.eta = min(2.0 * state.eta, 0.95 * (1.0 - state.gamma))
    return state.eta


def refine_facet(members, fallback_theta=None, trim=True):
    """Unit normal and offset of the hyperplane best fitting ``members``.

    The normal is the left singular vector of the centered members with the
    smallest singular value, oriented so that the offset is positive.

    Parameters
    ----------
    members : ndarray, shape (k, p)
        Points on the facet, one per column.
    fallback_theta : ndarray, optional
        Facet normal scaled so that ``theta.T x = 1``; used when the members
        do not span a hyperplane.
    trim : bool
        Refit after dropping members farther than three robust standard
        deviations from the plane (a few passes). Points of neighbouring
        facets that fall inside the safety gap would otherwise tilt the fit.
        The trimming also runs from a least-median-of-squares start; that
        fit wins when its inlier band is under 1% of the first fit's and it
        keeps more than half of the members (and more than ``k``) without
        pushing any member much farther away, which happens when most
        members lie exactly on one plane.

    Returns
    -------
    normal : ndarray, shape (k,)
    offset : float
    """
    members = np.atleast_2d(np.asarray(members, dtype=float))
    k, p = members.shape
    anchor = members.mean(axis=1)
    centered = members - anchor[:, None]
    degenerate = p < k
    if not degenerate and k > 1:
        s = np.linalg.svd(centered, compute_uv=False)
        degenerate = s[k - 2] <= 1e-12 * max(1.0, np.abs(members).max())
    if degenerate and fallback_theta is not None:
        warnings.warn(f"{p} facet members do not span a hyperplane in dimension {k}; "
                      "using the MIP normal", stacklevel=2)
        theta = np.asarray(fallback_theta, dtype=float)
        nrm = np.linalg.norm(theta)
        return theta / nrm, 1.0 / nrm
    normal = _plane_normal(centered)
    if trim and k > 1:
        floor = 1e-12 * max(1.0, np.abs(members).max())
        normal, keep, band = _trim(members, normal, float(normal @ anchor), floor)
        start, level = _lmeds_start(members, floor)
        if start is not None:
            # a majority of members on a far tighter plane: an exact facet
            # with near-facet points mixed in, which tilt the first fit
            alt, alt_keep, alt_band = _trim(members, start, level, floor)
            n_alt = int(alt_keep.sum())

            def worst(n, kp):
                return np.abs(n @ members - n @ members[:, kp].mean(axis=1)).max()

            # the exact plane must still hold every member about as well
            if (alt_band < EXACT_BAND_RATIO * band and n_alt > max(k, p / 2)
                    and worst(alt, alt_keep) <= 2.0 * worst(normal, keep)):
                normal, keep = alt, alt_keep
        anchor = members[:, keep].mean(axis=1)
    offset = float(normal @ anchor)
    if offset < 0:
        normal, offset = -normal, -offset
    return normal, offset


def _trim(members, normal, level, floor):
    """Refit ``normal`` after dropping members beyond three robust sigmas.

    Returns the normal, the kept mask and the final inlier band.
    """
    k, p = members.shape
    keep = np.ones(p, dtype=bool)
    band = np.inf
    for _ in range(TRIM_PASSES):
        resid = np.abs(normal @ members - level)
        band = TRIM_SIGMAS * 1.4826 * np.median(resid[keep]) + floor
        new_keep = resid <= band
        if new_keep.sum() < k or np.array_equal(new_keep, keep):
            break
        sub = members[:, new_keep]
        sub_c = sub - sub.mean(axis=1)[:, None]
        if np.linalg.matrix_rank(sub_c, tol=floor) < k - 1:
            break
        keep = new_keep
        normal = _plane_normal(sub_c)
        level = float(normal @ sub.mean(axis=1))
    return normal, keep, band


def _lmeds_start(members, floor):
    """Plane through k members with the least median residual, or None.

    Points near but off the facet pull a least squares fit over all members;
    a plane through k true facet points does not. The seed is fixed so the
    refinement stays deterministic.
    """
    k, p = members.shape
    if p <= k:
        return None, None
    rng = np.random.default_rng(0)
    best, normal, level = np.inf, None, None
    for _ in range(LMEDS_TRIALS):
        pick = members[:, rng.choice(p, size=k, replace=False)]
        cand = _plane_normal(pick - pick.mean(axis=1)[:, None])
        c = float(cand @ pick.mean(axis=1))
        med = np.median(np.abs(cand @ members - c))
        if med < best:
            best, normal, level = med, cand, c
            if med <= floor:
                break
    return normal, level


def _plane_normal(centered):
    if centered.shape[0] == 1:
        return np.array([1.0])
    u, _, _ = np.linalg.svd(centered, full_matrices=True)
    return u[:, -1]


def anchor_selection(members, mode="mean"):
    """Representative point of a facet used for the cut constraints."""
    members = np.atleast_2d(np.asarray(members, dtype=float))
    if members.shape[1] == 0:
        raise ValueError("a facet needs at least one member")
    mean = members.mean(axis=1)
    if mode == "mean" or members.shape[1] == 1:
        return mean
    if mode != "snpa_mean":
        raise ValueError(f"unknown anchor mode {mode!r}")
    from .separable import snpa

    k = members.shape[0]
    centered = members - mean[:, None]
    r = min(max(k, 2), members.shape[1])
    try:
        sel = snpa(centered, r).indices
    except ValueError:
        return mean
    return members[:, sel].mean(axis=1)


def bfpi(x, s, d=None):
    """Brute-force facet identification.

    Keeps every facet of ``conv(X)`` holding at least ``s`` points and returns
    the vertices of the polytope they bound.

    Parameters
    ----------
    x : ndarray, shape (m, n)
    s : int
        Minimum number of points on a facet of ``conv(W)``.
    d : int, optional
        Rank of ``x``; estimated when omitted.
    """
    t0 = time.perf_counter()
    x = as_data_matrix(x)
    rd = preprocess(x, d=d)
    verts = dual_vertices(rd.reduced)
    counts = np.array([count_on_facet(rd.reduced, verts.vertices[:, i], ON_FACET_TOL).size
                       for i in range(len(verts))])
    keep = np.flatnonzero(counts >= s)
    if keep.size < rd.d:
        raise ValueError(
            f"insufficient facets at threshold s={s}: {keep.size} facets hold >= s points, "
            f"need at least d={rd.d}"
        )
    thetas = verts.vertices[:, keep]
    poly = Polytope(thetas, np.ones(keep.size))
    if not is_bounded(poly.normals):
        raise UnboundedError("the kept facets bound an unbounded polyhedron; lower s")
    w_red = enumerate_vertices(poly).vertices
    w = restore(w_red, rd)
    meta = {
        "algorithm": "bfpi",
        "s": int(s),
        "d": rd.d,
        "n_dual_vertices": len(verts),
        "facet_counts": counts[keep].tolist(),
        "score": int(counts[keep].sum()),
        "wall_time": time.perf_counter() - t0,
    }
    return FactorPair(w=w, meta=meta)


def _is_duplicate(normal, offset, records):
    for rec in records:
        cos = np.clip(normal @ rec.theta_refined, -1.0, 1.0)
        if np.arccos(cos) < DUP_ANGLE and abs(offset - rec.offset) < DUP_OFFSET:
            return True
    return False


def _extract_facet(xr, params, records, anchors, boundedness, solve_kw):
    state = MarginState(eta=params.eta, gamma=params.gamma, max_retries=params.eta_retries)
    k = xr.shape[0]
    while True:
        t0 = time.perf_counter()
        cuts = np.column_stack(anchors) if anchors else np.zeros((k, 0))
        inst = build_facet_mip(xr, replace(params, eta=state.eta), cuts=cuts, last_facet=boundedness)
        sol = mip.solve(inst, backend=params.backend, time_limit=params.time_limit,
                        node_order=params.node_order, **solve_kw)
        elapsed = time.perf_counter() - t0
        if sol.theta is None or sol.membership.size == 0:
            adapt_margin(state, "infeasible")
            continue
        members = sol.membership
        pts = xr[:, members]
        normal, offset = refine_facet(pts, sol.theta)
        if _is_duplicate(normal, offset, records):
            adapt_margin(state, "duplicate")
            continue
        anchor = anchor_selection(pts, params.anchor_mode)
        return FacetRecord(theta_raw=sol.theta, theta_refined=normal, offset=offset,
                           members=members, anchor=anchor, objective=sol.objective,
                           status=sol.status, eta=state.eta, wall_time=elapsed,
                           nodes=sol.nodes_explored)


def _median_rule(records):
    counts = [r.members.size for r in records]
    return counts[-1] >= 0.5 * np.median(counts)


def gfpi(x, params):
    """Greedy facet-based polytope identification.

    Extracts facets one at a time by solving the facet MIP, refines each
    normal from its member points, and returns the vertices of the polytope
    the refined facets bound.

    Parameters
    ----------
    x : ndarray, shape (m, n)
    params : GfpiParams

    Returns
    -------
    FactorPair
        ``meta`` holds the facet records, the total number of points on the
        extracted facets (``score``) and timings.
    """
    t_start = time.perf_counter()
    x = as_data_matrix(x)
    rd = preprocess(x, d=params.dim)
    if params.dim is None and not params.auto_t and rd.d > params.t_facets:
        # noise makes the centered data full rank; T >= d caps the estimate
        rd = preprocess(x, d=params.t_facets)
    if not params.auto_t and params.t_facets < rd.d:
        raise ValueError(f"t_facets = {params.t_facets} is smaller than the data rank d = {rd.d}")
    records, poly, w_red = _gfpi_pass(rd, params)
    passes = 0
    for _ in range(params.inlier_passes):
        inliers = np.unique(np.concatenate([r.members for r in records]))
        if inliers.size < rd.d:
            break
        sub = preprocess(x[:, rd.kept[inliers]], d=rd.d, dedup=False)
        rd = ReducedData(reduced=sub.to_reduced(x[:, rd.kept]), basis=sub.basis,
                         centroid=sub.centroid, d=rd.d, kept=rd.kept)
        records, poly, w_red = _gfpi_pass(rd, params)
        passes += 1
    w = restore(w_red, rd)
    meta = {
        "algorithm": "gfpi",
        "params": params.to_dict(),
        "d": rd.d,
        "n_facets": len(records),
        "facets": records,
        "score": int(sum(r.members.size for r in records)),
        "polytope": {"normals": poly.normals.tolist(), "offsets": poly.offsets.tolist()},
        "kept_columns": rd.kept.tolist(),
        "inlier_passes_run": passes,
        "wall_time": time.perf_counter() - t_start,
    }
    return FactorPair(w=w, meta=meta)


def _gfpi_pass(rd, params):
    """One greedy extraction on reduced data; returns records, polytope and vertices."""
    d = rd.d
    xr = rd.reduced
    solve_kw = {"node_limit": params.node_limit, "heuristics_budget": params.heuristics_budget}
    records, anchors = [], []
    max_t = 2 * d if params.auto_t else params.t_facets
    t = 0
    while t < max_t:
        t += 1
        boundedness = None
        if not params.auto_t and t == params.t_facets == d:
            prior = np.column_stack([r.theta_raw for r in records])
            boundedness = BoundednessRecord(prior, params.epsilon)
        try:
            rec = _extract_facet(xr, params, records, anchors, boundedness, solve_kw)
        except mip.MipSolveError as exc:
            raise GfpiError(f"facet {t}: {exc}", kind="numerical") from exc
        except GfpiError as exc:
            if params.auto_t and t > d:
                break
            raise GfpiError(f"facet {t}: {exc}", kind=exc.kind) from exc
        records.append(rec)
        anchors.append(rec.anchor)
        if params.auto_t and t >= d:
            normals = np.column_stack([r.theta_refined for r in records])
            if is_bounded(normals) and not _median_rule(records):
                # a weak facet is kept only when the others leave the polyhedron unbounded
                if len(records) > d and is_bounded(normals[:, :-1]):
                    records.pop()
                    anchors.pop()
                break
    normals = np.column_stack([r.theta_refined for r in records])
    offsets = np.array([r.offset for r in records])
    poly = Polytope(normals, offsets)
    if not is_bounded(normals):
        raise GfpiError(
            f"the {len(records)} extracted facets bound an unbounded polyhedron; "
            "extract more facets (t_facets) or use t_facets = d so the boundedness constraint applies",
            kind="unbounded",
        )
    if len(records) == d:
        w_red = intersect_facets(poly, d)
    else:
        w_red = enumerate_vertices(poly).vertices
    return records, poly, w_red

"""Half-space polytopes, duality and vertex enumeration in low dimension.

Vertices are found by enumerating every ``k``-subset of the constraints of a
``k``-dimensional polyhedron, solving the square system and keeping the
feasible solutions. Output order is canonical: lexicographic by the first
subset that produced each vertex.
"""

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .mip.lp import solve_lp

__all__ = [
    "Polytope",
    "VertexSet",
    "UnboundedError",
    "EmptyPolytopeError",
    "dual_vertices",
    "count_on_facet",
    "is_bounded",
    "enumerate_vertices",
    "intersect_facets",
]

FEAS_TOL = 1e-7
DEDUP_TOL = 1e-7
ENUM_LIMIT = 2_000_000


class UnboundedError(ValueError):
    pass


class EmptyPolytopeError(ValueError):
    pass


@dataclass(frozen=True)
class Polytope:
    """The polyhedron ``{x : normals.T @ x <= offsets}``."""

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        offsets = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if normals.shape[1] != offsets.size:
            raise ValueError("need one offset per normal column")
        if normals.shape[1] < 1:
            raise ValueError("a polytope needs at least one half-space")
        if np.any(np.linalg.norm(normals, axis=0) == 0.0):
            raise ValueError("half-space normals must be nonzero")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)

    @property
    def dim(self):
        return self.normals.shape[0]

    def contains(self, x, tol=FEAS_TOL):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        slack = self.normals.T @ x - self.offsets[:, None]
        return np.all(slack <= tol * np.maximum(1.0, np.abs(self.offsets))[:, None], axis=0)


@dataclass(frozen=True)
class VertexSet:
    vertices: np.ndarray
    active_sets: tuple

    def __len__(self):
        return self.vertices.shape[1]


def _subset_vertices(normals, offsets, tol=FEAS_TOL, chunk=20000):
    """Enumerate vertices of ``{x : normals.T x <= offsets}`` by square subsystems."""
    k, t = normals.shape
    if comb(t, k) > ENUM_LIMIT:
        raise ValueError(
            f"subset enumeration needs C({t},{k}) = {comb(t, k)} solves; "
            "reduce the problem or use method='qhull'"
        )
    scale = np.maximum(1.0, np.abs(offsets))
    found = []
    subsets_iter = combinations(range(t), k)
    while True:
        block = np.array(list(_take(subsets_iter, chunk)), dtype=int)
        if block.size == 0:
            break
        block = block.reshape(-1, k)
        mats = np.transpose(normals[:, block], (1, 2, 0))
        rhs = offsets[block]
        dets = np.linalg.det(mats)
        norms = np.prod(np.linalg.norm(mats, axis=2), axis=1)
        ok = np.abs(dets) > 1e-12 * np.maximum(norms, 1e-300)
        if not np.any(ok):
            continue
        sol = np.linalg.solve(mats[ok], rhs[ok][..., None])[..., 0]
        slack = sol @ normals - offsets[None, :]
        feasible = np.all(slack <= tol * scale[None, :], axis=1)
        for s, x in zip(block[ok][feasible], sol[feasible]):
            found.append((tuple(s), x))
    return found


def _take(it, n):
    for _ in range(n):
        try:
            yield next(it)
        except StopIteration:
            return


def _dedup(found, normals, offsets, tol=DEDUP_TOL):
    if not found:
        return VertexSet(np.zeros((normals.shape[0], 0)), ())
    pts = np.array([x for _, x in found])
    diam = np.ptp(pts, axis=0).max() if len(pts) > 1 else 0.0
    scale = max(1.0, float(diam))
    kept_pts, actives = [], []
    scale_off = np.maximum(1.0, np.abs(offsets))
    for _, x in found:
        if kept_pts:
            dist = np.abs(np.asarray(kept_pts) - x).max(axis=1)
            hit = np.flatnonzero(dist <= tol * scale)
            if hit.size:
                continue
        kept_pts.append(x)
    verts = np.asarray(kept_pts).T
    slack = normals.T @ verts - offsets[:, None]
    for i in range(verts.shape[1]):
        tight = np.flatnonzero(np.abs(slack[:, i]) <= FEAS_TOL * scale_off * 10)
        actives.append(tuple(int(j) for j in tight))
    return VertexSet(verts, tuple(actives))


def _qhull_dual_vertices(points):
    from scipy.spatial import ConvexHull, QhullError

    k = points.shape[0]
    if k == 1:
        lo, hi = points.min(), points.max()
        return [((int(np.argmin(points[0])),), np.array([1.0 / lo])),
                ((int(np.argmax(points[0])),), np.array([1.0 / hi]))]
    try:
        hull = ConvexHull(points.T)
    except QhullError as exc:
        raise UnboundedError(f"convex hull is degenerate: {exc}") from exc
    found = []
    for simplex, eq in zip(hull.simplices, hull.equations):
        a, b = eq[:-1], eq[-1]
        if b >= 0:
            raise UnboundedError("origin is not in the interior of conv(points)")
        found.append((tuple(sorted(int(s) for s in simplex)), a / (-b)))
    found.sort(key=lambda item: item[0])
    return found


def dual_vertices(points, method="auto"):
    """Vertices of the dual polytope ``{theta : points.T @ theta <= 1}``.

    Each vertex ``theta`` corresponds to the facet ``{x : theta.T x = 1}`` of
    ``conv(points)``.

    Parameters
    ----------
    points : ndarray, shape (k, n)
        Points whose convex hull contains the origin in its interior.
    method : {'auto', 'enumerate', 'qhull'}
        ``enumerate`` solves every ``k x k`` subsystem. ``qhull`` reads the
        facets from ``scipy.spatial.ConvexHull``. ``auto`` enumerates while
        the number of subsets stays below 200k.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    k, n = points.shape
    if k < 1:
        raise ValueError("points must have at least one row")
    if not is_bounded(points):
        raise UnboundedError("dual polytope is unbounded: origin is not interior to conv(points)")
    if method == "auto":
        method = "enumerate" if comb(n, k) <= 200_000 else "qhull"
    offsets = np.ones(n)
    if method == "enumerate":
        found = _subset_vertices(points, offsets)
    elif method == "qhull":
        found = _qhull_dual_vertices(points)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _dedup(found, points, offsets)


def count_on_facet(points, theta, gamma=0.0):
    """Indices ``j`` with ``|points[:, j] @ theta - 1| <= gamma``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return np.flatnonzero(np.abs(theta @ points - 1.0) <= gamma)


def is_bounded(normals):
    """True iff ``{x : normals.T x <= q}`` is bounded (for any feasible ``q``).

    Equivalent to the positive hull of the normal columns spanning the whole
    space; decided by maximizing each signed coordinate over
    ``{x : normals.T x <= 1}``.
    """
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    k, t = normals.shape
    if t < k + 1:
        return False
    bounds = [(None, None)] * k
    ones = np.ones(t)
    for i in range(k):
        for sign in (1.0, -1.0):
            c = np.zeros(k)
            c[i] = -sign
            res = solve_lp(c, normals.T, ["<="] * t, ones, bounds)
            if res.status != "optimal":
                return False
    return True


def enumerate_vertices(p):
    """All vertices of a bounded, nonempty polytope."""
    if not isinstance(p, Polytope):
        p = Polytope(*p)
    if not is_bounded(p.normals):
        raise UnboundedError("polyhedron is unbounded; cannot enumerate a finite vertex set")
    found = _subset_vertices(p.normals, p.offsets)
    vs = _dedup(found, p.normals, p.offsets)
    if len(vs) == 0:
        raise EmptyPolytopeError("polytope is empty")
    return vs


def intersect_facets(p, r):
    """Vertices of a simplex given by ``r`` facets in dimension ``r - 1``.

    Column ``k`` of the result solves the system formed by every facet except
    facet ``k``. Other shapes are delegated to :func:`enumerate_vertices`.
    """
    if not isinstance(p, Polytope):
        p = Polytope(*p)
    k, t = p.normals.shape
    if not (t == r and k == r - 1):
        return enumerate_vertices(p).vertices
    out = np.empty((k, r))
    for j in range(r):
        rows = [i for i in range(r) if i != j]
        a = p.normals[:, rows].T
        if np.linalg.matrix_rank(a) < k:
            raise np.linalg.LinAlgError(f"facet normals {tuple(rows)} are linearly dependent")
        out[:, j] = np.linalg.solve(a, p.offsets[rows])
    return out

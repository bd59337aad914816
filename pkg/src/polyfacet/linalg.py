"""Dense linear-algebra helpers and the centering/projection preprocessing.

Data matrices follow the column convention used throughout the package:
an ``m x n`` array whose columns are the observations.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "SvdResult",
    "ReducedData",
    "svd",
    "numerical_rank",
    "as_data_matrix",
    "preprocess",
    "restore",
    "project_simplex",
    "project_simplex_columns",
]

RANK_RTOL = 1e-12
DUPLICATE_RTOL = 1e-9


@dataclass(frozen=True)
class SvdResult:
    left: np.ndarray
    singular: np.ndarray
    right: np.ndarray

    @property
    def rank(self):
        return self.singular.size


@dataclass(frozen=True)
class ReducedData:
    """Centered data expressed in an orthonormal basis of its affine hull.

    Attributes
    ----------
    reduced : ndarray, shape (d - 1, n)
        Coordinates of the retained columns, ``basis.T @ (x - centroid)``.
    basis : ndarray, shape (m, d - 1)
        Orthonormal basis of the centered column space.
    centroid : ndarray, shape (m,)
        Mean of the retained columns.
    d : int
        Rank used for the reduction (the affine dimension is ``d - 1``).
    kept : ndarray of int
        Indices of the original columns that survived zero/duplicate removal.
    """

    reduced: np.ndarray
    basis: np.ndarray
    centroid: np.ndarray
    d: int
    kept: np.ndarray

    @property
    def n(self):
        return self.reduced.shape[1]

    def reconstruct(self, j):
        return self.basis @ self.reduced[:, j] + self.centroid

    def to_reduced(self, x):
        """Map arbitrary columns of the original space into reduced coordinates."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self.basis.T @ (x - self.centroid)
        return self.basis.T @ (x - self.centroid[:, None])


def as_data_matrix(x, name="x"):
    """Validate a dense ``m x n`` data matrix and return it as float64."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got ndim={x.ndim}")
    if x.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def numerical_rank(singular, shape):
    if singular.size == 0 or singular[0] == 0.0:
        return 0
    tol = max(shape) * singular[0] * RANK_RTOL
    return int(np.sum(singular > tol))


def svd(a, k=None):
    """Compact SVD truncated to ``k`` components or to the numerical rank.

    The numerical rank uses the threshold ``max(m, n) * s1 * 1e-12``.
    """
    a = as_data_matrix(a, "a")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    rank = numerical_rank(s, a.shape)
    if k is not None:
        if k < 1:
            raise ValueError("rank cap k must be positive")
        rank = min(int(k), s.size)
    return SvdResult(left=u[:, :rank], singular=s[:rank], right=vt[:rank].T)


def _unique_nonzero_columns(x):
    norms = np.linalg.norm(x, axis=0)
    nonzero = np.flatnonzero(norms > 0.0)
    if nonzero.size < 2:
        return nonzero
    tree = cKDTree(x[:, nonzero].T)
    pairs = tree.query_pairs(DUPLICATE_RTOL * norms[nonzero].max(), output_type="ndarray")
    drop = set()
    for a, b in pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]:
        i, j = nonzero[a], nonzero[b]
        if i in drop:
            continue
        if np.linalg.norm(x[:, i] - x[:, j]) <= DUPLICATE_RTOL * max(norms[i], norms[j]):
            drop.add(j)
    return np.asarray([j for j in nonzero if j not in drop], dtype=int)


def preprocess(x, d=None, dedup=True):
    """Remove zero and duplicated columns, center, and project to ``d - 1`` dimensions.

    Parameters
    ----------
    x : array_like, shape (m, n)
        Data matrix, one observation per column.
    d : int, optional
        Rank of ``x``. When omitted it is estimated as one plus the numerical
        rank of the centered data.
    dedup : bool
        Drop duplicated columns (relative tolerance 1e-9).

    Returns
    -------
    ReducedData
    """
    x = as_data_matrix(x)
    if dedup:
        kept = _unique_nonzero_columns(x)
    else:
        kept = np.flatnonzero(np.linalg.norm(x, axis=0) > 0.0)
    if kept.size == 0:
        raise ValueError("all columns of x are zero")
    xk = x[:, kept]
    centroid = xk.mean(axis=1)
    centered = xk - centroid[:, None]
    if not np.any(centered):
        raise ValueError("rank of the centered data is < 2 (all retained columns coincide)")
    dec = svd(centered, None if d is None else d - 1)
    if d is None:
        d = dec.rank + 1
    if d - 1 < 1 or dec.rank < 1:
        raise ValueError("rank of the centered data is < 2")
    basis = dec.left
    reduced = dec.singular[:, None] * dec.right.T
    return ReducedData(reduced=reduced, basis=basis, centroid=centroid, d=int(d), kept=kept)


def restore(w_reduced, rd):
    """Map reduced-space columns back to the original space."""
    w_reduced = np.asarray(w_reduced, dtype=float)
    if w_reduced.ndim == 1:
        w_reduced = w_reduced[:, None]
    if w_reduced.shape[0] != rd.basis.shape[1]:
        raise ValueError(
            f"expected {rd.basis.shape[1]} rows in reduced space, got {w_reduced.shape[0]}"
        )
    return rd.basis @ w_reduced + rd.centroid[:, None]


def project_simplex(v):
    """Euclidean projection of a vector onto the unit simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / idx > 0)[-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def project_simplex_columns(a):
    """Project every column of ``a`` onto the unit simplex."""
    a = np.asarray(a, dtype=float)
    r, n = a.shape
    u = -np.sort(-a, axis=0)
    css = np.cumsum(u, axis=0) - 1.0
    idx = np.arange(1, r + 1)[:, None]
    cond = u - css / idx > 0
    rho = r - 1 - np.argmax(cond[::-1], axis=0)
    tau = css[rho, np.arange(n)] / (rho + 1.0)
    return np.maximum(a - tau[None, :], 0.0)

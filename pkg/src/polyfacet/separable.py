"""Separable NMF baselines: SPA and SNPA."""

from dataclasses import dataclass

import numpy as np

from .linalg import as_data_matrix
from .metrics import estimate_h

__all__ = ["SeparableResult", "spa", "snpa"]

COLLAPSE_RTOL = 1e-10


@dataclass
class SeparableResult:
    indices: np.ndarray
    w: np.ndarray
    residual_norms: np.ndarray


def _check(x, r):
    x = as_data_matrix(x)
    if not 1 <= r <= x.shape[1]:
        raise ValueError(f"r must lie in [1, n] = [1, {x.shape[1]}], got {r}")
    return x


def _pick(norms2, scale2, step, name):
    j = int(np.argmax(norms2))  # first maximum: lowest index on ties
    if norms2[j] <= (COLLAPSE_RTOL**2) * scale2:
        raise ValueError(f"{name}: residual is numerically zero after {step} selections")
    return j


def spa(x, r):
    """Successive projection algorithm.

    Picks the column of largest residual norm, then projects every column
    onto the orthogonal complement of the pick.
    """
    x = _check(x, r)
    res = x.copy()
    scale2 = float(np.max(np.sum(x * x, axis=0)))
    idx, norms = [], []
    for step in range(r):
        n2 = np.sum(res * res, axis=0)
        j = _pick(n2, scale2, step, "spa")
        idx.append(j)
        norms.append(np.sqrt(n2[j]))
        u = res[:, j] / np.linalg.norm(res[:, j])
        res -= np.outer(u, u @ res)
    idx = np.array(idx)
    return SeparableResult(indices=idx, w=x[:, idx], residual_norms=np.array(norms))


def snpa(x, r, tol=1e-9, max_iter=500):
    """Successive nonnegative projection algorithm.

    The residual of each column is its distance to
    ``{W h : h >= 0, sum(h) <= 1}`` for the current selection ``W``; allowing
    ``sum(h) < 1`` keeps the selected residual norms decreasing.
    """
    x = _check(x, r)
    res = x
    scale2 = float(np.max(np.sum(x * x, axis=0)))
    idx, norms = [], []
    h = None
    for step in range(r):
        n2 = np.sum(res * res, axis=0)
        if idx:
            n2[idx] = 0.0
        j = _pick(n2, scale2, step, "snpa")
        idx.append(j)
        norms.append(np.sqrt(n2[j]))
        w = x[:, idx]
        h0 = None if h is None else np.vstack([h, np.zeros((1, x.shape[1]))])
        h = estimate_h(x, w, sum_to_one=False, tol=tol, max_iter=max_iter, h0=h0)
        res = x - w @ h
    idx = np.array(idx)
    return SeparableResult(indices=idx, w=x[:, idx], residual_norms=np.array(norms))

"""scikit-learn style wrappers around GFPI, BFPI, SPA and SNPA.

Estimators follow the scikit-learn orientation: ``X`` has shape
``(n_samples, n_features)``, so each row is one data point (a column of the
matrix factorized by the functional API). ``components_`` holds one
endmember per row and ``transform`` returns abundances of shape
``(n_samples, n_components)`` whose rows lie on the unit simplex.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import separable
from .fpi import GfpiParams, bfpi, gfpi
from .metrics import estimate_h

__all__ = ["GFPI", "BFPI", "SPA", "SNPA"]


class _SimplexFactorization(TransformerMixin, BaseEstimator):
    """Shared ``transform`` / ``inverse_transform`` for the estimators below."""

    def _validate(self, X, reset):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2, ensure_min_features=1)
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, the estimator was fitted with {self.n_features_in_}")
        return X

    def _store(self, w):
        self.components_ = np.asarray(w, dtype=float).T
        self.n_components_ = self.components_.shape[0]

    def transform(self, X):
        """Abundances of ``X`` on the fitted endmembers.

        Parameters
        ----------
        X : array-like, shape (n_samples, n_features)

        Returns
        -------
        ndarray, shape (n_samples, n_components)
            Rows lie on the unit simplex.
        """
        check_is_fitted(self, "components_")
        X = self._validate(X, reset=False)
        return estimate_h(X.T, self.components_.T).T

    def inverse_transform(self, H):
        check_is_fitted(self, "components_")
        H = check_array(H, dtype=np.float64)
        return H @ self.components_


class GFPI(_SimplexFactorization):
    """Greedy facet-based polytope identification.

    Parameters mirror :class:`polyfacet.fpi.GfpiParams`; ``n_components`` is
    the number of facets ``T`` to extract.

    Attributes
    ----------
    components_ : ndarray, shape (n_vertices, n_features)
    facets_ : list of FacetRecord
    score_ : int
        Total number of points on the extracted facets.
    meta_ : dict
    """

    def __init__(self, n_components=3, dim=None, gamma=0.001, eta=0.5, lam=1000.0, big_m=10.0,
                 epsilon=0.1, time_limit=10.0, eta_retries=6, node_limit=None, anchor_mode="mean",
                 backend="builtin", inlier_passes=0):
        self.n_components = n_components
        self.dim = dim
        self.gamma = gamma
        self.eta = eta
        self.lam = lam
        self.big_m = big_m
        self.epsilon = epsilon
        self.time_limit = time_limit
        self.eta_retries = eta_retries
        self.node_limit = node_limit
        self.anchor_mode = anchor_mode
        self.backend = backend
        self.inlier_passes = inlier_passes

    def _params(self):
        return GfpiParams(t_facets=self.n_components, dim=self.dim, gamma=self.gamma, eta=self.eta,
                          lam=self.lam, big_m=self.big_m, epsilon=self.epsilon,
                          time_limit=self.time_limit, eta_retries=self.eta_retries,
                          node_limit=self.node_limit, anchor_mode=self.anchor_mode,
                          backend=self.backend, inlier_passes=self.inlier_passes)

    def fit(self, X, y=None):
        """Identify the enclosing polytope of the rows of ``X``."""
        X = self._validate(X, reset=True)
        fp = gfpi(X.T, self._params())
        self._store(fp.w)
        self.facets_ = fp.meta["facets"]
        self.score_ = fp.meta["score"]
        self.meta_ = fp.meta
        return self


class BFPI(_SimplexFactorization):
    """Brute-force facet identification keeping facets with at least ``s`` points."""

    def __init__(self, s=3, dim=None):
        self.s = s
        self.dim = dim

    def fit(self, X, y=None):
        X = self._validate(X, reset=True)
        fp = bfpi(X.T, self.s, d=self.dim)
        self._store(fp.w)
        self.score_ = fp.meta["score"]
        self.meta_ = fp.meta
        return self


class SPA(_SimplexFactorization):
    """Successive projection algorithm; ``components_`` are rows of ``X``.

    Attributes
    ----------
    indices_ : ndarray of int
        Selected sample indices, in selection order.
    """

    def __init__(self, n_components=3):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = self._validate(X, reset=True)
        res = separable.spa(X.T, self.n_components)
        self._store(res.w)
        self.indices_ = res.indices
        self.residual_norms_ = res.residual_norms
        return self


class SNPA(_SimplexFactorization):
    """Successive nonnegative projection algorithm."""

    def __init__(self, n_components=3, tol=1e-9, max_iter=500):
        self.n_components = n_components
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = self._validate(X, reset=True)
        res = separable.snpa(X.T, self.n_components, tol=self.tol, max_iter=self.max_iter)
        self._store(res.w)
        self.indices_ = res.indices
        self.residual_norms_ = res.residual_norms
        return self

"""The facet-identification mixed-integer program.

Variables are laid out as ``[theta (k), delta (n), y (n)]`` where ``k`` is the
reduced dimension. When a boundedness record is attached, ``theta`` is
replaced by the multipliers ``mu`` of ``theta = -P @ mu`` with ``mu >= eps``.

Rows, in order::

    x_j . theta - delta_j            <= 1            (dual space)
    x_j . theta + A y_j              >= 1 - gamma    (points on the facet)
    m_k . theta                      <= 1 - gamma - eta   (previous facets)
    delta_j - A y_j                  <= gamma        (outliers)
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BoundednessRecord",
    "MipInstance",
    "MipSolution",
    "build_facet_mip",
    "write_lp_format",
]

THETA_BOUND = 1e4
MEMBER_TOL = 1e-7
FEAS_TOL = 1e-7


@dataclass(frozen=True)
class BoundednessRecord:
    """Forces ``theta = -prior_normals @ mu`` with every ``mu_i >= epsilon``."""

    prior_normals: np.ndarray
    epsilon: float = 0.1

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.prior_normals, dtype=float))
        object.__setattr__(self, "prior_normals", p)
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass
class MipInstance:
    points: np.ndarray
    gamma: float
    lam: float
    big_m: float
    cut_points: np.ndarray = None
    eta: float = 0.0
    boundedness: BoundednessRecord | None = None
    theta_bound: float = THETA_BOUND

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        k = self.points.shape[0]
        if self.cut_points is None:
            self.cut_points = np.zeros((k, 0))
        self.cut_points = np.asarray(self.cut_points, dtype=float).reshape(k, -1) \
            if np.size(self.cut_points) else np.zeros((k, 0))
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.big_m <= self.gamma:
            raise ValueError("big_m must exceed gamma")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.boundedness is not None and self.boundedness.prior_normals.shape[0] != k:
            raise ValueError("prior normals must live in the reduced space")

    @property
    def n(self):
        return self.points.shape[1]

    @property
    def dim(self):
        return self.points.shape[0]

    @property
    def n_cuts(self):
        return self.cut_points.shape[1]

    @property
    def n_free(self):
        """Number of continuous variables standing in for ``theta``."""
        if self.boundedness is not None:
            return self.boundedness.prior_normals.shape[1]
        return self.dim

    @property
    def n_vars(self):
        return self.n_free + 2 * self.n

    @property
    def n_constraints(self):
        return 3 * self.n + self.n_cuts

    @property
    def n_binaries(self):
        return self.n

    def y_slice(self):
        return slice(self.n_free + self.n, self.n_vars)

    def delta_slice(self):
        return slice(self.n_free, self.n_free + self.n)

    def theta_map(self):
        """Matrix ``T`` with ``theta = T @ free_vars``."""
        if self.boundedness is None:
            return np.eye(self.dim)
        return -self.boundedness.prior_normals

    def theta_of(self, v):
        return self.theta_map() @ np.asarray(v)[: self.n_free]

    def free_of_theta(self, theta):
        """Recover the free variables from ``theta``; None if not representable."""
        theta = np.asarray(theta, dtype=float)
        if self.boundedness is None:
            return theta.copy()
        tm = self.theta_map()
        mu, *_ = np.linalg.lstsq(tm, theta, rcond=None)
        if np.linalg.norm(tm @ mu - theta) > 1e-8 * max(1.0, np.linalg.norm(theta)):
            return None
        return mu

    def relaxation(self):
        """LP relaxation data ``(c, a, senses, b, lower, upper)``."""
        n, nf = self.n, self.n_free
        xs = self.points.T @ self.theta_map()
        a = np.zeros((self.n_constraints, self.n_vars))
        b = np.empty(self.n_constraints)
        senses = []
        rows = np.arange(n)
        dcol = nf + rows
        ycol = nf + n + rows
        a[rows, :nf] = xs
        a[rows, dcol] = -1.0
        b[:n] = 1.0
        senses += ["<="] * n
        r2 = n + rows
        a[r2, :nf] = xs
        a[r2, ycol] = self.big_m
        b[n:2 * n] = 1.0 - self.gamma
        senses += [">="] * n
        if self.n_cuts:
            r3 = 2 * n + np.arange(self.n_cuts)
            a[r3, :nf] = self.cut_points.T @ self.theta_map()
            b[r3] = 1.0 - self.gamma - self.eta
            senses += ["<="] * self.n_cuts
        r4 = 2 * n + self.n_cuts + rows
        a[r4, dcol] = 1.0
        a[r4, ycol] = -self.big_m
        b[r4] = self.gamma
        senses += ["<="] * n
        c = np.zeros(self.n_vars)
        c[dcol] = self.lam
        c[ycol] = 1.0
        lower = np.zeros(self.n_vars)
        upper = np.full(self.n_vars, np.inf)
        if self.boundedness is None:
            lower[:nf] = -self.theta_bound
            upper[:nf] = self.theta_bound
        else:
            lower[:nf] = self.boundedness.epsilon
            upper[:nf] = self.theta_bound
        upper[ycol] = 1.0
        return c, a, senses, b, lower, upper

    def evaluate(self, theta, tol=MEMBER_TOL):
        """Best completion ``(y, delta)`` for a fixed ``theta``.

        Returns ``(objective, y, delta)`` or ``None`` when ``theta`` violates a
        constraint that no choice of ``y`` and ``delta`` can repair.
        """
        theta = np.asarray(theta, dtype=float)
        if np.any(np.abs(theta) > self.theta_bound * (1 + 1e-12)) and self.boundedness is None:
            return None
        if self.boundedness is not None:
            mu = self.free_of_theta(theta)
            if mu is None or np.any(mu < self.boundedness.epsilon - FEAS_TOL):
                return None
        if self.n_cuts and np.any(theta @ self.cut_points > 1.0 - self.gamma - self.eta + FEAS_TOL):
            return None
        s = theta @ self.points
        if np.any(s < 1.0 - self.gamma - self.big_m - FEAS_TOL) or \
                np.any(s > 1.0 + self.gamma + self.big_m + FEAS_TOL):
            return None
        on = np.abs(s - 1.0) <= self.gamma + tol
        y = (~on).astype(float)
        delta = np.maximum(s - 1.0, 0.0)
        return float(y.sum() + self.lam * delta.sum()), y, delta

    def evaluate_many(self, thetas, tol=MEMBER_TOL):
        """Vectorized objective for candidate columns of ``thetas`` (inf if infeasible)."""
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        s = thetas.T @ self.points
        ok = np.all(s >= 1.0 - self.gamma - self.big_m - FEAS_TOL, axis=1)
        ok &= np.all(s <= 1.0 + self.gamma + self.big_m + FEAS_TOL, axis=1)
        if self.n_cuts:
            ok &= np.all(thetas.T @ self.cut_points <= 1.0 - self.gamma - self.eta + FEAS_TOL, axis=1)
        if self.boundedness is None:
            ok &= np.all(np.abs(thetas) <= self.theta_bound, axis=0)
        else:
            tm = self.theta_map()
            mu, *_ = np.linalg.lstsq(tm, thetas, rcond=None)
            resid = np.linalg.norm(tm @ mu - thetas, axis=0)
            ok &= resid <= 1e-8 * np.maximum(1.0, np.linalg.norm(thetas, axis=0))
            ok &= np.all(mu >= self.boundedness.epsilon - FEAS_TOL, axis=0)
        off = np.abs(s - 1.0) > self.gamma + tol
        obj = off.sum(axis=1) + self.lam * np.maximum(s - 1.0, 0.0).sum(axis=1)
        return np.where(ok, obj, np.inf)


@dataclass
class MipSolution:
    """Result of a facet MIP solve.

    ``status`` is one of ``optimal``, ``feasible`` (stopped early with an
    incumbent; see ``gap``), ``infeasible`` or ``time_limit``.
    """

    theta: np.ndarray | None
    membership: np.ndarray
    slacks: np.ndarray | None
    objective: float
    status: str
    nodes_explored: int = 0
    wall_time: float = 0.0
    lower_bound: float = -np.inf
    y: np.ndarray | None = None
    history: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def gap(self):
        if self.theta is None or not np.isfinite(self.lower_bound):
            return np.inf
        return max(0.0, self.objective - self.lower_bound) / max(1.0, abs(self.objective))

    @property
    def has_solution(self):
        return self.theta is not None


def build_facet_mip(rd, params, cuts=None, last_facet=None):
    """Assemble the facet MIP for reduced data and GFPI parameters.

    Parameters
    ----------
    rd : ReducedData or ndarray
        Reduced data (or the ``(d-1) x n`` matrix itself).
    params : object
        Anything with ``gamma``, ``lam``, ``big_m`` and ``eta`` attributes.
    cuts : ndarray, shape (d-1, t), optional
        Anchors of previously extracted facets.
    last_facet : BoundednessRecord, optional
        Adds the boundedness constraint used for the final facet.
    """
    points = rd.reduced if hasattr(rd, "reduced") else np.asarray(rd, dtype=float)
    points = np.atleast_2d(points)
    k = points.shape[0]
    if cuts is not None and np.size(cuts):
        cuts = np.asarray(cuts, dtype=float)
        if cuts.ndim == 1:
            cuts = cuts[:, None]
        if cuts.shape[0] != k:
            raise ValueError(f"cut points have {cuts.shape[0]} rows, expected {k}")
    else:
        cuts = np.zeros((k, 0))
    if last_facet is not None and last_facet.prior_normals.shape[0] != k:
        raise ValueError("boundedness normals have the wrong dimension")
    return MipInstance(points=points, gamma=params.gamma, lam=params.lam, big_m=params.big_m,
                       cut_points=cuts, eta=params.eta, boundedness=last_facet)


def write_lp_format(inst, fh):
    """Dump an instance in CPLEX LP text format for cross-checking with other solvers."""
    c, a, senses, b, lower, upper = inst.relaxation()
    names = ([f"t{i}" for i in range(inst.n_free)] + [f"d{j}" for j in range(inst.n)]
             + [f"y{j}" for j in range(inst.n)])

    def expr(coefs):
        terms = []
        for v, name in zip(coefs, names):
            if v != 0:
                terms.append(f"{'+' if v > 0 else '-'} {abs(v):.17g} {name}")
        return " ".join(terms) if terms else "0 t0"

    fh.write("\\ facet identification MIP\nMinimize\n obj: " + expr(c) + "\nSubject To\n")
    for i, (row, s, rhs) in enumerate(zip(a, senses, b)):
        fh.write(f" c{i}: {expr(row)} {s} {rhs:.17g}\n")
    fh.write("Bounds\n")
    for name, lo, hi in zip(names, lower, upper):
        lo_s = "-inf" if not np.isfinite(lo) else f"{lo:.17g}"
        hi_s = "+inf" if not np.isfinite(hi) else f"{hi:.17g}"
        fh.write(f" {lo_s} <= {name} <= {hi_s}\n")
    fh.write("Binaries\n " + " ".join(names[inst.n_free + inst.n:]) + "\nEnd\n")

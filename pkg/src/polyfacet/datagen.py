"""Synthetic SSMF data with a known number of points on every facet.

Random streams are split with ``SeedSequence([seed, stream, column])`` and the
counter-based Philox generator, so resampling one column never shifts the
draws of another. Streams: 0 for ``W``, 1 for ``H`` columns, 2 for noise,
3 for outliers.
"""

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .io import write_json, write_matrix

__all__ = [
    "SynthConfig",
    "GroundTruth",
    "sample_dirichlet",
    "generate",
    "rank_deficient_fixture",
    "purity_of",
    "noise_variance",
    "RANK_DEFICIENT_W",
    "write_dataset",
]

MAX_REJECTIONS = 100_000
INTERIOR = -1
OUTLIER = -2

RANK_DEFICIENT_W = np.array([
    [1.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 1.0],
    [0.0, 1.0, 1.0, 0.0],
    [1.0, 0.0, 0.0, 1.0],
])

_W_STREAM, _H_STREAM, _NOISE_STREAM, _OUTLIER_STREAM = 0, 1, 2, 3


def _rng(seed, *keys):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *keys])))


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic generator.

    ``snr`` is in dB; ``float('inf')`` means noiseless. ``cond_cap`` defaults
    to ``10 * r``.
    """

    r: int = 3
    m: int = 3
    n1: int = 30
    n2: int = 10
    purity: float = 1.0
    snr: float = float("inf")
    outliers: int = 0
    seed: int = 0
    cond_cap: float | None = None

    def __post_init__(self):
        if self.r < 3:
            raise ValueError("r must be at least 3 (facets need r - 1 >= 2 nonzeros)")
        if self.m < self.r - 1:
            raise ValueError(f"m = {self.m} must be at least r - 1 = {self.r - 1}")
        if self.n1 < self.r:
            raise ValueError(f"n1 = {self.n1} must be at least r = {self.r} points per facet")
        if self.n2 < 0 or self.outliers < 0:
            raise ValueError("n2 and outliers must be nonnegative")
        if not (1.0 / (self.r - 1) < self.purity <= 1.0):
            raise ValueError(
                f"purity {self.purity} infeasible: must lie in (1/(r-1), 1] = ({1 / (self.r - 1):.4g}, 1]"
            )
        if self.cond_cap is not None and self.cond_cap <= 1:
            raise ValueError("cond_cap must exceed 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def cap(self):
        return 10.0 * self.r if self.cond_cap is None else float(self.cond_cap)

    @property
    def n_clean(self):
        return self.r * self.n1 + self.n2

    def to_dict(self):
        return asdict(self)


@dataclass
class GroundTruth:
    """A generated instance.

    ``h_true`` covers the clean columns only; outliers (flagged ``-2`` in
    ``facet_assignment``) are appended after them in ``x``. Facet ``k`` is the
    facet opposite vertex ``k``; interior columns are flagged ``-1``.
    """

    x: np.ndarray
    w_true: np.ndarray
    h_true: np.ndarray
    facet_assignment: np.ndarray
    noise_sigma: float
    config: dict = field(default_factory=dict)

    @property
    def n_clean(self):
        return self.h_true.shape[1]

    @property
    def x_clean(self):
        return self.w_true @ self.h_true


def sample_dirichlet(alpha, rng):
    """One draw from Dirichlet(alpha) by normalizing independent Gamma variables."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if np.any(alpha <= 0):
        raise ValueError("Dirichlet parameters must be positive")
    while True:
        g = rng.standard_gamma(alpha)
        total = g.sum()
        if total > 0:
            return g / total


def purity_of(h):
    """Smallest row maximum of ``h``."""
    h = np.atleast_2d(np.asarray(h, dtype=float))
    if h.size == 0:
        raise ValueError("h is empty")
    return float(h.max(axis=1).min())


def noise_variance(x, snr):
    """Gaussian noise variance that realizes ``snr`` dB on ``x``."""
    x = np.asarray(x, dtype=float)
    if not np.isfinite(snr):
        return 0.0
    return float(np.sum(x**2) / (10.0 ** (snr / 10.0) * x.size))


def _capped_column(alpha, support, r, purity, rng, what):
    col = np.zeros(r)
    for _ in range(MAX_REJECTIONS):
        v = sample_dirichlet(alpha, rng)
        if v.max() <= purity:
            col[support] = v
            return col
    raise RuntimeError(
        f"purity {purity}: {MAX_REJECTIONS} rejections for a {what} column; "
        "raise the purity or lower the Dirichlet concentration"
    )


def _draw_w(cfg):
    rng = _rng(cfg.seed, _W_STREAM)
    check = cfg.m >= cfg.r
    for _ in range(10_000):
        w = rng.uniform(0.0, 1.0, size=(cfg.m, cfg.r))
        if not check or np.linalg.cond(w) <= cfg.cap:
            return w
    raise RuntimeError(f"no W with condition number <= {cfg.cap} after 10000 draws")


def generate(cfg):
    """Generate ``X = W H`` (+ noise, + outliers) for a :class:`SynthConfig`."""
    r = cfg.r
    w = _draw_w(cfg)
    # concentrated facet weights when plain Dirichlet(1/(r-1)) would reject almost everything
    a1 = 1000.0 / (r - 1) if cfg.purity <= 0.3 else 1.0 / (r - 1)
    a2 = 1.0 / r
    cols, assign = [], []
    j = 0
    for k in range(r):
        support = [i for i in range(r) if i != k]
        for _ in range(cfg.n1):
            rng = _rng(cfg.seed, _H_STREAM, j)
            cols.append(_capped_column(np.full(r - 1, a1), support, r, cfg.purity, rng, "facet"))
            assign.append(k)
            j += 1
    for _ in range(cfg.n2):
        rng = _rng(cfg.seed, _H_STREAM, j)
        cols.append(_capped_column(np.full(r, a2), list(range(r)), r, cfg.purity, rng, "interior"))
        assign.append(INTERIOR)
        j += 1
    h = np.array(cols).T
    x = w @ h
    var = noise_variance(x, cfg.snr)
    sigma = float(np.sqrt(var))
    if sigma > 0:
        noise = np.column_stack([_rng(cfg.seed, _NOISE_STREAM, c).standard_normal(cfg.m)
                                 for c in range(x.shape[1])])
        x = x + sigma * noise
    if cfg.outliers:
        out = np.column_stack([_rng(cfg.seed, _OUTLIER_STREAM, c).uniform(0.0, 1.0, cfg.m)
                               for c in range(cfg.outliers)])
        x = np.hstack([x, out])
        assign += [OUTLIER] * cfg.outliers
    return GroundTruth(x=x, w_true=w, h_true=h, facet_assignment=np.array(assign),
                       noise_sigma=sigma, config=cfg.to_dict())


def rank_deficient_fixture(purity=0.8, noise_sigma=0.01, n=200, seed=0):
    """The 4x4 rank-3 benchmark: Dirichlet(0.1) weights capped at ``purity``."""
    r = RANK_DEFICIENT_W.shape[1]
    if not (1.0 / r < purity <= 1.0):
        raise ValueError(f"purity must lie in (1/{r}, 1]")
    cols = []
    for j in range(n):
        rng = _rng(seed, _H_STREAM, j)
        cols.append(_capped_column(np.full(r, 0.1), list(range(r)), r, purity, rng, "mixture"))
    h = np.array(cols).T
    x = RANK_DEFICIENT_W @ h
    if noise_sigma > 0:
        noise = np.column_stack([_rng(seed, _NOISE_STREAM, c).standard_normal(r) for c in range(n)])
        x = x + noise_sigma * noise
    cfg = {"fixture": "rank_deficient", "purity": purity, "noise_sigma": noise_sigma,
           "n": n, "seed": seed}
    return GroundTruth(x=x, w_true=RANK_DEFICIENT_W.copy(), h_true=h,
                       facet_assignment=np.full(n, INTERIOR), noise_sigma=float(noise_sigma),
                       config=cfg)


def write_dataset(gt, directory):
    """Write X.csv, W_true.csv, H_true.csv and meta.json into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_matrix(d / "X.csv", gt.x)
    write_matrix(d / "W_true.csv", gt.w_true)
    write_matrix(d / "H_true.csv", gt.h_true)
    meta = {
        "config": gt.config,
        "noise_sigma": gt.noise_sigma,
        "noise_variance": gt.noise_sigma**2,
        "n_clean": gt.n_clean,
        "facet_assignment": gt.facet_assignment,
        "purity": purity_of(gt.h_true),
    }
    write_json(d / "meta.json", meta)
    return d

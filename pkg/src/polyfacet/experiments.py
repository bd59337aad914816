"""Experiment harness: parameter sweeps over synthetic data and cube unmixing.

A sweep is described by a JSON-compatible dict::

    {
      "algorithm": "gfpi",                      # or "snpa", "spa"
      "data": {"r": 3, "m": 3, "snr": 40},      # SynthConfig fields
      "params": {"preset": "snr40", "time_limit": 1.0},  # GfpiParams fields
      "grid": {"eta": [0.1, 0.5], "lam": [0.5, 2.5]},
      "seeds": 10                               # or an explicit list
    }

Grid keys may name a ``SynthConfig`` field or a ``GfpiParams`` field. Every
(cell, seed) pair is one task; tasks run in a process pool and a single
writer appends rows in task order, so the CSV does not depend on scheduling.
"""

import csv
import itertools
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import separable
from .datagen import SynthConfig, generate
from .fpi import GfpiParams, gfpi
from .linalg import as_data_matrix
from .metrics import err, estimate_h, mrsa_matrix

__all__ = ["THREADS_ENV", "default_workers", "parse_preset", "expand_sweep", "run_cell", "sweep",
           "CubeResult", "unmix_cube"]

THREADS_ENV = "POLYFACET_THREADS"
ALGORITHMS = ("gfpi", "snpa", "spa")
_DATA_FIELDS = {f.name for f in fields(SynthConfig)}
_PARAM_FIELDS = {f.name for f in fields(GfpiParams)}
BASE_COLUMNS = ["cell", "seed", "algorithm", "status", "err", "mrsa", "score", "n_facets",
                "wall_time", "message"]


def default_workers():
    """Worker count from ``POLYFACET_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"{THREADS_ENV}={raw!r} is not an integer") from exc
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be at least 1")
    return n


def parse_preset(name):
    """``'snr40'`` -> 40.0, ``'snrinf'`` -> inf."""
    if not isinstance(name, str) or not name.lower().startswith("snr"):
        raise ValueError(f"preset must look like 'snr40' or 'snrinf', got {name!r}")
    tail = name[3:]
    try:
        return float(tail)
    except ValueError as exc:
        raise ValueError(f"bad preset {name!r}") from exc


def make_params(params, r):
    """Build :class:`GfpiParams` from a dict that may contain a ``preset`` key."""
    params = dict(params)
    preset = params.pop("preset", None)
    unknown = set(params) - _PARAM_FIELDS
    if unknown:
        raise ValueError(f"unknown GFPI parameters: {sorted(unknown)}")
    params.setdefault("t_facets", r)
    if preset is None:
        return GfpiParams(**params)
    t = params.pop("t_facets")
    return GfpiParams.from_snr(parse_preset(preset), t, **params)


def expand_sweep(spec):
    """List of ``(cell_index, seed, cell_values)`` tasks for a sweep spec."""
    algo = spec.get("algorithm", "gfpi")
    if algo not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {algo!r}")
    grid = spec.get("grid", {})
    for key, values in grid.items():
        if key == "seed":
            raise ValueError("seeds are set with the 'seeds' key, not in the grid")
        if key not in _DATA_FIELDS | _PARAM_FIELDS:
            raise ValueError(f"grid key {key!r} is neither a data nor a GFPI parameter")
        if not isinstance(values, (list, tuple)) or not values:
            raise ValueError(f"grid values for {key!r} must be a nonempty list")
    seeds = spec.get("seeds", 1)
    seeds = list(range(seeds)) if isinstance(seeds, int) else [int(s) for s in seeds]
    keys = list(grid)
    cells = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    return [(ci, seed, cell) for ci, cell in enumerate(cells) for seed in seeds]


def run_cell(spec, cell, seed):
    """Run one (cell, seed) task and return a result row. Never raises."""
    algo = spec.get("algorithm", "gfpi")
    row = {"seed": seed, "algorithm": algo, **cell}
    t0 = time.perf_counter()
    try:
        data = dict(spec.get("data", {}))
        params = dict(spec.get("params", {}))
        for k, v in cell.items():
            (data if k in _DATA_FIELDS else params)[k] = v
        data["seed"] = seed
        gt = generate(SynthConfig(**data))
        r = gt.w_true.shape[1]
        if algo == "gfpi":
            fp = gfpi(gt.x, make_params(params, r))
            w, score, n_facets = fp.w, fp.meta["score"], fp.meta["n_facets"]
        else:
            res = getattr(separable, algo)(gt.x, r)
            w, score, n_facets = res.w, "", ""
        if w.shape != gt.w_true.shape:
            row.update(status="shape_mismatch", err="", mrsa="",
                       message=f"{w.shape[1]} vertices for r={r}")
        else:
            row.update(status="ok", err=err(gt.w_true, w), mrsa=mrsa_matrix(gt.w_true, w)[0],
                       message="")
        row.update(score=score, n_facets=n_facets)
    except Exception as exc:  # recorded as a failure row, the sweep continues
        row.update(status="failed", err="", mrsa="", score="", n_facets="",
                   message=f"{type(exc).__name__}: {exc}".splitlines()[0])
        row["_trace"] = traceback.format_exc()
    row["wall_time"] = time.perf_counter() - t0
    return row


def _task(args):
    spec, ci, seed, cell = args
    row = run_cell(spec, cell, seed)
    row["cell"] = ci
    return row


def sweep(spec, out_path, workers=None):
    """Run a sweep and write one CSV row per (cell, seed).

    Parameters
    ----------
    spec : dict
        Sweep description (see module docstring).
    out_path : path-like
    workers : int, optional
        Process count; defaults to ``POLYFACET_THREADS`` or 1.

    Returns
    -------
    list of dict
        The rows, in task order.
    """
    tasks = expand_sweep(spec)
    workers = default_workers() if workers is None else int(workers)
    grid_keys = list(spec.get("grid", {}))
    columns = BASE_COLUMNS[:2] + grid_keys + BASE_COLUMNS[2:]
    args = [(spec, ci, seed, cell) for ci, seed, cell in tasks]
    rows = []
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        if workers == 1:
            results = map(_task, args)
            pool = None
        else:
            pool = ProcessPoolExecutor(max_workers=workers)
            results = pool.map(_task, args)  # yields in submission order
        try:
            for row in results:
                writer.writerow(row)
                fh.flush()
                rows.append(row)
        finally:
            if pool is not None:
                pool.shutdown()
    return rows


@dataclass
class CubeResult:
    w: np.ndarray
    h: np.ndarray
    abundance_maps: np.ndarray
    meta: dict


def unmix_cube(cube, width, height, r, params=None):
    """Unmix a ``bands x (width * height)`` cube.

    Pixels are stored row by row: pixel ``(row, col)`` is column
    ``row * width + col``. Returns ``W`` from GFPI, ``H`` from the
    simplex-constrained least squares and one ``height x width`` map per
    endmember.
    """
    cube = as_data_matrix(cube, "cube")
    if width < 1 or height < 1:
        raise ValueError("width and height must be positive")
    if width * height != cube.shape[1]:
        raise ValueError(f"width*height = {width * height} but the cube has {cube.shape[1]} pixels")
    params = GfpiParams(t_facets=r, time_limit=100.0) if params is None else params
    fp = gfpi(cube, params)
    h = estimate_h(cube, fp.w)
    maps = h.reshape(h.shape[0], height, width)
    return CubeResult(w=fp.w, h=h, abundance_maps=maps, meta=fp.meta)

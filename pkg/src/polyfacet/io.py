"""Matrix and metadata files: headerless CSV with 17 significant digits, JSON sidecars."""

import json
from pathlib import Path

import numpy as np

__all__ = ["read_matrix", "write_matrix", "write_json", "read_json", "to_jsonable"]


def read_matrix(path):
    """Read a headerless CSV into a 2-D float array (a single row stays 2-D)."""
    path = Path(path)
    try:
        data = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    except ValueError as exc:
        raise ValueError(f"{path}: not a numeric CSV matrix ({exc})") from exc
    if data.size == 0:
        raise ValueError(f"{path}: empty matrix")
    return data


def write_matrix(path, a):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    np.savetxt(path, a, delimiter=",", fmt="%.17g", encoding="utf-8")


def to_jsonable(obj):
    """Recursively convert numpy values so ``json`` can serialize them."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_jsonable(obj), fh, indent=2)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)

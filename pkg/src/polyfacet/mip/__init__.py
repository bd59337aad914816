"""Facet-identification MIP: model, LP engine, branch-and-bound and backends."""

from .backends import MipSolveError, available_backends, get_backend, register_backend, solve
from .bnb import solve_mip
from .lp import LPNumericalError, LPResult, solve_lp
from .model import BoundednessRecord, MipInstance, MipSolution, build_facet_mip, write_lp_format

__all__ = [
    "BoundednessRecord",
    "LPNumericalError",
    "LPResult",
    "MipInstance",
    "MipSolution",
    "MipSolveError",
    "available_backends",
    "build_facet_mip",
    "get_backend",
    "register_backend",
    "solve",
    "solve_lp",
    "solve_mip",
    "write_lp_format",
]

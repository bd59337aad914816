"""Facet-based polytope identification for simplex-structured matrix factorization.

``X ~ W H`` with the columns of ``H`` on the unit simplex is recovered by
finding the facets of ``conv(W)`` that hold many data points: exhaustively
(:func:`bfpi`) or greedily with one mixed-integer program per facet
(:func:`gfpi`).
"""

__version__ = "0.1.0"

from .datagen import GroundTruth, SynthConfig, generate, rank_deficient_fixture
from .estimators import BFPI, GFPI, SNPA, SPA
from .fpi import FactorPair, FacetRecord, GfpiError, GfpiParams, SNR_PRESETS, bfpi, gfpi
from .linalg import ReducedData, preprocess, restore
from .metrics import check_fbc, err, estimate_h, evaluate, mrsa, re
from .polytope import EmptyPolytopeError, Polytope, UnboundedError, dual_vertices
from .separable import snpa, spa

__all__ = [
    "BFPI",
    "EmptyPolytopeError",
    "FacetRecord",
    "FactorPair",
    "GFPI",
    "GfpiError",
    "GfpiParams",
    "GroundTruth",
    "Polytope",
    "ReducedData",
    "SNPA",
    "SNR_PRESETS",
    "SPA",
    "SynthConfig",
    "UnboundedError",
    "bfpi",
    "check_fbc",
    "dual_vertices",
    "err",
    "estimate_h",
    "evaluate",
    "generate",
    "gfpi",
    "mrsa",
    "preprocess",
    "rank_deficient_fixture",
    "re",
    "restore",
    "snpa",
    "spa",
]

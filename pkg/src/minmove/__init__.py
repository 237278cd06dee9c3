"""High-order, unconditionally energy-stable minimizing-movements schemes."""

from .coefficients import (
    GammaMatrix,
    builtin,
    certify,
    compute_auxiliaries,
    compute_betas,
    load_scheme,
    parse_gamma,
    serialize_gamma,
)
from .flow import FlowProblem, collapse_anchors, default_prox, integrate, stage_solve, step

__version__ = "0.1.0"

__all__ = [
    "FlowProblem",
    "GammaMatrix",
    "builtin",
    "certify",
    "collapse_anchors",
    "compute_auxiliaries",
    "compute_betas",
    "default_prox",
    "integrate",
    "load_scheme",
    "parse_gamma",
    "serialize_gamma",
    "stage_solve",
    "step",
]

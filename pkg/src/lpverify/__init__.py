"""Numerical verification of Mellin-transform and embedding identities for L_p, including p < 0.

Modules: ``specfun`` (Gamma-type moment functions), ``absnorm`` (absolute
norms and their two-variable transforms), ``mellin`` (numerical Mellin
transforms), ``stochastic`` (stable samplers, product random variables,
reproducible Monte Carlo), ``embed`` (direct sums and embedding
constructions), ``checks`` (named verification procedures) and ``cli``.
"""
from .absnorm import F_N, AbsoluteNorm, CustomNorm, LinfNorm, LqNorm, M_pN, mellin_ratio, parse_norm
from .checks import CheckReport, CheckSpec, check_names, reports_from_json, reports_to_json, run_check
from .errors import (
    DimensionError,
    DomainError,
    LpVerifyError,
    ParamError,
    PoleError,
    QuadratureError,
    RankError,
    StatisticsError,
)
from .mellin import detect_strip, mellin, mellin_of_expectation
from .specfun import G, phi, psi
from .stochastic import MCEstimate, ProductRV, SampleStream, build_h, mc_expectation, moment_estimate

__version__ = "0.1.0"

__all__ = [
    "AbsoluteNorm", "CheckReport", "CheckSpec", "CustomNorm", "DimensionError", "DomainError", "F_N", "G",
    "LinfNorm", "LpVerifyError", "LqNorm", "M_pN", "MCEstimate", "ParamError", "PoleError", "ProductRV",
    "QuadratureError", "RankError", "SampleStream", "StatisticsError", "build_h", "check_names", "detect_strip",
    "mc_expectation", "mellin", "mellin_of_expectation", "mellin_ratio", "moment_estimate", "parse_norm", "phi", "psi",
    "reports_from_json", "reports_to_json", "run_check",
]

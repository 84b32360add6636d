"""Spectral functional calculus, Littlewood-Paley blocks and Besov-space
semigroup estimates for the Dirichlet Laplacian on discretized domains."""
from .besov import BesovParams, besov_norm, besov_norms
from .errors import (
    BesovLabError,
    ConfigError,
    DomainMismatch,
    EmptyDomain,
    GridNotSorted,
    GridTooSmall,
    InvalidExponent,
    MaskFormatError,
    NegativeTime,
    NonFiniteSymbol,
    NonPositiveValue,
    NotSymmetric,
    QuadratureUnresolved,
    TooFewPoints,
    WindowTooNarrow,
)
from .grid import Field, GridDomain, GridSpec, assemble_laplacian, build_domain, lp_norm
from .interpolation import InterpolationCouple, interpolation_norm, k_functional
from .partition import DyadicPartition, build_partition
from .report import Report, Row, emit, fit_rate
from .semigroup import (
    EquivalenceCase,
    SmoothingCase,
    duhamel_solve,
    equivalent_norm,
    measure_smoothing_rate,
)
from .spectral import SpectralDecomposition, decompose, semigroup_apply
from .suites import ExperimentConfig, run_suite

__version__ = "0.1.0"

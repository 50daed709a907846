"""Numerical verification of matrix trace inequalities tied to the quantum
reliability function: spectral calculus, random ensembles, margin
evaluators, randomized search campaigns and a CLI."""

from .errors import MatrixAnalysisError
from .matcore import (
    LOG,
    NEG_X_LOG_X,
    SQUARE,
    X_LOG_SQ,
    ScalarFunction,
    SpectralDecomposition,
    apply_spectral,
    hermitianize,
    loewner_margin,
    power,
    spectral_decompose,
    trace_real,
)
from .ensembles import Ensemble, SamplerConfig, SamplerKind

__version__ = "0.1.0"

__all__ = [
    "MatrixAnalysisError",
    "LOG",
    "NEG_X_LOG_X",
    "SQUARE",
    "X_LOG_SQ",
    "ScalarFunction",
    "SpectralDecomposition",
    "apply_spectral",
    "hermitianize",
    "loewner_margin",
    "power",
    "spectral_decompose",
    "trace_real",
    "Ensemble",
    "SamplerConfig",
    "SamplerKind",
]

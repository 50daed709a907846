"""Exception types. Every error carries a stable ``code`` string used in
campaign skip tallies and CLI diagnostics."""


class MatrixAnalysisError(Exception):
    code = "MATRIX_ANALYSIS_ERROR"


class NonHermitianError(MatrixAnalysisError, ValueError):
    code = "NON_HERMITIAN"


class EigenFailure(MatrixAnalysisError):
    code = "EIGEN_FAILURE"


class NegativeSpectrumError(MatrixAnalysisError, ValueError):
    code = "NEGATIVE_SPECTRUM"


class DimMismatchError(MatrixAnalysisError, ValueError):
    code = "DIM_MISMATCH"


class ImagResidualError(MatrixAnalysisError):
    code = "IMAG_RESIDUAL"


class NonpositiveTraceError(MatrixAnalysisError):
    code = "NONPOSITIVE_TRACE"


class SingularMixtureError(MatrixAnalysisError):
    code = "SINGULAR_MIXTURE"


class SingularSumError(MatrixAnalysisError):
    code = "SINGULAR_SUM"


class SingularStateError(MatrixAnalysisError):
    code = "SINGULAR_STATE"


class NonpositiveInputError(MatrixAnalysisError, ValueError):
    code = "NONPOSITIVE_INPUT"


class ContractionViolationError(MatrixAnalysisError, ValueError):
    code = "CONTRACTION_VIOLATION"


class DomainViolationError(MatrixAnalysisError, ValueError):
    code = "DOMAIN_VIOLATION"


class UnknownInequalityError(MatrixAnalysisError, KeyError):
    code = "UNKNOWN_INEQUALITY"


class InvalidInputError(MatrixAnalysisError, ValueError):
    """Malformed interchange data or configuration."""

    code = "INVALID_INPUT"

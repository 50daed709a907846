"""Spectral calculus for finite complex Hermitian matrices.

Matrices are plain ``numpy`` arrays (complex128 by default). Every matrix
function goes through one Hermitian eigendecomposition and the result is
re-symmetrized with ``(M + M^H) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DimMismatchError,
    EigenFailure,
    ImagResidualError,
    InvalidInputError,
    NegativeSpectrumError,
    NonHermitianError,
)

DEFAULT_FLOOR = 1e-12
HERMITIAN_RTOL = 1e-12


class SpectralDecomposition(NamedTuple):
    """Ascending eigenvalues and the unitary whose columns are eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.conj().T


@dataclass(frozen=True)
class ScalarFunction:
    """A scalar function applied to a spectrum.

    ``tag`` is one of LOG, POW, NEG_X_LOG_X, X_LOG_SQ, SQUARE. ``p`` is the
    exponent for POW. Eigenvalues in ``[-floor, 0)`` are treated as rounding
    noise; anything more negative is rejected by the functions that need a
    nonnegative spectrum.
    """

    tag: str
    p: float | None = None
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        if self.tag not in _EVALUATORS:
            raise ValueError(f"unknown scalar function tag {self.tag!r}")
        if self.tag == "POW":
            if self.p is None or not np.isfinite(self.p):
                raise ValueError("POW needs a finite exponent")
        if not self.floor > 0:
            raise ValueError("eigenvalue floor must be positive")

    @property
    def needs_nonnegative(self) -> bool:
        return self.tag != "SQUARE"

    def __call__(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        if self.needs_nonnegative and lam.size and lam.min() < -self.floor:
            raise NegativeSpectrumError(
                f"{self.tag} needs a nonnegative spectrum, got eigenvalue {lam.min():.3e}"
            )
        return _EVALUATORS[self.tag](self, lam)


def _log(f: ScalarFunction, lam):
    return np.log(np.maximum(lam, f.floor))


def _pow(f: ScalarFunction, lam):
    if f.p > 0:
        return np.maximum(lam, 0.0) ** f.p
    # zero or negative exponents need an invertible argument
    return np.maximum(lam, f.floor) ** f.p


def _xlogx_parts(lam):
    x = np.maximum(lam, 0.0)
    pos = x > 0
    logs = np.zeros_like(x)
    logs[pos] = np.log(x[pos])
    return x, logs


def _neg_x_log_x(f: ScalarFunction, lam):
    x, logs = _xlogx_parts(lam)
    return -x * logs


def _x_log_sq(f: ScalarFunction, lam):
    x, logs = _xlogx_parts(lam)
    return x * logs**2


def _square(f: ScalarFunction, lam):
    return lam * lam


_EVALUATORS = {
    "LOG": _log,
    "POW": _pow,
    "NEG_X_LOG_X": _neg_x_log_x,
    "X_LOG_SQ": _x_log_sq,
    "SQUARE": _square,
}

LOG = ScalarFunction("LOG")
NEG_X_LOG_X = ScalarFunction("NEG_X_LOG_X")
X_LOG_SQ = ScalarFunction("X_LOG_SQ")
SQUARE = ScalarFunction("SQUARE")


def power(p: float, floor: float = DEFAULT_FLOOR) -> ScalarFunction:
    return ScalarFunction("POW", float(p), floor)


def as_matrix(M) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise InvalidInputError(f"expected a nonempty square matrix, got shape {M.shape}")
    if not np.iscomplexobj(M):
        M = M.astype(complex)
    return M


def hermitianize(M: np.ndarray) -> np.ndarray:
    """Return ``(M + M^H) / 2``."""
    M = np.asarray(M)
    return (M + M.conj().T) / 2


def hermiticity_defect(M: np.ndarray) -> float:
    """Max abs deviation from Hermitian symmetry, relative to max abs entry."""
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(M - M.conj().T))) / scale


def check_hermitian(M) -> np.ndarray:
    M = as_matrix(M)
    defect = hermiticity_defect(M)
    if defect > HERMITIAN_RTOL:
        raise NonHermitianError(f"matrix is not Hermitian (relative defect {defect:.3e})")
    return M


def spectral_decompose(H) -> SpectralDecomposition:
    H = check_hermitian(H)
    try:
        if not np.any(H.imag):
            # real-symmetric fast path
            w, V = np.linalg.eigh(H.real)
            V = V.astype(complex)
        else:
            w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise EigenFailure("eigensolver returned non-finite eigenvalues")
    return SpectralDecomposition(w, V)


def apply_spectral(H, f: ScalarFunction) -> np.ndarray:
    """Evaluate ``f(H) = U diag(f(lambda)) U^H`` for Hermitian ``H``."""
    w, V = spectral_decompose(H)
    return hermitianize((V * f(w)) @ V.conj().T)


def eigvalsh(H) -> np.ndarray:
    return spectral_decompose(H).eigenvalues


def min_eigenvalue(H) -> float:
    return float(eigvalsh(H)[0])


def loewner_margin(A, B) -> float:
    """Smallest eigenvalue of ``B - A``; ``B >= A`` iff it is >= -tol."""
    A = as_matrix(A)
    B = as_matrix(B)
    if A.shape != B.shape:
        raise DimMismatchError(f"shapes {A.shape} and {B.shape} differ")
    return min_eigenvalue(hermitianize(B - A))


def trace_parts(M) -> tuple[float, float]:
    """Real part of the trace and the absolute imaginary residual."""
    t = complex(np.trace(np.asarray(M)))
    return t.real, abs(t.imag)


def trace_real(M, strict: bool = False) -> float:
    re, im = trace_parts(M)
    if strict and im > 1e-8 * (1 + abs(re)):
        raise ImagResidualError(f"trace has imaginary part {im:.3e}")
    return re


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary from the QR factor of a complex Ginibre draw."""
    G = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(G)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))


# Matrix interchange format: {"dim": n, "re": [[...]], "im": [[...]]}


def matrix_to_dict(M) -> dict:
    M = as_matrix(M)
    return {"dim": int(M.shape[0]), "re": M.real.tolist(), "im": M.imag.tolist()}


def _square_array(rows, dim: int, name: str) -> np.ndarray:
    if not isinstance(rows, (list, tuple)) or len(rows) != dim:
        raise InvalidInputError(f"{name} must have {dim} rows")
    for row in rows:
        if not isinstance(row, (list, tuple)) or len(row) != dim:
            raise InvalidInputError(f"{name} must be a {dim}x{dim} array")
    try:
        return np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} has non-numeric entries") from exc


def matrix_from_dict(obj: dict) -> np.ndarray:
    try:
        dim = obj["dim"]
        re = obj["re"]
        im = obj.get("im")
    except (KeyError, TypeError, AttributeError) as exc:
        raise InvalidInputError("matrix object needs fields dim, re, im") from exc
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise InvalidInputError("dim must be a positive integer")
    real = _square_array(re, dim, "re")
    imag = np.zeros_like(real) if im is None else _square_array(im, dim, "im")
    return real + 1j * imag

"""Signed margins for the trace and operator inequalities.

Conventions: a margin is ``lhs - rhs`` for ``lhs >= rhs`` claims and
``0 - value`` for ``value <= 0`` claims, so a nonnegative margin always
certifies the instance. Operator margins are smallest eigenvalues of the
difference matrix.

Pair inequalities take positive contractions ``A, B`` (spectra in
``[0, 1]``). Zero eigenvalues of ``A`` or ``B`` are allowed through the
``x (log x)^2 -> 0`` and ``x log x -> 0`` conventions; ``A + B`` must be
invertible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ensembles import Ensemble
from .errors import (
    ContractionViolationError,
    DimMismatchError,
    DomainViolationError,
    NonpositiveInputError,
    SingularStateError,
    SingularSumError,
    UnknownInequalityError,
)
from .matcore import (
    LOG,
    NEG_X_LOG_X,
    X_LOG_SQ,
    ScalarFunction,
    apply_spectral,
    as_matrix,
    check_hermitian,
    hermiticity_defect,
    hermitianize,
    loewner_margin,
    min_eigenvalue,
    power,
    spectral_decompose,
    trace_parts,
)

SUM_GATE = 1e-10
STATE_GATE = 1e-10
CONTRACTION_TOL = 1e-12
JENSEN_TOL = 1e-8

TRACE = "TRACE"
OPERATOR_MIN_EIG = "OPERATOR_MIN_EIG"
SCALAR = "SCALAR"


@dataclass
class MarginReport:
    inequality_id: str
    margin: float
    kind: str
    s: float | None = None
    imag_residual: float = 0.0
    input_fingerprint: int = 0
    witness_ref: dict | None = None
    # magnitude of the compared quantities, for relative tolerances
    scale: float = 0.0
    extras: dict = field(default_factory=dict)

    def violates(self, tol: float) -> bool:
        return self.margin < -tol * (1.0 + self.scale)


def fingerprint(*arrays) -> int:
    h = hashlib.blake2b(digest_size=8)
    for a in arrays:
        a = np.ascontiguousarray(np.asarray(a))
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return int.from_bytes(h.digest(), "big")


# ---------------------------------------------------------------------------
# Pair building blocks


@dataclass(frozen=True)
class _PairParts:
    S: np.ndarray  # A + B
    M: np.ndarray  # A (log A)^2 + B (log B)^2
    P: np.ndarray  # A log A + B log B
    t: np.ndarray  # eigenvalues of A + B
    phi: np.ndarray  # eigenvectors of A + B


def _from_spectrum(w, V, vals) -> np.ndarray:
    return hermitianize((V * vals) @ V.conj().T)


def _contraction_functions(A):
    """Decompose once; return ``(A (log A)^2, A log A)``."""
    w, V = spectral_decompose(A)
    if w[0] < -CONTRACTION_TOL or w[-1] > 1 + CONTRACTION_TOL:
        raise DomainViolationError(
            f"expected a positive contraction, spectrum is [{w[0]:.3e}, {w[-1]:.3e}]"
        )
    return _from_spectrum(w, V, X_LOG_SQ(w)), -_from_spectrum(w, V, NEG_X_LOG_X(w))


def _pair_parts(A, B) -> _PairParts:
    A = check_hermitian(A)
    B = check_hermitian(B)
    if A.shape != B.shape:
        raise DimMismatchError(f"shapes {A.shape} and {B.shape} differ")
    MA, PA = _contraction_functions(A)
    MB, PB = _contraction_functions(B)
    S = hermitianize(A + B)
    t, phi = spectral_decompose(S)
    if t[0] < SUM_GATE:
        raise SingularSumError(f"A + B has min eigenvalue {t[0]:.3e}")
    return _PairParts(S, hermitianize(MA + MB), hermitianize(PA + PB), t, phi)


def _trace_terms(parts: _PairParts, s: float):
    t, phi = parts.t, parts.phi
    Ss = _from_spectrum(t, phi, t**s)
    Ssm1 = _from_spectrum(t, phi, t ** (s - 1.0))
    first, im1 = trace_parts(Ss @ parts.M)
    second, im2 = trace_parts(Ssm1 @ parts.P @ parts.P)
    return first, second, max(im1, im2)


def _check_s(s):
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")


def trace_margin_terms(A, B, s: float) -> tuple[float, float, float]:
    """``(first, second, imag_residual)`` with
    first = Tr[(A+B)^s {A(log A)^2 + B(log B)^2}] and
    second = Tr[(A+B)^(s-1) (A log A + B log B)^2]."""
    _check_s(s)
    return _trace_terms(_pair_parts(A, B), s)


def trace_margin_general_s(A, B, s: float) -> float:
    first, second, _ = trace_margin_terms(A, B, s)
    return first - second


def trace_margin_expanded(A, B, s: float) -> float:
    """Same quantity through the cross-term expansion

    Tr[(A+B)^(s-1) A B (log B)^2] + Tr[(A+B)^(s-1) B A (log A)^2]
        - 2 Re Tr[A log A (A+B)^(s-1) B log B],

    computed without forming ``A(log A)^2 + B(log B)^2``.
    """
    _check_s(s)
    A = check_hermitian(A)
    B = check_hermitian(B)
    MA, PA = _contraction_functions(A)
    MB, PB = _contraction_functions(B)
    S = hermitianize(A + B)
    if min_eigenvalue(S) < SUM_GATE:
        raise SingularSumError("A + B is singular")
    R = apply_spectral(S, power(s - 1.0))
    total = np.trace(R @ A @ MB) + np.trace(R @ B @ MA) - 2 * np.trace(PA @ R @ PB).real
    return float(total.real)


def operator_margin_s0(A, B) -> float:
    """min eig of A(log A)^2 + B(log B)^2 - (A log A + B log B)(A+B)^-1 (A log A + B log B)."""
    parts = _pair_parts(A, B)
    Sinv = _from_spectrum(parts.t, parts.phi, 1.0 / parts.t)
    return loewner_margin(hermitianize(parts.P @ Sinv @ parts.P), parts.M)


def operator_margin_question(A, B, which: str) -> float:
    """Smallest eigenvalue of the Q1 or Q2 operator difference. No sign is implied.

    Q1: (A+B)^(1/2) M (A+B)^(1/2) - P^2
    Q2: M^(1/2) (A+B) M^(1/2) - P^2
    with M = A(log A)^2 + B(log B)^2 and P = A log A + B log B.
    """
    parts = _pair_parts(A, B)
    P2 = hermitianize(parts.P @ parts.P)
    which = which.upper()
    if which == "Q1":
        R = _from_spectrum(parts.t, parts.phi, np.sqrt(parts.t))
        lhs = R @ parts.M @ R
    elif which == "Q2":
        R = apply_spectral(parts.M, power(0.5))
        lhs = R @ parts.S @ R
    else:
        raise ValueError(f"which must be Q1 or Q2, got {which!r}")
    return loewner_margin(P2, hermitianize(lhs))


@dataclass(frozen=True)
class SchattenTriple:
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def sums(self, s: float) -> tuple[float, float]:
        return float(np.sum(self.t**s * self.a)), float(np.sum(self.t ** (s - 1.0) * self.b))

    def margin(self, s: float) -> float:
        lhs, rhs = self.sums(s)
        return lhs - rhs


def schatten_reduce(A, B, s: float | None = None) -> SchattenTriple:
    """Diagonal data of both trace terms in the eigenbasis of ``A + B``.

    ``s`` is accepted for interface symmetry; the triple itself does not
    depend on it.
    """
    if s is not None:
        _check_s(s)
    parts = _pair_parts(A, B)
    phi = parts.phi
    a = np.einsum("in,ij,jn->n", phi.conj(), parts.M, phi).real
    b = np.einsum("in,ij,jn->n", phi.conj(), parts.P @ parts.P, phi).real
    return SchattenTriple(parts.t.copy(), a, b)


def lemma2_margin(t, a, b, s: float) -> tuple[float, float, float]:
    """``(margin, cond_i, cond_ii)`` for positive sequences ``t, a, b``.

    margin  = sum t^s a - sum t^(s-1) b
    cond_i  = sum t a - sum b
    cond_ii = sum a - sum b / t
    """
    t, a, b = (np.asarray(x, dtype=float).reshape(-1) for x in (t, a, b))
    if not (len(t) == len(a) == len(b)) or len(t) < 2:
        raise NonpositiveInputError("t, a, b must have equal length n >= 2")
    if np.any(t <= 0) or np.any(a <= 0) or np.any(b <= 0):
        raise NonpositiveInputError("t, a, b must be strictly positive")
    _check_s(s)
    margin = float(np.sum(t**s * a) - np.sum(t ** (s - 1.0) * b))
    cond_i = float(np.sum(t * a) - np.sum(b))
    cond_ii = float(np.sum(a) - np.sum(b / t))
    return margin, cond_i, cond_ii


# ---------------------------------------------------------------------------
# Ensembles


def pairwise_expansion_s1(ens: Ensemble) -> tuple[np.ndarray, float]:
    """Pair terms of the s = 1 condition.

    ``pair_terms[i, j]`` (i < j; zero elsewhere) is
    Tr[R_i R_j (log R_j)^2] + Tr[R_j R_i (log R_i)^2] - 2 Re Tr[R_i log R_i R_j log R_j]
    with ``R_i = S_i^(1/2)``; ``total = sum_{i<j} pi_i pi_j pair_terms[i, j]``.
    """
    half = power(0.5)
    R, Q, L = [], [], []
    for S in ens.states:
        Ri = apply_spectral(S, half)
        R.append(Ri)
        Q.append(apply_spectral(Ri, X_LOG_SQ))
        L.append(-apply_spectral(Ri, NEG_X_LOG_X))
    n = ens.size
    terms = np.zeros((n, n))
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            v = (
                np.trace(R[i] @ Q[j]).real
                + np.trace(R[j] @ Q[i]).real
                - 2 * np.trace(L[i] @ L[j]).real
            )
            terms[i, j] = v
            total += ens.pi[i] * ens.pi[j] * v
    return terms, float(total)


def jensen_gap_matrix(f: ScalarFunction, K, C) -> np.ndarray:
    K = [check_hermitian(k) for k in K]
    C = [as_matrix(c) for c in C]
    if len(K) != len(C) or not K:
        raise DimMismatchError("K and C must be nonempty and of equal length")
    if len({k.shape for k in K} | {c.shape for c in C}) != 1:
        raise DimMismatchError("all K_i and C_i must share one shape")
    dim = K[0].shape[0]
    completeness = hermitianize(sum(c.conj().T @ c for c in C))
    if loewner_margin(completeness, np.eye(dim)) < -JENSEN_TOL:
        raise ContractionViolationError("sum C_i^H C_i exceeds the identity")
    fK = []
    for k in K:
        w, V = spectral_decompose(k)
        if w[0] < -f.floor:
            raise DomainViolationError(f"K_i has eigenvalue {w[0]:.3e} outside [0, inf)")
        fK.append(_from_spectrum(w, V, f(w)))
    inner = hermitianize(sum(c.conj().T @ k @ c for c, k in zip(C, K)))
    outer = hermitianize(sum(c.conj().T @ fk @ c for c, fk in zip(C, fK)))
    return hermitianize(outer - apply_spectral(inner, f))


def jensen_operator_gap(f: ScalarFunction, K, C) -> float:
    """min eig of sum C_i^H f(K_i) C_i - f(sum C_i^H K_i C_i)."""
    return min_eigenvalue(jensen_gap_matrix(f, K, C))


def holevo_jensen_data(ens: Ensemble) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """``K_i = -log S_i`` and ``C_i = pi_i^(1/2) S_i^(1/2) (sum_k pi_k S_k)^(-1/2)``."""
    mix = hermitianize(sum(p * S for p, S in zip(ens.pi, ens.states)))
    if min_eigenvalue(mix) < SUM_GATE:
        raise SingularStateError("mixture sum_k pi_k S_k is singular")
    K, C = [], []
    mix_inv_half = apply_spectral(mix, power(-0.5))
    for p, S in zip(ens.pi, ens.states):
        w, V = spectral_decompose(S)
        if w[0] < STATE_GATE:
            raise SingularStateError(f"state has min eigenvalue {w[0]:.3e}")
        K.append(-_from_spectrum(w, V, np.log(w)))
        C.append(np.sqrt(p) * _from_spectrum(w, V, np.sqrt(w)) @ mix_inv_half)
    return K, C


def holevo_jensen_instance(ens: Ensemble) -> tuple[float, float]:
    """``(completeness_residual, gap)`` for the ensemble instance with f(t) = t^2."""
    K, C = holevo_jensen_data(ens)
    completeness = sum(c.conj().T @ c for c in C)
    residual = float(np.linalg.norm(completeness - np.eye(ens.dim), "fro"))
    gap = jensen_operator_gap(ScalarFunction("SQUARE"), K, C)
    return residual, gap


# ---------------------------------------------------------------------------
# Relative-entropy type quantities


def _strict_log(A, strict: bool):
    w, V = spectral_decompose(A)
    if strict and w[0] < STATE_GATE:
        raise SingularStateError(f"matrix has min eigenvalue {w[0]:.3e}")
    return _from_spectrum(w, V, LOG(w))


def relative_D(A, B, strict: bool = True) -> np.ndarray:
    """``A (log A - log B)``; not Hermitian in general."""
    A = check_hermitian(A)
    B = check_hermitian(B)
    if A.shape != B.shape:
        raise DimMismatchError(f"shapes {A.shape} and {B.shape} differ")
    return A @ (_strict_log(A, strict) - _strict_log(B, strict))


def relative_D_cross_terms(A, B) -> tuple[float, float, float, float]:
    """``(m1, m2, imag1, imag2)`` with m1 = Re Tr[D(A|B) D(B|A)] and
    m2 = Re Tr[(A+B)^-1 D(A|B) D(B|A)^H]."""
    DAB = relative_D(A, B)
    DBA = relative_D(B, A)
    S = hermitianize(as_matrix(A) + as_matrix(B))
    if min_eigenvalue(S) < SUM_GATE:
        raise SingularSumError("A + B is singular")
    m1, im1 = trace_parts(DAB @ DBA)
    m2, im2 = trace_parts(apply_spectral(S, power(-1.0)) @ DAB @ DBA.conj().T)
    return m1, m2, im1, im2


def theorem4_margins(A, B) -> tuple[float, float]:
    m1, m2, _, _ = relative_D_cross_terms(A, B)
    return m1, m2


def relative_matrix_entropy(A, B) -> np.ndarray:
    """``A^(1/2) log(A^(-1/2) B A^(-1/2)) A^(1/2)``."""
    A = check_hermitian(A)
    B = check_hermitian(B)
    w, V = spectral_decompose(A)
    if w[0] < STATE_GATE:
        raise SingularStateError(f"A has min eigenvalue {w[0]:.3e}")
    if min_eigenvalue(B) < STATE_GATE:
        raise SingularStateError("B is not positive definite")
    Ah = _from_spectrum(w, V, np.sqrt(w))
    Aih = _from_spectrum(w, V, 1.0 / np.sqrt(w))
    inner = hermitianize(Aih @ B @ Aih)
    return hermitianize(Ah @ apply_spectral(inner, LOG) @ Ah)


# ---------------------------------------------------------------------------
# Registry: one evaluator per inequality tag, operating on an input bundle.


@dataclass(frozen=True)
class InequalityInfo:
    tag: str
    inputs: str  # "pair", "commuting_pair", "ensemble", "triple", "jensen"
    s_parametric: bool
    fixed_s: float | None
    evaluate: Callable[..., MarginReport]
    open_question: Callable[[int, float | None], bool] = lambda dim, s: False


def _pair_fp(inputs):
    return fingerprint(inputs["A"], inputs["B"])


def _eval_trace(tag, s):
    def run(inputs, s_value=None):
        s_eff = s if s is not None else s_value
        first, second, im = trace_margin_terms(inputs["A"], inputs["B"], s_eff)
        return MarginReport(
            tag, first - second, TRACE, s_eff, im, _pair_fp(inputs),
            scale=max(abs(first), abs(second)),
        )

    return run


def _operator_report(tag, margin, inputs, scale):
    return MarginReport(tag, margin, OPERATOR_MIN_EIG, None, 0.0, _pair_fp(inputs), scale=scale)


def _eval_thm2_operator(inputs, s_value=None):
    parts = _pair_parts(inputs["A"], inputs["B"])
    Sinv = _from_spectrum(parts.t, parts.phi, 1.0 / parts.t)
    rhs = parts.P @ Sinv @ parts.P
    margin = loewner_margin(hermitianize(rhs), parts.M)
    return MarginReport(
        "thm2-operator", margin, OPERATOR_MIN_EIG, None, hermiticity_defect(rhs),
        _pair_fp(inputs), scale=float(np.linalg.norm(parts.M, 2)),
    )


def _eval_question(which):
    def run(inputs, s_value=None):
        margin = operator_margin_question(inputs["A"], inputs["B"], which)
        return _operator_report(which.lower(), margin, inputs, 0.0)

    return run


def _eval_lemma2(inputs, s_value=None):
    margin, ci, cii = lemma2_margin(inputs["t"], inputs["a"], inputs["b"], s_value)
    t, a, b = (np.asarray(inputs[k], dtype=float) for k in ("t", "a", "b"))
    return MarginReport(
        "lemma2", margin, SCALAR, s_value, 0.0, fingerprint(t, a, b),
        scale=float(np.sum(t**s_value * a)),
        extras={"cond_i": ci, "cond_ii": cii},
    )


def _ens_fp(ens: Ensemble):
    return fingerprint(ens.pi, *ens.states)


def _eval_remark2(inputs, s_value=None):
    ens = inputs["ensemble"]
    terms, total = pairwise_expansion_s1(ens)
    iu = np.triu_indices(ens.size, 1)
    margin = float(terms[iu].min()) if len(iu[0]) else 0.0
    return MarginReport(
        "remark2", margin, TRACE, 1.0, 0.0, _ens_fp(ens), extras={"total": total}
    )


def _eval_remark3(inputs, s_value=None):
    ens = inputs["ensemble"]
    residual, gap = holevo_jensen_instance(ens)
    return MarginReport(
        "remark3", gap, OPERATOR_MIN_EIG, None, 0.0, _ens_fp(ens),
        extras={"completeness_residual": residual},
    )


def _eval_jensen(inputs, s_value=None):
    K, C = inputs["K"], inputs["C"]
    gap = jensen_operator_gap(ScalarFunction("SQUARE"), K, C)
    scale = max(float(np.linalg.norm(k, 2)) for k in K) ** 2
    return MarginReport(
        "lemma1-jensen", gap, OPERATOR_MIN_EIG, None, 0.0, fingerprint(*K, *C), scale=scale
    )


def _eval_thm4(which):
    def run(inputs, s_value=None):
        m1, m2, im1, im2 = relative_D_cross_terms(inputs["A"], inputs["B"])
        value, im = (m1, im1) if which == 1 else (m2, im2)
        return MarginReport(f"thm4-{which}", -value, TRACE, None, im, _pair_fp(inputs))

    return run


def _eval_remark4(inputs, s_value=None):
    A, B = inputs["A"], inputs["B"]
    resid = relative_matrix_entropy(A, B) + relative_D(A, B)
    return MarginReport(
        "remark4", -float(np.linalg.norm(resid, "fro")), SCALAR, None, 0.0, _pair_fp(inputs)
    )


def _open_eq3(dim, s):
    return dim >= 3 and s is not None and 0.0 < s < 1.0


INEQUALITIES: dict[str, InequalityInfo] = {
    info.tag: info
    for info in [
        InequalityInfo("thm1", "pair", False, 1.0, _eval_trace("thm1", 1.0)),
        InequalityInfo("thm2-trace", "pair", False, 0.0, _eval_trace("thm2-trace", 0.0)),
        InequalityInfo("thm2-operator", "pair", False, None, _eval_thm2_operator),
        InequalityInfo("eq3", "pair", True, None, _eval_trace("eq3", None), _open_eq3),
        InequalityInfo("q1", "pair", False, None, _eval_question("Q1"), lambda d, s: True),
        InequalityInfo("q2", "pair", False, None, _eval_question("Q2"), lambda d, s: True),
        InequalityInfo("lemma2", "triple", True, None, _eval_lemma2, lambda n, s: n >= 3),
        InequalityInfo("remark2", "ensemble", False, 1.0, _eval_remark2),
        InequalityInfo("lemma1-jensen", "jensen", False, None, _eval_jensen),
        InequalityInfo("remark3", "ensemble", False, None, _eval_remark3),
        InequalityInfo("thm4-1", "pair", False, None, _eval_thm4(1)),
        InequalityInfo("thm4-2", "pair", False, None, _eval_thm4(2)),
        InequalityInfo("remark4", "commuting_pair", False, None, _eval_remark4),
    ]
}


def get_inequality(tag: str) -> InequalityInfo:
    try:
        return INEQUALITIES[tag]
    except KeyError:
        raise UnknownInequalityError(f"unknown inequality {tag!r}") from None


def evaluate(tag: str, inputs: dict, s: float | None = None) -> MarginReport:
    info = get_inequality(tag)
    if info.s_parametric and s is None:
        raise ValueError(f"{tag} needs a value of s")
    return info.evaluate(inputs, s if info.s_parametric else None)


def is_asserted(tag: str, dim: int, s: float | None = None) -> bool:
    """Whether a negative margin contradicts a proven claim (vs. an open question)."""
    return not get_inequality(tag).open_question(dim, s)

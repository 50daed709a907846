import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import conj, random_contraction, random_density, unitary
from traceineq import oracles
from traceineq.ensembles import Ensemble, SamplerConfig, sample_ensemble
from traceineq.errors import (
    ContractionViolationError,
    DimMismatchError,
    DomainViolationError,
    NonpositiveInputError,
    SingularStateError,
    SingularSumError,
    UnknownInequalityError,
)
from traceineq.inequalities import (
    INEQUALITIES,
    evaluate,
    get_inequality,
    holevo_jensen_data,
    holevo_jensen_instance,
    is_asserted,
    jensen_gap_matrix,
    jensen_operator_gap,
    lemma2_margin,
    operator_margin_question,
    operator_margin_s0,
    pairwise_expansion_s1,
    relative_D,
    relative_matrix_entropy,
    schatten_reduce,
    theorem4_margins,
    trace_margin_expanded,
    trace_margin_general_s,
    trace_margin_terms,
)
from traceineq.matcore import SQUARE

LOG2 = np.log(2.0)
S_VALUES = (0.0, 0.25, 0.5, 0.75, 1.0)


def pair(rng, dim, lo=1e-3):
    return random_contraction(dim, rng, lo), random_contraction(dim, rng, lo)


def scipy_trace_margin(A, B, s):
    """Independent route via scipy's matrix logarithm and fractional power."""
    LA, LB = sla.logm(A), sla.logm(B)
    S = A + B
    M = A @ LA @ LA + B @ LB @ LB
    P = A @ LA + B @ LB
    first = np.trace(sla.fractional_matrix_power(S, s) @ M)
    second = np.trace(sla.fractional_matrix_power(S, s - 1.0) @ P @ P)
    return float((first - second).real)


# ---------------------------------------------------------------- trace margin


@pytest.mark.parametrize("s, expected", [(1.0, LOG2**2 / 8), (0.0, LOG2**2 / 6)])
def test_scalar_pair(s, expected):
    A, B = np.array([[0.5]]), np.array([[0.25]])
    assert trace_margin_general_s(A, B, s) == pytest.approx(expected, abs=1e-14)
    assert oracles.trace_margin([0.5], [0.25], s) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("s", S_VALUES)
def test_equal_pair_vanishes(rng, s):
    A = random_contraction(4, rng)
    assert abs(trace_margin_general_s(A, A, s)) <= 1e-10


@pytest.mark.parametrize("dim", [2, 3, 5])
def test_against_scipy_route(rng, dim):
    for _ in range(10):
        A, B = pair(rng, dim, lo=0.05)
        for s in S_VALUES:
            ours = trace_margin_general_s(A, B, s)
            ref = scipy_trace_margin(A, B, s)
            assert abs(ours - ref) <= 1e-9 * (1 + abs(ref))


@pytest.mark.parametrize("dim", [2, 4, 6])
def test_symmetry_and_expanded_route(rng, dim):
    for _ in range(20):
        A, B = pair(rng, dim)
        for s in S_VALUES:
            m = trace_margin_general_s(A, B, s)
            assert abs(m - trace_margin_general_s(B, A, s)) <= 1e-10
            assert abs(m - trace_margin_expanded(A, B, s)) <= 1e-10 * (1 + abs(m))


def test_s0_equals_trace_of_operator_expression(rng):
    for _ in range(20):
        A, B = pair(rng, 4)
        LA, LB = sla.logm(A), sla.logm(B)
        M = A @ LA @ LA + B @ LB @ LB
        P = A @ LA + B @ LB
        expr = np.trace(M - P @ np.linalg.inv(A + B) @ P).real
        assert abs(trace_margin_general_s(A, B, 0.0) - expr) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 5), s=st.floats(0.0, 1.0))
def test_unitary_invariance(seed, dim, s):
    rng = np.random.default_rng(seed)
    A, B = pair(rng, dim)
    U = unitary(dim, rng)
    A2, B2 = conj(U, A), conj(U, B)
    assert abs(trace_margin_general_s(A, B, s) - trace_margin_general_s(A2, B2, s)) <= 1e-9
    assert abs(operator_margin_s0(A, B) - operator_margin_s0(A2, B2)) <= 1e-9
    for which in ("Q1", "Q2"):
        assert abs(operator_margin_question(A, B, which) - operator_margin_question(A2, B2, which)) <= 1e-9
    m, u = theorem4_margins(A, B), theorem4_margins(A2, B2)
    assert np.allclose(m, u, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 6))
def test_commuting_closed_forms(seed, dim):
    rng = np.random.default_rng(seed)
    a = rng.uniform(1e-3, 1.0, dim)
    b = rng.uniform(1e-3, 1.0, dim)
    U = unitary(dim, rng)
    A, B = conj(U, np.diag(a)), conj(U, np.diag(b))
    for s in S_VALUES:
        ref = oracles.trace_margin(a, b, s)
        assert abs(trace_margin_general_s(A, B, s) - ref) <= 1e-10 * (1 + abs(ref))
    assert abs(operator_margin_s0(A, B) - oracles.operator_margin_s0(a, b)) <= 1e-10
    for which in ("Q1", "Q2"):
        assert operator_margin_question(A, B, which) >= -1e-10
    m1, m2 = theorem4_margins(A, B)
    assert abs(m1 - oracles.cross_m1(a, b)) <= 1e-10
    assert abs(m2 - oracles.cross_m2(a, b)) <= 1e-10


def test_zero_eigenvalue_convention():
    A = np.diag([1.0, 0.0])
    B = np.diag([0.0, 1.0])
    for s in S_VALUES:
        assert abs(trace_margin_general_s(A, B, s)) <= 1e-14


def test_terms_report_small_imaginary_part(rng):
    A, B = pair(rng, 5)
    _, _, im = trace_margin_terms(A, B, 0.3)
    assert im <= 1e-12


def test_singular_sum_gate():
    Z = np.zeros((2, 2))
    with pytest.raises(SingularSumError):
        trace_margin_general_s(Z, np.diag([1.0, 0.0]), 0.5)


def test_domain_checks(rng):
    A = random_contraction(3, rng)
    with pytest.raises(DomainViolationError):
        trace_margin_general_s(A, 2 * np.eye(3), 0.5)
    with pytest.raises(DimMismatchError):
        trace_margin_general_s(A, np.eye(2) / 2, 0.5)
    with pytest.raises(ValueError):
        trace_margin_general_s(A, A, 1.5)


# ------------------------------------------------------------ operator margins


def test_operator_margins_equal_pair(rng):
    A = random_contraction(4, rng)
    assert abs(operator_margin_s0(A, A)) <= 1e-9
    for which in ("Q1", "Q2"):
        assert abs(operator_margin_question(A, A, which)) <= 1e-9


def test_operator_margin_s0_nonnegative(rng):
    for i in range(300):
        A, B = pair(rng, 2 + i % 5)
        assert operator_margin_s0(A, B) >= -1e-9


def test_question_rejects_bad_tag(rng):
    A, B = pair(rng, 2)
    with pytest.raises(ValueError):
        operator_margin_question(A, B, "Q3")


# -------------------------------------------------------------------- Schatten


def test_schatten_half_identity():
    tri = schatten_reduce(np.eye(2) / 2, np.eye(2) / 2)
    np.testing.assert_allclose(tri.t, [1.0, 1.0])
    np.testing.assert_allclose(tri.a, [LOG2**2] * 2, rtol=1e-14)
    np.testing.assert_allclose(tri.b, [LOG2**2] * 2, rtol=1e-14)
    assert abs(tri.margin(0.5)) <= 1e-15


@pytest.mark.parametrize("dim", [2, 3, 6])
def test_schatten_identity_and_bridge(rng, dim):
    for _ in range(20):
        A, B = pair(rng, dim)
        tri = schatten_reduce(A, B)
        assert tri.a.min() >= -1e-10 and tri.b.min() >= -1e-10
        for s in S_VALUES:
            m = trace_margin_general_s(A, B, s)
            assert abs(m - tri.margin(s)) <= 1e-10 * (1 + abs(m))
        _, ci, cii = lemma2_margin(tri.t, tri.a, tri.b, 0.5)
        assert abs(ci - trace_margin_general_s(A, B, 1.0)) <= 1e-10
        assert abs(cii - trace_margin_general_s(A, B, 0.0)) <= 1e-10


# ---------------------------------------------------------------------- lemma2


def test_lemma2_known_triple():
    m, ci, cii = lemma2_margin([3, 2, 1], [2 / 3, 1, 3 / 2], [1 / 2, 4, 1], 0.5)
    assert m == pytest.approx(-0.048188158588656549, abs=1e-15)
    assert abs(ci) <= 1e-12 and abs(cii) <= 1e-12


def test_lemma2_two_terms():
    m, ci, cii = lemma2_margin([2, 1], [1, 1], [1, 1], 0.5)
    assert m == pytest.approx(np.sqrt(2) / 2, abs=1e-15)
    assert ci == pytest.approx(1.0) and cii == pytest.approx(0.5)


@settings(max_examples=100, deadline=None)
@given(
    t=st.floats(0.1, 10.0),
    a=st.lists(st.floats(0.01, 5.0), min_size=2, max_size=2),
    b=st.lists(st.floats(0.01, 5.0), min_size=2, max_size=2),
    s=st.floats(0.0, 1.0),
)
def test_lemma2_equal_t_is_scaled_cond_i(t, a, b, s):
    m, ci, _ = lemma2_margin([t, t], a, b, s)
    assert m == pytest.approx(t ** (s - 1) * ci, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("t, a, b", [([1, 0], [1, 1], [1, 1]), ([1], [1], [1]), ([1, 2], [1, 1], [1])])
def test_lemma2_rejects_bad_input(t, a, b):
    with pytest.raises(NonpositiveInputError):
        lemma2_margin(t, a, b, 0.5)


# ------------------------------------------------------------------- ensembles


def test_pairwise_identical_and_orthogonal(rng):
    S = random_density(3, rng)
    terms, total = pairwise_expansion_s1(Ensemble([0.2, 0.3, 0.5], (S, S, S)))
    assert np.max(np.abs(terms)) <= 1e-10 and abs(total) <= 1e-10
    ens = Ensemble([0.5, 0.5], (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))
    terms, total = pairwise_expansion_s1(ens)
    assert abs(total) <= 1e-15 and np.all(np.tril(terms) == 0)


def test_pairwise_terms_nonnegative():
    cfg = SamplerConfig(seed=11, dim=3, kind="ginibre_density")
    for i in range(50):
        terms, _ = pairwise_expansion_s1(sample_ensemble(cfg, 4, i))
        assert terms[np.triu_indices(4, 1)].min() >= -1e-9


def test_jensen_trivial_cases(rng):
    K = random_contraction(3, rng)
    U = unitary(3, rng)
    assert abs(jensen_operator_gap(SQUARE, [K], [U])) <= 1e-9
    Z = np.zeros((3, 3))
    C = [np.eye(3) / np.sqrt(2)] * 2
    assert jensen_operator_gap(SQUARE, [Z, Z], C) == 0.0


def test_jensen_square_gap_is_variance(rng):
    # sum C^H K^2 C - (sum C^H K C)^2 for complete C is the "variance" form
    K = [3 * random_contraction(3, rng) for _ in range(2)]
    C = [np.eye(3) * np.sqrt(0.3), np.eye(3) * np.sqrt(0.7)]
    mean = 0.3 * K[0] + 0.7 * K[1]
    expected = 0.3 * K[0] @ K[0] + 0.7 * K[1] @ K[1] - mean @ mean
    np.testing.assert_allclose(jensen_gap_matrix(SQUARE, K, C), expected, atol=1e-12)


def test_jensen_errors(rng):
    K = [random_contraction(2, rng)]
    with pytest.raises(ContractionViolationError):
        jensen_operator_gap(SQUARE, K, [2 * np.eye(2)])
    with pytest.raises(DimMismatchError):
        jensen_operator_gap(SQUARE, K, [np.eye(3)])
    f = SQUARE.__class__("LOG")
    with pytest.raises(DomainViolationError):
        jensen_operator_gap(f, [-np.eye(2)], [np.eye(2)])


def test_holevo_single_state(rng):
    S = random_density(3, rng)
    residual, gap = holevo_jensen_instance(Ensemble([1.0], (S,)))
    assert residual <= 1e-10 and abs(gap) <= 1e-9


def test_holevo_commuting_closed_form(rng):
    U = unitary(3, rng)
    w1, w2 = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
    ens = Ensemble([0.5, 0.5], (conj(U, np.diag(w1)), conj(U, np.diag(w2))))
    _, gap = holevo_jensen_instance(ens)
    # per eigenvalue: weights q_i = w_i / (w1 + w2), values k_i = -log w_i
    q1, q2 = w1 / (w1 + w2), w2 / (w1 + w2)
    k1, k2 = -np.log(w1), -np.log(w2)
    expected = np.min(q1 * k1**2 + q2 * k2**2 - (q1 * k1 + q2 * k2) ** 2)
    assert gap == pytest.approx(expected, abs=1e-10)
    assert gap >= 0


def test_holevo_random_and_thm2_relation():
    cfg = SamplerConfig(seed=5, dim=3, kind="ginibre_density")
    for i in range(20):
        ens = sample_ensemble(cfg, 4, i)
        residual, gap = holevo_jensen_instance(ens)
        assert residual <= 1e-10 and gap >= -1e-9
    for i in range(20):
        S1, S2 = sample_ensemble(cfg, 2, i).states
        ens = Ensemble([0.5, 0.5], (S1, S2))
        K, C = holevo_jensen_data(ens)
        G = jensen_gap_matrix(SQUARE, K, C)
        R = sla.sqrtm(S1 + S2)
        lhs = np.trace(R @ G @ R).real
        assert abs(lhs - trace_margin_general_s(S1, S2, 0.0)) <= 1e-10


def test_holevo_singular_state():
    ens = Ensemble([0.5, 0.5], (np.diag([1.0, 0.0]), np.eye(2) / 2))
    with pytest.raises(SingularStateError):
        holevo_jensen_instance(ens)


# ------------------------------------------------------ relative entropy forms


def test_relative_D_examples(rng):
    A = random_density(3, rng)
    assert np.max(np.abs(relative_D(A, A))) <= 1e-12
    D = relative_D(np.diag([0.5, 0.5]), np.diag([0.75, 0.25]))
    np.testing.assert_allclose(D, np.diag([0.5 * np.log(2 / 3), 0.5 * LOG2]), atol=1e-15)


def test_relative_D_against_scipy(rng):
    A, B = random_density(4, rng, 1e-2), random_density(4, rng, 1e-2)
    np.testing.assert_allclose(relative_D(A, B), A @ (sla.logm(A) - sla.logm(B)), atol=1e-10)


def test_relative_D_strict_gate():
    with pytest.raises(SingularStateError):
        relative_D(np.diag([1.0, 0.0]), np.eye(2) / 2)
    assert np.all(np.isfinite(relative_D(np.diag([1.0, 0.0]), np.eye(2) / 2, strict=False)))


def test_relative_D_cross_terms_equal_and_random(rng):
    A = random_density(3, rng)
    assert np.allclose(theorem4_margins(A, A), 0.0, atol=1e-12)
    for i in range(200):
        A, B = random_density(2 + i % 5, rng), random_density(2 + i % 5, rng)
        m1, m2 = theorem4_margins(A, B)
        assert m1 <= 1e-9 and m2 <= 1e-9


def test_relative_D_cross_trace_matches_s1_margin(rng):
    # -Tr[D(A|B) D(B|A)] coincides with the s = 1 trace margin
    for _ in range(20):
        A, B = pair(rng, 4)
        m1, _ = theorem4_margins(A, B)
        assert abs(-m1 - trace_margin_general_s(A, B, 1.0)) <= 1e-10


def test_relative_matrix_entropy(rng):
    A = random_density(3, rng)
    assert np.max(np.abs(relative_matrix_entropy(A, A))) <= 1e-12
    a, b = np.array([0.5]), np.array([0.25])
    S = relative_matrix_entropy(np.diag(a), np.diag(b))
    np.testing.assert_allclose(np.diag(S), oracles.relative_entropy_diag(a, b), atol=1e-15)
    np.testing.assert_allclose(S, -relative_D(np.diag(a), np.diag(b)), atol=1e-15)
    U = unitary(4, rng)
    a, b = rng.uniform(0.05, 1, 4), rng.uniform(0.05, 1, 4)
    A, B = conj(U, np.diag(a)), conj(U, np.diag(b))
    assert np.linalg.norm(relative_matrix_entropy(A, B) + relative_D(A, B)) <= 1e-9


def test_relative_matrix_entropy_against_scipy(rng):
    A, B = random_density(3, rng, 1e-2), random_density(3, rng, 1e-2)
    Ah = sla.sqrtm(A)
    Aih = np.linalg.inv(Ah)
    expected = Ah @ sla.logm(Aih @ B @ Aih) @ Ah
    np.testing.assert_allclose(relative_matrix_entropy(A, B), expected, atol=1e-10)


# -------------------------------------------------------------------- registry


def test_registry_tags():
    assert set(INEQUALITIES) == {
        "thm1", "thm2-trace", "thm2-operator", "eq3", "q1", "q2", "lemma2",
        "remark2", "lemma1-jensen", "remark3", "thm4-1", "thm4-2", "remark4",
    }
    with pytest.raises(UnknownInequalityError):
        get_inequality("nosuch")


@pytest.mark.parametrize(
    "tag, dim, s, asserted",
    [
        ("thm1", 8, None, True),
        ("eq3", 2, 0.5, True),
        ("eq3", 3, 0.5, False),
        ("eq3", 3, 1.0, True),
        ("q1", 2, None, False),
        ("q2", 2, None, False),
        ("lemma2", 2, 0.5, True),
        ("lemma2", 3, 0.5, False),
    ],
)
def test_is_asserted(tag, dim, s, asserted):
    assert is_asserted(tag, dim, s) is asserted


def test_evaluate_reports(rng):
    A, B = pair(rng, 3)
    r1 = evaluate("thm1", {"A": A, "B": B})
    assert r1.s == 1.0 and r1.kind == "TRACE"
    assert r1.margin == pytest.approx(trace_margin_general_s(A, B, 1.0), abs=1e-15)
    assert r1.input_fingerprint == evaluate("thm1", {"A": A, "B": B}).input_fingerprint
    r = evaluate("eq3", {"A": A, "B": B}, 0.3)
    assert r.s == 0.3 and not r.violates(1e-9)
    with pytest.raises(ValueError):
        evaluate("eq3", {"A": A, "B": B})
    r = evaluate("thm4-1", {"A": A, "B": B})
    assert r.margin == pytest.approx(-theorem4_margins(A, B)[0])
    r = evaluate("lemma2", {"t": [3, 2, 1], "a": [2 / 3, 1, 1.5], "b": [0.5, 4, 1]}, 0.5)
    assert r.violates(1e-9) and set(r.extras) == {"cond_i", "cond_ii"}

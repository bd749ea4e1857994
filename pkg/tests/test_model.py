import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadland import (
    Custom,
    Gaussian,
    InvalidArgument,
    Moments,
    Rademacher,
    StudentWeights,
    TeacherModel,
    Uniform,
    absorb_output_weights,
    discrepancy,
    forward,
    forward_batch,
    gram,
    moments_of,
    parse_distribution,
    truncated_moments,
)
from quadland.model import is_full_rank, numerical_rank

import oracles
import reference_values as ref

rng = np.random.default_rng(20240811)


# --- forward map ----------------------------------------------------------


def test_forward_identity_two_dim():
    model = TeacherModel(np.eye(2))
    assert forward(model, np.array([1.0, 1.0])) == ref.IDENTITY_FORWARD_2D


def test_forward_zero_weights_gives_m_gamma():
    m = 4
    model = TeacherModel(np.zeros((m, 2)), activation=(1.0, 0.0, 2.5))
    assert forward(model, np.array([3.0, -1.0])) == pytest.approx(m * 2.5)


def test_forward_matches_loop_oracle():
    W = rng.standard_normal((3, 2))
    x = np.array([1.0, -1.0])
    got = forward(StudentWeights(W), x)
    want = oracles.forward_loop(W, x)
    assert got == pytest.approx(want, rel=1e-12)
    assert got == pytest.approx(np.linalg.norm(W @ x) ** 2, rel=1e-12)


def test_forward_general_activation_and_output_weights_match_oracle():
    W = rng.standard_normal((5, 3))
    a = rng.uniform(0.5, 2.0, size=5)
    act = (2.0, -1.0, 0.5)
    model = TeacherModel(W, activation=act, output_weights=a)
    for _ in range(20):
        x = rng.standard_normal(3)
        want = oracles.forward_loop(W, x, act, a)
        assert forward(model, x) == pytest.approx(want, rel=1e-10)


def test_forward_dimension_mismatch_rejected():
    model = TeacherModel(np.eye(2))
    with pytest.raises(InvalidArgument):
        forward(model, np.array([1.0, 2.0, 3.0]))


def test_forward_batch_agrees_with_forward():
    W = rng.standard_normal((4, 3))
    X = rng.standard_normal((6, 3))
    student = StudentWeights(W)
    batch = forward_batch(student, X)
    for i in range(6):
        assert batch[i] == pytest.approx(forward(student, X[i]), rel=1e-12)


def test_forward_invariant_under_orthonormal_rotation():
    # value depends on W only through W^T W
    for _ in range(100):
        W = rng.standard_normal((4, 3))
        Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        x = rng.standard_normal(3)
        a = forward(StudentWeights(W), x)
        b = forward(StudentWeights(Q @ W), x)
        assert abs(a - b) <= 1e-10 * (1.0 + abs(a))


# --- discrepancy ----------------------------------------------------------


def test_discrepancy_zero_for_identical_weights():
    W = rng.standard_normal((5, 3))
    A = discrepancy(TeacherModel(W), StudentWeights(W)).matrix
    assert np.allclose(A, 0.0, atol=1e-12)


def test_discrepancy_identity_vs_zero_student():
    A = discrepancy(TeacherModel(np.eye(2)), StudentWeights(np.zeros((2, 2)))).matrix
    assert np.array_equal(A, np.eye(2))


def test_discrepancy_matches_entrywise_gram_oracle():
    Wt = rng.standard_normal((5, 3))
    Ws = rng.standard_normal((4, 3))
    A = discrepancy(TeacherModel(Wt), StudentWeights(Ws)).matrix
    want = oracles.gram_loop(Wt) - oracles.gram_loop(Ws)
    assert np.allclose(A, want, atol=1e-12)


def test_discrepancy_antisymmetric_under_role_swap():
    Wt = rng.standard_normal((5, 3))
    Ws = rng.standard_normal((5, 3))
    A = discrepancy(TeacherModel(Wt), StudentWeights(Ws)).matrix
    B = discrepancy(TeacherModel(Ws), StudentWeights(Wt)).matrix
    assert np.allclose(A, -B, atol=1e-12)


def test_discrepancy_dimension_mismatch_rejected():
    with pytest.raises(InvalidArgument):
        discrepancy(TeacherModel(np.eye(3)), StudentWeights(np.zeros((3, 2))))


# --- output weight absorption ---------------------------------------------


def test_absorb_all_ones_is_identity_on_forward():
    W = rng.standard_normal((3, 2))
    model = TeacherModel(W)
    absorbed = absorb_output_weights(model)
    x = rng.standard_normal(2)
    assert forward(absorbed, x) == pytest.approx(forward(model, x), rel=1e-12)


def test_absorb_scalar_case():
    model = TeacherModel(np.array([[1.0, 0.0]]), output_weights=np.array([4.0]))
    absorbed = absorb_output_weights(model)
    assert np.allclose(absorbed.weights, [[2.0, 0.0]])
    x = np.array([1.0, 0.0])
    assert forward(model, x) == pytest.approx(4.0)
    assert forward(absorbed, x) == pytest.approx(4.0)


def test_absorb_preserves_forward_on_random_inputs():
    W = rng.standard_normal((6, 3))
    a = rng.uniform(0.1, 3.0, size=6)
    model = TeacherModel(W, output_weights=a)
    absorbed = absorb_output_weights(model)
    for _ in range(100):
        x = rng.standard_normal(3)
        v, w = forward(model, x), forward(absorbed, x)
        assert abs(v - w) <= 1e-12 * (1.0 + abs(v))


def test_absorb_preserves_gram():
    W = rng.standard_normal((6, 3))
    a = rng.uniform(0.1, 3.0, size=6)
    model = TeacherModel(W, output_weights=a)
    weighted = sum(a[j] * np.outer(W[j], W[j]) for j in range(6))
    assert np.allclose(gram(absorb_output_weights(model)), weighted, atol=1e-12)
    assert np.allclose(gram(model), weighted, atol=1e-12)


def test_absorb_requires_pure_square_activation():
    model = TeacherModel(
        np.eye(2), activation=(1.0, 1.0, 0.0), output_weights=np.array([2.0, 2.0])
    )
    with pytest.raises(InvalidArgument):
        absorb_output_weights(model)


# --- moments --------------------------------------------------------------


def test_gaussian_moments():
    mom = moments_of(Gaussian(1.0))
    assert mom.mu2 == ref.GAUSSIAN_MU2
    assert mom.mu4 == ref.GAUSSIAN_MU4
    assert mom.c_lower == 2.0
    assert mom.c_upper == 2.0
    assert not mom.degenerate


def test_rademacher_moments_degenerate():
    mom = moments_of(Rademacher())
    assert mom.mu2 == ref.RADEMACHER_MU2
    assert mom.mu4 == ref.RADEMACHER_MU4
    assert mom.var_sq == 0.0
    assert mom.degenerate


def test_uniform_sqrt3_moments():
    mom = moments_of(Uniform(np.sqrt(3.0)))
    assert mom.mu2 == pytest.approx(ref.UNIFORM_SQRT3_MU2, rel=1e-14)
    assert mom.mu4 == pytest.approx(ref.UNIFORM_SQRT3_MU4, rel=1e-14)


@given(
    mu2=st.floats(0.05, 10.0),
    excess=st.floats(0.0, 50.0),
)
def test_moments_invariants(mu2, excess):
    mom = Moments(mu2=mu2, mu4=mu2 * mu2 + excess)
    assert mom.mu4 >= mom.mu2 ** 2
    assert mom.c_lower <= mom.c_upper
    assert (mom.c_lower > 0) == (mom.var_sq > 0 and mom.mu2 > 0)


def test_jensen_violation_rejected():
    with pytest.raises(InvalidArgument):
        Moments(mu2=2.0, mu4=1.0)


def test_parse_distribution_tags():
    assert isinstance(parse_distribution("gaussian"), Gaussian)
    assert parse_distribution("gaussian(2.0)").sigma == 2.0
    assert isinstance(parse_distribution("rademacher"), Rademacher)
    assert parse_distribution("uniform(1.5)").halfwidth == 1.5
    with pytest.raises(InvalidArgument):
        parse_distribution("cauchy")


def test_custom_distribution_carries_declared_moments():
    law = Custom(mu2=1.0, mu4=2.0, sampler=lambda g, s: g.standard_normal(s))
    mom = moments_of(law)
    assert (mom.mu2, mom.mu4) == (1.0, 2.0)


# --- truncated moments ----------------------------------------------------


def test_truncated_gaussian_matches_closed_form_constants():
    mom = truncated_moments(Gaussian(1.0), 2.0)
    assert mom.mu2 == pytest.approx(ref.TRUNC_GAUSS_K2_MU2, rel=1e-12)
    assert mom.mu4 == pytest.approx(ref.TRUNC_GAUSS_K2_MU4, rel=1e-12)
    mom1 = truncated_moments(Gaussian(1.0), 1.0)
    assert mom1.mu2 == pytest.approx(ref.TRUNC_GAUSS_K1_MU2, rel=1e-12)
    assert mom1.mu4 == pytest.approx(ref.TRUNC_GAUSS_K1_MU4, rel=1e-12)


def test_truncated_gaussian_matches_quadrature_oracle():
    want2, want4 = oracles.truncated_moments_quadrature(oracles.gaussian_pdf(), 1.7)
    mom = truncated_moments(Gaussian(1.0), 1.7)
    assert mom.mu2 == pytest.approx(want2, rel=1e-10)
    assert mom.mu4 == pytest.approx(want4, rel=1e-10)


def test_truncated_gaussian_wide_threshold_recovers_untruncated():
    mom = truncated_moments(Gaussian(1.0), 40.0)
    assert mom.mu2 == pytest.approx(1.0, abs=1e-12)
    assert mom.mu4 == pytest.approx(3.0, abs=1e-12)


def test_truncated_uniform_beyond_support_is_untruncated():
    law = Uniform(1.5)
    plain = moments_of(law)
    trunc = truncated_moments(law, 2.0)
    assert trunc.mu2 == pytest.approx(plain.mu2, rel=1e-14)
    assert trunc.mu4 == pytest.approx(plain.mu4, rel=1e-14)


def test_truncated_requires_positive_threshold():
    with pytest.raises(InvalidArgument):
        truncated_moments(Gaussian(1.0), 0.0)


def test_truncated_custom_estimates_with_standard_error():
    law = Custom(mu2=1.0, mu4=3.0, sampler=lambda g, s: g.standard_normal(s))
    mom = truncated_moments(law, 2.0, n_samples=200_000, seed=5)
    assert mom.mu2_se is not None and mom.mu2_se > 0
    assert abs(mom.mu2 - ref.TRUNC_GAUSS_K2_MU2) <= 4 * mom.mu2_se
    assert abs(mom.mu4 - ref.TRUNC_GAUSS_K2_MU4) <= 4 * mom.mu4_se


# --- construction contracts -----------------------------------------------


def test_wide_teacher_allowed_for_forward_only():
    # m < d is fine for evaluation; barrier operations reject it separately
    model = TeacherModel(np.array([[1.0, 0.0, 0.0]]))
    assert forward(model, np.array([2.0, 0.0, 0.0])) == pytest.approx(4.0)


def test_teacher_rejects_zero_leading_activation():
    with pytest.raises(InvalidArgument):
        TeacherModel(np.eye(2), activation=(0.0, 1.0, 0.0))


def test_teacher_rejects_nonpositive_output_weight():
    with pytest.raises(InvalidArgument):
        TeacherModel(np.eye(2), output_weights=np.array([1.0, 0.0]))


def test_student_rejects_nonfinite_entries():
    with pytest.raises(InvalidArgument):
        StudentWeights(np.array([[1.0, np.inf]]))


def test_weights_are_read_only():
    model = TeacherModel(np.eye(2))
    with pytest.raises(ValueError):
        model.weights[0, 0] = 5.0


def test_numerical_rank_and_tolerance():
    assert numerical_rank(np.eye(3)) == 3
    assert is_full_rank(np.eye(3))
    deficient = np.array([[1.0, 0.0], [0.0, 1e-14]])
    assert numerical_rank(deficient) == 1
    assert not is_full_rank(deficient)


@settings(max_examples=30)
@given(st.integers(0, 2 ** 63 - 1))
def test_distribution_sampling_deterministic_per_generator_state(seed):
    law = Gaussian(1.0)
    a = law.sample(np.random.default_rng(seed), (3, 2))
    b = law.sample(np.random.default_rng(seed), (3, 2))
    assert np.array_equal(a, b)

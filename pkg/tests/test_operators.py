import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from substate.errors import DomainError, SupportError, ValidationError
from substate.operators import (
    PureState,
    as_density,
    as_projector,
    fidelity,
    hermitian_eig,
    log2m,
    loewner_leq,
    matrix_function,
    partial_trace,
    pinv_sqrt,
    psd_sqrt,
    purify,
    random_density,
    random_unitary,
    require_support,
    smallest_nonzero_eigenvalue,
    support_contained,
    support_projector,
    trace_norm,
)
from substate.divergences import relative_min_entropy

from .conftest import ket, proj

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=2, max_value=8)


def random_hermitian(n, rng):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (z + z.conj().T)


class TestValidation:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError, match="Hermitian"):
            hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(ValidationError):
            as_density(np.ones((3, 2)) / 3)

    def test_trace_residual_reported(self):
        with pytest.raises(ValidationError, match="residual 1.000e-01"):
            as_density(np.diag([0.5, 0.4]))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValidationError, match="positive semidefinite"):
            as_density(np.diag([1.5, -0.5]))

    def test_projector(self):
        as_projector(np.diag([1.0, 0.0]))
        with pytest.raises(ValidationError):
            as_projector(np.diag([0.5, 0.0]))


class TestEig:
    def test_identity(self):
        w, v = hermitian_eig(np.eye(2))
        assert np.allclose(w, [1, 1])
        assert np.allclose(v.conj().T @ v, np.eye(2))

    def test_diagonal_sorted(self):
        w, _ = hermitian_eig(np.diag([3.0, 1.0]))
        assert np.allclose(w, [1, 3])

    def test_pauli_x(self):
        w, v = hermitian_eig(np.array([[0, 1], [1, 0]]))
        assert np.allclose(w, [-1, 1])
        # eigenvectors (1, -1)/sqrt2 and (1, 1)/sqrt2 up to phase
        assert abs(abs(np.vdot(v[:, 0], ket(1, -1))) - 1) < 1e-12
        assert abs(abs(np.vdot(v[:, 1], ket(1, 1))) - 1) < 1e-12

    @given(seeds, st.integers(min_value=2, max_value=16))
    def test_round_trip(self, seed, n):
        a = random_hermitian(n, np.random.default_rng(seed))
        w, v = hermitian_eig(a)
        assert np.max(np.abs((v * w) @ v.conj().T - a)) <= 1e-9
        assert np.max(np.abs(v.conj().T @ v - np.eye(n))) <= 1e-9


class TestMatrixFunctions:
    def test_sqrt(self):
        assert np.allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2, 3]))

    def test_log_on_support(self):
        assert np.allclose(log2m(np.diag([0.5, 0.0])), np.diag([-1, 0]))

    def test_pinv_sqrt(self):
        assert np.allclose(pinv_sqrt(np.diag([4.0, 0.0])), np.diag([0.5, 0]))

    def test_log_of_negative_is_domain_error(self):
        with pytest.raises(DomainError):
            matrix_function(np.diag([1.0, -0.5]), np.log2, support_only=True)

    def test_support_convention_applies_to_tiny_eigenvalues(self):
        out = matrix_function(np.diag([1.0, 1e-14]), np.log2, support_only=True)
        assert np.allclose(out, np.diag([0.0, 0.0]))


class TestNormsAndFidelity:
    def test_trace_norm_examples(self):
        assert trace_norm(np.diag([1.0, -1.0])) == pytest.approx(2.0)
        assert trace_norm(np.zeros((2, 2))) == 0.0
        assert trace_norm(np.array([[0.0, 1.0], [0.0, 0.0]])) == pytest.approx(1.0)

    def test_fidelity_examples(self, rng):
        rho = random_density(3, rng=rng)
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)
        assert fidelity(proj(ket(1, 0)), proj(ket(0, 1))) == pytest.approx(0.0, abs=1e-15)
        assert fidelity(proj(ket(1, 0)), proj(ket(1, 1))) == pytest.approx(0.5, abs=1e-12)

    def test_fidelity_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            fidelity(np.eye(2) / 2, np.eye(3) / 3)

    @given(seeds, dims)
    def test_fidelity_symmetric(self, seed, n):
        rng = np.random.default_rng(seed)
        a = random_density(n, int(rng.integers(1, n + 1)), rng)
        b = random_density(n, int(rng.integers(1, n + 1)), rng)
        assert abs(fidelity(a, b) - fidelity(b, a)) <= 1e-9

    @given(seeds, dims)
    def test_pure_states_overlap(self, seed, n):
        rng = np.random.default_rng(seed)
        u = random_unitary(n, rng)
        a, b = u[:, 0], u[:, 1] * 0.6 + u[:, 0] * 0.8
        assert fidelity(proj(a), proj(b)) == pytest.approx(abs(np.vdot(a, b)) ** 2, abs=1e-9)

    @given(seeds, dims)
    def test_fidelity_one_iff_equal(self, seed, n):
        rng = np.random.default_rng(seed)
        a = random_density(n, rng=rng)
        b = random_density(n, rng=rng)
        assert trace_norm(a - b) > 1e-7
        assert fidelity(a, b) < 1.0 - 1e-12
        close = 0.5 * (a + a.conj().T)
        assert fidelity(a, close) == pytest.approx(1.0, abs=1e-9)

    @given(seeds, st.integers(min_value=2, max_value=4), st.integers(min_value=2, max_value=4))
    def test_partial_trace_monotonicity(self, seed, k, n):
        rng = np.random.default_rng(seed)
        x = PureState(ket(*(rng.standard_normal(k * n) + 1j * rng.standard_normal(k * n))), (k, n))
        y = PureState(ket(*(rng.standard_normal(k * n) + 1j * rng.standard_normal(k * n))), (k, n))
        pure = abs(x.overlap(y)) ** 2
        assert fidelity(x.reduced([1]), y.reduced([1])) >= pure - 1e-9


class TestSupport:
    def test_support_projector(self):
        assert np.allclose(support_projector(np.diag([1.0, 0.0])), np.diag([1, 0]))
        assert np.allclose(support_projector(np.eye(2)), np.eye(2))
        assert np.allclose(support_projector(np.diag([1.0, 1e-14])), np.diag([1, 0]))

    def test_support_contained(self, rng):
        rho = random_density(3, rng=rng)
        assert support_contained(rho, rho)
        assert not support_contained(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
        assert support_contained(np.diag([1.0, 0.0]), np.eye(2) / 2)

    def test_support_error_names_vector(self):
        with pytest.raises(SupportError) as info:
            require_support(np.eye(2) / 2, np.diag([1.0, 0.0]))
        assert abs(abs(info.value.vector[1]) - 1) < 1e-12

    def test_loewner_examples(self, rng):
        assert loewner_leq(np.zeros((2, 2)), random_density(2, rng=rng))
        assert loewner_leq(np.diag([1.0, 0.0]), np.diag([2.0, 1.0]))
        assert not loewner_leq(np.diag([1.0, 0.0]), np.diag([0.5, 1.0]))

    def test_smallest_nonzero_eigenvalue(self):
        assert smallest_nonzero_eigenvalue(np.eye(2) / 2) == pytest.approx(0.5)
        assert smallest_nonzero_eigenvalue(np.diag([0.75, 0.25])) == pytest.approx(0.25)
        assert smallest_nonzero_eigenvalue(np.diag([1.0, 0.0])) == pytest.approx(1.0)
        with pytest.raises(DomainError):
            smallest_nonzero_eigenvalue(np.zeros((2, 2)))

    @given(seeds, dims)
    def test_min_entropy_is_tight_loewner_constant(self, seed, n):
        rng = np.random.default_rng(seed)
        rho, sigma = random_density(n, rng=rng), random_density(n, rng=rng)
        kappa = 2.0 ** relative_min_entropy(rho, sigma)
        assert loewner_leq(rho, kappa * sigma, tol=1e-7)
        assert not loewner_leq(rho, (1 - 1e-3) * kappa * sigma, tol=1e-7)


class TestPartialTraceAndPurify:
    def test_product_state(self):
        s = PureState(np.kron(ket(1, 0), ket(0, 1)), (2, 2))
        assert np.allclose(s.reduced([1]), proj(ket(0, 1)))

    def test_bell_state(self):
        bell = PureState(ket(1, 0, 0, 1), (2, 2))
        assert np.allclose(bell.reduced([0]), np.eye(2) / 2)
        assert np.allclose(bell.reduced([1]), np.eye(2) / 2)

    def test_trivial_factor(self, rng):
        rho = random_density(3, rng=rng)
        assert np.allclose(partial_trace(rho, (1, 3), [1]), rho)

    def test_inconsistent_dims(self):
        with pytest.raises(ValidationError):
            partial_trace(np.ones(5), (2, 2), [0])

    def test_operator_input(self, rng):
        a, b = random_density(2, rng=rng), random_density(3, rng=rng)
        assert np.allclose(partial_trace(np.kron(a, b), (2, 3), [0]), a)
        assert np.allclose(partial_trace(np.kron(a, b), (2, 3), [1]), b)

    def test_purify_pure(self):
        s = purify(proj(ket(1, 0)))
        assert np.allclose(s.reduced([1]), proj(ket(1, 0)))
        amps = s.amplitudes.reshape(2, 2)
        assert np.allclose(amps[:, 1], 0)

    def test_purify_maximally_mixed(self):
        s = purify(np.eye(2) / 2)
        assert np.allclose(s.reduced([0]), np.eye(2) / 2)

    def test_purify_diagonal(self):
        p = 0.7
        s = purify(np.diag([p, 1 - p]))
        expected = np.sqrt(p) * np.kron(ket(1, 0), ket(1, 0)) + np.sqrt(1 - p) * np.kron(ket(0, 1), ket(0, 1))
        assert abs(abs(np.vdot(s.amplitudes, expected)) - 1) < 1e-12

    def test_smaller_ancilla(self, rng):
        rho = random_density(4, 2, rng)
        s = purify(rho, ancilla_dim=2)
        assert s.dims == (2, 4)
        assert np.max(np.abs(s.reduced([1]) - rho)) <= 1e-9
        with pytest.raises(ValidationError):
            purify(rho, ancilla_dim=1)

    @given(seeds, dims)
    def test_round_trip(self, seed, n):
        rng = np.random.default_rng(seed)
        rho = random_density(n, int(rng.integers(1, n + 1)), rng)
        s = purify(rho)
        assert s.dims == (n, n)
        assert np.max(np.abs(s.reduced([1]) - rho)) <= 1e-9

    def test_pure_state_normalization(self):
        with pytest.raises(ValidationError):
            PureState(np.array([1.0, 1.0]), (2,))


class TestRandom:
    def test_rank_one_is_pure(self, rng):
        rho = random_density(4, 1, rng)
        assert np.trace(rho @ rho).real == pytest.approx(1.0)

    def test_deterministic(self):
        a = random_density(3, rng=np.random.default_rng(5))
        b = random_density(3, rng=np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_full_rank(self):
        rho = random_density(4, 4, np.random.default_rng(8))
        assert np.linalg.eigvalsh(rho)[0] > 0
        as_density(rho)

    @pytest.mark.parametrize("rank", [1, 2, 3])
    def test_requested_rank(self, rank, rng):
        rho = random_density(5, rank, rng)
        w = np.linalg.eigvalsh(rho)
        assert int(np.sum(w > 1e-9 * w[-1])) == rank

    def test_rank_too_large(self):
        with pytest.raises(ValidationError):
            random_density(2, 3)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from substate.constructions import (
    angle_fidelity_bound,
    converse_check,
    gentle_projection,
    purification_decomposition,
    substate_for_measurement,
    substate_smoothing,
    uhlmann_partner,
)
from substate.divergences import observational_divergence
from substate.errors import DomainError, SupportError, ValidationError
from substate.operators import fidelity, purify, random_density, random_psd, random_unitary

from .conftest import ket, proj

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def rank(a, tol=1e-9):
    w = np.linalg.eigvalsh(a)
    return int(np.sum(w > tol * max(w[-1], 1e-300)))


class TestGentleProjection:
    def test_zero_projector(self, rng):
        rho = random_density(3, rng=rng)
        out, delta = gentle_projection(rho, np.zeros((3, 3)))
        assert delta == 0.0
        assert np.allclose(out, rho)

    def test_two_by_two(self):
        out, delta = gentle_projection(np.eye(2) / 2, np.diag([0.0, 1.0]))
        assert delta == pytest.approx(0.5)
        assert np.allclose(out, np.diag([1.0, 0.0]))
        assert fidelity(np.eye(2) / 2, out) == pytest.approx(1 - delta)

    def test_small_eigenvectors(self, rng):
        rho = random_density(4, rng=rng)
        _, v = np.linalg.eigh(rho)
        p = v[:, :2] @ v[:, :2].conj().T
        out, delta = gentle_projection(rho, p)
        assert fidelity(rho, out) >= 1 - delta - 1e-8
        assert np.max(np.abs(p @ out)) <= 1e-12

    def test_degenerate(self):
        with pytest.raises(DomainError, match="removes all"):
            gentle_projection(np.diag([1.0, 0.0]), np.diag([1.0, 0.0]))

    def test_not_a_projector(self):
        with pytest.raises(ValidationError):
            gentle_projection(np.eye(2) / 2, np.diag([0.5, 0.0]))

    @given(seeds, st.integers(2, 8))
    def test_fidelity_bound(self, seed, n):
        rng = np.random.default_rng(seed)
        rho = random_density(n, int(rng.integers(1, n + 1)), rng)
        k = int(rng.integers(0, n))
        basis = random_unitary(n, rng)[:, :k]
        p = basis @ basis.conj().T
        delta = float(np.real(np.vdot(p, rho)))
        if delta >= 0.9:
            return
        out, d = gentle_projection(rho, p)
        assert d == pytest.approx(delta, abs=1e-12)
        assert fidelity(rho, out) >= 1 - delta - 1e-8
        assert rank(out) <= rank(rho)
        assert np.max(np.abs(p @ out)) <= 1e-9


class TestSubstateForMeasurement:
    def test_equal_states(self, rng):
        rho = random_density(3, rng=rng)
        m = random_psd(3, rng=rng)
        res = substate_for_measurement(rho, rho, m, 0.3)
        assert res.indices == []
        assert np.allclose(res.rho_prime, rho)

    def test_diagonal_example(self):
        rho, sigma = np.eye(2) / 2, np.diag([0.99, 0.01])
        d = observational_divergence(rho, sigma).value
        assert d == pytest.approx(0.5 * math.log2(50), abs=1e-6)
        assert 2 ** (d / 0.9) == pytest.approx(8.79, abs=5e-3)
        res = substate_for_measurement(rho, sigma, np.diag([0.0, 1.0]), 0.9, d=d)
        assert np.allclose(res.projector, np.diag([0.0, 1.0]))
        assert np.allclose(res.rho_prime, np.diag([1.0, 0.0]))
        assert np.real(np.trace(res.projector @ rho)) == pytest.approx(0.5)
        assert fidelity(rho, res.rho_prime) == pytest.approx(0.5)
        # auto d gives the same construction
        assert substate_for_measurement(rho, sigma, np.diag([0.0, 1.0]), 0.9).indices == res.indices

    def test_eps_domain(self, rng):
        rho = random_density(2, rng=rng)
        with pytest.raises(DomainError):
            substate_for_measurement(rho, rho, np.eye(2), 1.0)

    def test_support(self):
        with pytest.raises(SupportError):
            substate_for_measurement(np.eye(2) / 2, np.diag([1.0, 0.0]), np.eye(2), 0.5)

    @settings(max_examples=25)
    @given(seeds, st.integers(2, 6), st.floats(0.05, 0.95))
    def test_postconditions(self, seed, n, eps):
        rng = np.random.default_rng(seed)
        rho = random_density(n, int(rng.integers(1, n + 1)), rng)
        sigma = random_density(n, rng=rng)
        m = random_psd(n, int(rng.integers(1, n + 1)), rng=rng)
        d = observational_divergence(rho, sigma).value
        res = substate_for_measurement(rho, sigma, m, eps, d=d)
        assert np.real(np.trace(res.projector @ rho)) < eps + 1e-8
        assert fidelity(rho, res.rho_prime) >= 1 - eps - 1e-8
        lhs = (1 - eps) * np.real(np.trace(m @ res.rho_prime))
        rhs = 2 ** (d / eps) * np.real(np.trace(m @ sigma))
        assert lhs <= rhs + 1e-7 * max(1.0, np.trace(m).real)


class TestSubstateSmoothing:
    def test_equal_states(self, rng):
        rho = random_density(3, rng=rng)
        cert, bound = substate_smoothing(rho, rho, 0.3)
        assert cert.value_bits == pytest.approx(0.0, abs=1e-7)
        assert bound == pytest.approx(math.log2(1 / 0.7), abs=1e-6)

    def test_diagonal_example(self):
        cert, bound = substate_smoothing(np.diag([1.0, 0.0]), np.eye(2) / 2, 0.5)
        assert cert.value_bits == pytest.approx(0.0, abs=1e-7)
        assert bound == pytest.approx(3.0, abs=1e-6)

    def test_explicit_d(self, rng):
        rho, sigma = random_density(2, rng=rng), random_density(2, rng=rng)
        _, bound = substate_smoothing(rho, sigma, 0.5, d=1.0)
        assert bound == pytest.approx(3.0)

    @settings(max_examples=15)
    @given(seeds, st.sampled_from([0.1, 0.5]))
    def test_theorem_inequality(self, seed, eps):
        rng = np.random.default_rng(seed)
        rho, sigma = random_density(4, rng=rng), random_density(4, rng=rng)
        cert, bound = substate_smoothing(rho, sigma, eps)
        assert cert.value_bits <= bound + 1e-4


class TestUhlmann:
    @given(seeds, st.integers(2, 6))
    def test_overlap_is_fidelity(self, seed, n):
        rng = np.random.default_rng(seed)
        rho = random_density(n, int(rng.integers(1, n + 1)), rng)
        rho_p = random_density(n, int(rng.integers(1, n + 1)), rng)
        v = purify(rho)
        vp = uhlmann_partner(v, rho_p)
        assert np.max(np.abs(vp.reduced([1]) - rho_p)) <= 1e-9
        assert abs(v.overlap(vp)) ** 2 == pytest.approx(fidelity(rho, rho_p), abs=1e-9)


class TestPurificationDecomposition:
    def test_trivial(self):
        tri = purification_decomposition(np.eye(2) / 2, np.eye(2) / 2, 0.5)
        assert tri.divergence == pytest.approx(0.0, abs=1e-9)
        assert tri.alpha == pytest.approx(0.5, abs=1e-8)
        assert np.allclose(tri.rho_prime, np.eye(2) / 2, atol=1e-6)
        assert np.allclose(tri.theta, np.eye(2) / 2, atol=1e-6)
        assert tri.residuals()["sigma_reduced"] <= 1e-8

    def test_diagonal_alpha(self):
        tri = purification_decomposition(np.diag([1.0, 0.0]), np.eye(2) / 2, 0.5)
        assert tri.alpha == pytest.approx(1 / 8, abs=1e-8)
        assert np.linalg.eigvalsh(np.eye(2) / 2 - tri.alpha * tri.rho_prime)[0] >= -1e-9

    @settings(max_examples=12)
    @given(seeds, st.integers(2, 4), st.sampled_from([0.1, 0.25, 0.5, 0.75]))
    def test_invariants(self, seed, n, eps):
        rng = np.random.default_rng(seed)
        rho = random_density(n, int(rng.integers(1, n + 1)), rng)
        sigma = random_density(n, rng=rng)
        tri = purification_decomposition(rho, sigma, eps)
        r = tri.residuals()
        assert r["w_formula"] <= 1e-9
        assert r["sigma_reduced"] <= 1e-8
        assert r["sigma_split"] <= 1e-8
        assert r["theta_min_eig"] >= -1e-7
        assert r["v_prime_reduced"] <= 1e-9
        assert r["purified_fidelity"] >= 1 - eps - 1e-6
        assert r["purified_fidelity"] <= r["state_fidelity"] + 1e-8
        assert tri.w.dims == (2, n, n)
        assert 0 < tri.alpha <= 1

    def test_eps_domain(self):
        with pytest.raises(DomainError):
            purification_decomposition(np.eye(2) / 2, np.eye(2) / 2, 0.0)


class TestAngleBound:
    def test_examples(self):
        assert angle_fidelity_bound(0.5, 0.0) == pytest.approx(0.5)
        assert angle_fidelity_bound(0.5, 0.25) == pytest.approx(0.125)
        assert angle_fidelity_bound(1.0, 0.25) == pytest.approx(0.25)

    @pytest.mark.parametrize("delta,beta", [(0.5, 0.3), (-0.1, 0.1), (1.1, 0.1), (0.5, -0.01)])
    def test_domain(self, delta, beta):
        with pytest.raises(DomainError):
            angle_fidelity_bound(delta, beta)

    @given(st.floats(0.0, 1.0), st.floats(0.0, 0.25), st.floats(0.0, 1.0))
    def test_hypothesis_implies_bound(self, delta, beta, dprime):
        f = (math.sqrt(delta * dprime) + math.sqrt((1 - delta) * (1 - dprime))) ** 2
        if f >= 1 - beta * delta:
            assert dprime >= angle_fidelity_bound(delta, beta) - 1e-9

    def test_bound_is_attained(self):
        # the bound is tight: delta' at the bound satisfies the hypothesis with equality
        delta, beta = 0.6, 0.25
        dp = angle_fidelity_bound(delta, beta)
        f = (math.sqrt(delta * dp) + math.sqrt((1 - delta) * (1 - dp))) ** 2
        assert f <= 1 - beta * delta + 1e-12


class TestConverse:
    def test_equal_states(self, rng):
        rho = random_density(3, rng=rng)
        rep = converse_check(rho, rho)
        assert rep.divergence == pytest.approx(0.0, abs=1e-9)
        assert rep.k == pytest.approx(0.0, abs=1e-7)
        assert rep.bound == pytest.approx(3.0, abs=1e-6)
        assert rep.passed and rep.forward_ok

    def test_diagonal_example(self):
        rep = converse_check(np.diag([1.0, 0.0]), np.eye(2) / 2)
        assert rep.divergence == pytest.approx(1.0, abs=1e-9)
        assert rep.witness_delta == pytest.approx(1.0, abs=1e-9)
        assert rep.epsilon_used == pytest.approx(0.25, abs=1e-9)
        assert any(p["epsilon"] == rep.epsilon_used for p in rep.profile)
        assert rep.divergence <= rep.bound + 1e-4
        assert rep.passed

    def test_report_fields(self, rng):
        rho, sigma = random_density(2, rng=rng), random_density(2, rng=rng)
        d = converse_check(rho, sigma, eps_grid=[0.5]).to_dict()
        assert d["pass"] == (d["divergence"] <= d["bound"] + 1e-4)
        assert d["bound"] == pytest.approx(4 * d["k"] + 3)
        assert d["beta"] == 0.25
        assert d["k"] >= 0.0

    @settings(max_examples=10)
    @given(seeds)
    def test_sandwich(self, seed):
        rng = np.random.default_rng(seed)
        rho, sigma = random_density(4, rng=rng), random_density(4, rng=rng)
        rep = converse_check(rho, sigma)
        assert 0.0 <= rep.k <= rep.divergence + 1e-4
        assert rep.divergence <= 4 * rep.k + 3 + 1e-4
        assert rep.passed and rep.forward_ok

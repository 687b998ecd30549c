"""Explicit states and decompositions behind the substate bounds.

The functions here build the objects whose existence the bounds assert:
a gently projected state, a state that is a substate of ``sigma`` for one
fixed measurement, the smoothing witness with its analytic bound, a
purification of ``sigma`` that splits off a multiple of a state close to
``rho``, and the converse check bounding ``D`` by the smoothing profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .divergences import (
    DivergenceResult,
    SmoothingCertificate,
    _check_eps,
    _states,
    observational_divergence,
    smooth_relative_min_entropy,
)
from .errors import DomainError
from .operators import (
    RANK_TOL,
    PureState,
    as_density,
    as_projector,
    as_psd,
    check_same_dim,
    fidelity,
    partial_trace,
    purify,
    require_support,
)

B_GUARD = 1e-12
DEGENERATE_TOL = 1e-9
DEFAULT_EPS_GRID = (0.1, 0.25, 0.5, 0.75)
THEOREM_SLACK = 1e-4


def gentle_projection(rho, projector) -> tuple[np.ndarray, float]:
    """Project ``rho`` off the range of ``projector`` and renormalize.

    Returns:
        ``(rho', delta)`` with ``delta = tr(P rho)`` and
        ``rho' = (I-P) rho (I-P) / (1 - delta)``; the fidelity between
        ``rho`` and ``rho'`` is at least ``1 - delta``.

    Raises:
        DomainError: ``delta >= 1 - 1e-9`` (nothing left to normalize).
    """
    rho = as_density(rho, name="rho")
    proj = as_projector(projector)
    check_same_dim(rho, proj)
    delta = float(np.real(np.vdot(proj, rho)))
    if delta >= 1.0 - DEGENERATE_TOL:
        raise DomainError(f"projection removes all of rho (tr(P rho) = {delta:.12g})")
    comp = np.eye(rho.shape[0]) - proj
    kept = comp @ rho @ comp
    kept = 0.5 * (kept + kept.conj().T)
    return kept / np.trace(kept).real, max(delta, 0.0)


class SubstateConstruction(NamedTuple):
    rho_prime: np.ndarray
    indices: list[int]
    projector: np.ndarray


def _exceeds(a: float, b: float, log_scale: float) -> bool:
    """``a > 2**log_scale * b + B_GUARD`` without overflow."""
    if a <= B_GUARD:
        return False
    if b <= 0.0:
        return True
    exponent = log_scale + math.log2(b)
    if exponent > 1.0:  # rhs exceeds 2 > a
        return False
    return a > 2.0**exponent + B_GUARD


def substate_for_measurement(rho, sigma, m, eps: float, d: float | None = None,
                             ) -> SubstateConstruction:
    """State close to ``rho`` that is a ``2^(d/eps)/(1-eps)``-substate along ``M``.

    With ``M = sum_i p_i |v_i><v_i|``, drop the eigenvectors where ``rho``
    outweighs ``2^(d/eps) sigma``:
    ``B = {i : <v_i|rho|v_i> > 2^(d/eps) <v_i|sigma|v_i>}``.
    Gently projecting off ``span{v_i : i in B}`` gives ``rho'`` with
    ``(1 - eps) tr(M rho') <= 2^(d/eps) tr(M sigma)`` whenever ``d`` is at
    least the observational divergence.

    Args:
        m: PSD operator (not necessarily below the identity).
        d: divergence bound; computed with :func:`observational_divergence`
            when omitted. A ``d`` below the true divergence is not detected.

    Raises:
        DomainError: eps outside (0, 1) or B carries all of ``rho``.
    """
    rho, sigma = _states(rho, sigma)
    m = as_psd(m, name="M")
    check_same_dim(rho, m)
    eps = _check_eps(eps)
    require_support(rho, sigma)
    if d is None:
        d = divergence_value(observational_divergence(rho, sigma))
    _, vecs = np.linalg.eigh(m)
    a = np.real(np.einsum("ji,jk,ki->i", vecs.conj(), rho, vecs))
    b = np.real(np.einsum("ji,jk,ki->i", vecs.conj(), sigma, vecs))
    scale = float(d) / eps
    idx = [i for i in range(len(a)) if _exceeds(a[i], b[i], scale)]
    vb = vecs[:, idx]
    proj = vb @ vb.conj().T
    rho_prime, _ = gentle_projection(rho, proj)
    return SubstateConstruction(rho_prime, idx, proj)


def divergence_value(result: DivergenceResult) -> float:
    if result.infinite:
        raise DomainError("observational divergence is infinite")
    return float(result.value)


def theorem_bound_bits(d: float, eps: float) -> float:
    """``d / eps + log2(1 / (1 - eps))``."""
    return d / eps + math.log2(1.0 / (1.0 - eps))


def substate_smoothing(rho, sigma, eps: float, d: float | None = None,
                       ) -> tuple[SmoothingCertificate, float]:
    """Optimal smoothing certificate together with the analytic upper bound in bits."""
    rho, sigma = _states(rho, sigma)
    eps = _check_eps(eps)
    if d is None:
        d = divergence_value(observational_divergence(rho, sigma))
    cert = smooth_relative_min_entropy(rho, sigma, eps)
    return cert, theorem_bound_bits(d, eps)


@dataclass
class PurificationTriple:
    """``w = sqrt(a)|0>|v'> + sqrt(1-a)|1>|w'>`` purifying ``sigma``.

    ``v'`` purifies ``rho_prime`` and is the purification closest to the
    reference purification ``v`` of ``rho``; ``w'`` purifies ``theta`` and
    ``sigma = alpha rho' + (1 - alpha) theta``.
    """

    v_prime: PureState
    w_prime: PureState
    w: PureState
    alpha: float
    theta: np.ndarray
    rho_prime: np.ndarray
    v: PureState
    divergence: float
    sigma: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)

    def residuals(self) -> dict[str, float]:
        a = self.alpha
        two = PureState(np.array([1.0, 0.0]), (2,))
        one = PureState(np.array([0.0, 1.0]), (2,))
        mix = math.sqrt(a) * two.tensor(self.v_prime).amplitudes \
            + math.sqrt(1.0 - a) * one.tensor(self.w_prime).amplitudes
        reduced = partial_trace(self.w.amplitudes, self.w.dims, [2])
        split = self.sigma - a * self.v_prime.reduced([1]) - (1.0 - a) * self.theta
        f_pure = abs(self.v.overlap(self.v_prime)) ** 2
        return {
            "w_formula": float(np.max(np.abs(self.w.amplitudes - mix))),
            "sigma_reduced": float(np.max(np.abs(reduced - self.sigma))),
            "sigma_split": float(np.max(np.abs(split))),
            "theta_min_eig": float(np.linalg.eigvalsh(self.theta)[0]),
            "v_prime_reduced": float(np.max(np.abs(self.v_prime.reduced([1]) - self.rho_prime))),
            "purified_fidelity": f_pure,
            "state_fidelity": fidelity(self.rho, self.rho_prime),
        }


def uhlmann_partner(reference: PureState, rho_prime) -> PureState:
    """Purification of ``rho_prime`` on the reference's K (x) H with maximal overlap.

    With amplitude matrices ``A`` (reference) and ``A'`` (any purification),
    ``<v|U v'> = tr(A^H U A')`` is maximized by ``U = Q P^H`` where
    ``A' A^H = P S Q^H``, giving ``|<v|v'>| = ||A' A^H||_1``.
    """
    k, n = reference.dims
    a = reference.amplitudes.reshape(k, n)
    ap = purify(rho_prime, ancilla_dim=k).amplitudes.reshape(k, n)
    p, _, qh = np.linalg.svd(ap @ a.conj().T)
    u = qh.conj().T @ p.conj().T
    amps = (u @ ap).ravel()
    return PureState(amps / np.linalg.norm(amps), (k, n))


def _psd_state(a):
    a = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(a)
    w = np.clip(w, 0.0, None)
    return (v * (w / w.sum())[None, :]) @ v.conj().T


def purification_decomposition(rho, sigma, eps: float, d: float | None = None
                               ) -> PurificationTriple:
    """Split ``sigma = alpha rho' + (1 - alpha) theta`` and purify both parts.

    ``alpha = (1 - eps) 2^(-d/eps)`` and ``rho'`` is the smoothing witness,
    whose substate constant is at most ``1/alpha``, so ``theta`` is a state.

    Raises:
        DomainError: eps outside (0, 1), or the witness violates
            ``rho' <= sigma / alpha`` beyond tolerance.
    """
    rho, sigma = _states(rho, sigma)
    eps = _check_eps(eps)
    if d is None:
        d = divergence_value(observational_divergence(rho, sigma))
    alpha = (1.0 - eps) * 2.0 ** (-d / eps)
    cert = smooth_relative_min_entropy(rho, sigma, eps)
    rho_prime = cert.rho_prime
    theta = (sigma - alpha * rho_prime) / (1.0 - alpha)
    theta = 0.5 * (theta + theta.conj().T)
    low = float(np.linalg.eigvalsh(theta)[0])
    if low < -1e-7:
        raise DomainError(f"alpha * rho' exceeds sigma (theta has eigenvalue {low:.3e})")
    v = purify(rho)
    v_prime = uhlmann_partner(v, rho_prime)
    w_prime = purify(_psd_state(theta))
    k, n = v.dims
    amps = np.concatenate([math.sqrt(alpha) * v_prime.amplitudes,
                           math.sqrt(1.0 - alpha) * w_prime.amplitudes])
    w = PureState(amps / np.linalg.norm(amps), (2, k, n))
    return PurificationTriple(v_prime, w_prime, w, alpha, theta, rho_prime, v, float(d),
                              sigma=sigma, rho=rho)


def angle_fidelity_bound(delta: float, beta: float) -> float:
    """``(1 - sqrt(beta))^2 delta``: the least ``delta'`` compatible with
    ``(sqrt(delta delta') + sqrt((1-delta)(1-delta')))^2 >= 1 - beta delta``.

    Raises:
        DomainError: ``delta`` outside [0, 1] or ``beta`` outside [0, 1/4].
    """
    delta, beta = float(delta), float(beta)
    if not 0.0 <= delta <= 1.0:
        raise DomainError(f"delta must lie in [0, 1], got {delta}")
    if not 0.0 <= beta <= 0.25:
        raise DomainError(f"beta must lie in [0, 1/4], got {beta}")
    return (1.0 - math.sqrt(beta)) ** 2 * delta


@dataclass
class ConverseReport:
    """Check of ``D <= 4k + 3`` with ``k = max_eps eps (S_eps - log2 1/(1-eps))``."""

    divergence: float
    witness_delta: float
    epsilon_used: float
    k: float
    bound: float
    passed: bool
    profile: list[dict] = field(default_factory=list)
    forward_ok: bool = True
    beta: float = 0.25

    def to_dict(self) -> dict:
        return {
            "divergence": self.divergence,
            "witness_delta": self.witness_delta,
            "epsilon_used": self.epsilon_used,
            "k": self.k,
            "bound": self.bound,
            "pass": self.passed,
            "forward_ok": self.forward_ok,
            "beta": self.beta,
            "profile": self.profile,
        }


def converse_check(rho, sigma, eps_grid=DEFAULT_EPS_GRID, slack: float = THEOREM_SLACK,
                   rank_tol: float = RANK_TOL) -> ConverseReport:
    """Bound ``D`` by the smoothing profile at ``eps_grid`` plus ``eps = delta/4``.

    ``delta = tr(M* rho)`` for the optimal measurement ``M*``. Each grid
    point also checks the forward direction ``k(eps) <= D``.
    """
    rho, sigma = _states(rho, sigma)
    require_support(rho, sigma, rank_tol)
    res = observational_divergence(rho, sigma, rank_tol=rank_tol)
    d = divergence_value(res)
    delta = float(res.witness_p)
    eps_used = delta / 4.0
    grid = sorted({float(_check_eps(e)) for e in eps_grid})
    if 0.0 < eps_used < 1.0 and eps_used not in grid:
        grid = sorted(grid + [eps_used])
    profile = []
    forward_ok = True
    k = 0.0
    for eps in grid:
        cert = smooth_relative_min_entropy(rho, sigma, eps, rank_tol=rank_tol)
        k_eps = eps * (cert.value_bits - math.log2(1.0 / (1.0 - eps)))
        ok = k_eps <= d + slack
        forward_ok = forward_ok and ok
        k = max(k, k_eps)
        profile.append({"epsilon": eps, "value_bits": cert.value_bits, "k": k_eps,
                        "forward_ok": ok})
    bound = 4.0 * k + 3.0
    passed = d <= bound + slack
    return ConverseReport(d, delta, eps_used, k, bound, passed, profile, forward_ok)

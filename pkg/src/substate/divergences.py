"""Entropic quantities between two states, all in bits.

* :func:`relative_entropy` - ``tr rho (log rho - log sigma)``.
* :func:`relative_min_entropy` - least ``c`` with ``rho <= 2^c sigma``.
* :func:`observational_divergence` - ``sup_M p log(p / q)`` over POVM
  elements with ``p = tr M rho`` and ``q = tr M sigma``.
* :func:`smooth_relative_min_entropy` - the smallest relative min-entropy of
  a state with fidelity at least ``1 - eps`` to ``rho``, solved as an SDP
  and returned with a primal/dual certificate.
* :func:`fidelity_sdp` and :func:`kappa_via_dual` - SDP cross-checks of
  closed-form quantities.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SolverError
from .jsonio import encode_matrix
from .operators import (
    RANK_TOL,
    as_density,
    as_hermitian,
    check_same_dim,
    fidelity,
    log2m,
    require_support,
    support_basis,
    support_contained,
    support_projector,
)
from .programs import (
    fidelity_program,
    inner_min_program,
    min_weight_program,
    smoothing_program,
    substate_dual_program,
)
from .sdp import FEAS_TOL, GAP_TOL, SdpProblem, solve

GRID_SIZE = 129
REFINE_TOL = 1e-6
SMOOTH_FEAS_TOL = 1e-10
SMOOTH_GAP_TOL = 1e-10
# Allowed residual per invariant; the gap limit is scaled by (1 + kappa).
CERTIFICATE_TOLS = {
    "substate": 1e-10,
    "trace": 1e-8,
    "rho_prime_psd": 1e-10,
    "fidelity": 1e-6,
    "kappa_lower": 1e-9,
    "z1_trace": 1e-8,
    "z1_psd": 1e-7,
    "z3_sign": 1e-7,
    "dual_block": 1e-7,
    "gap": 1e-6,
}
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _states(rho, sigma):
    rho = as_density(rho, name="rho")
    sigma = as_density(sigma, name="sigma")
    check_same_dim(rho, sigma)
    return rho, sigma


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in the open interval (0, 1), got {eps}")
    return eps


def relative_entropy(rho, sigma, rank_tol: float = RANK_TOL) -> float:
    """``S(rho||sigma)`` in bits; requires ``supp rho`` inside ``supp sigma``."""
    rho, sigma = _states(rho, sigma)
    require_support(rho, sigma, rank_tol)
    val = np.trace(rho @ (log2m(rho, rank_tol) - log2m(sigma, rank_tol))).real
    return float(val)


def max_ratio(rho, sigma, rank_tol: float = RANK_TOL) -> float:
    """``lambda_max(sigma^-1/2 rho sigma^-1/2)`` computed on ``supp sigma``."""
    v = support_basis(sigma, rank_tol)
    w, u = np.linalg.eigh(v.conj().T @ sigma @ v)
    t = (u / np.sqrt(w)[None, :]).conj().T @ (v.conj().T @ rho @ v) @ (u / np.sqrt(w)[None, :])
    return float(np.linalg.eigvalsh(0.5 * (t + t.conj().T))[-1])


def relative_min_entropy(rho, sigma, rank_tol: float = RANK_TOL) -> float:
    """``S_inf(rho||sigma) = log2 lambda_max(sigma^-1/2 rho sigma^-1/2)``.

    Raises:
        SupportError: if ``rho`` has weight outside ``supp sigma``.
    """
    rho, sigma = _states(rho, sigma)
    require_support(rho, sigma, rank_tol)
    return math.log2(max_ratio(rho, sigma, rank_tol))


# --------------------------------------------------------------------------
# observational divergence


class _WeightCurve:
    """Lagrangian solver for ``q*(p) = min{tr M sigma : tr M rho = p, 0 <= M <= I}``.

    For a multiplier ``mu >= 0`` the projector ``P(mu)`` onto the positive
    part of ``mu rho - sigma`` minimizes ``tr M sigma - mu tr M rho``, so
    ``h(mu) = mu p - tr(mu rho - sigma)_+`` is a lower bound on ``q*(p)``.
    A bracket ``f(lo) < p <= f(hi)`` with ``f(mu) = tr(rho P(mu))`` is
    narrowed by safeguarded regula falsi until the convex mix of
    ``P(lo)`` and ``P(hi)`` with weight exactly ``p`` is within ``tol`` of
    that bound. Evaluations are cached and reused as brackets for later
    ``p``.
    """

    def __init__(self, rho, sigma, tol=1e-13):
        self.rho, self.sigma, self.tol = rho, sigma, tol
        n = rho.shape[0]
        self.mus = [0.0]
        self.evals = [(0.0, 0.0, 0.0, np.zeros((n, n), dtype=complex))]

    def _eval(self, mu):
        i = bisect.bisect_left(self.mus, mu)
        if i < len(self.mus) and self.mus[i] == mu:
            return self.evals[i]
        w, v = np.linalg.eigh(mu * self.rho - self.sigma)
        pos = w > 0
        vp = v[:, pos]
        f = float(np.real(np.vdot(vp, self.rho @ vp)))
        g = float(np.real(np.vdot(vp, self.sigma @ vp)))
        item = (f, g, float(np.sum(w[pos])), vp @ vp.conj().T)
        self.mus.insert(i, mu)
        self.evals.insert(i, item)
        return item

    def _bracket(self, p):
        fs = [e[0] for e in self.evals]
        j = bisect.bisect_left(fs, p)
        if j < len(fs):
            return self.mus[j - 1], self.mus[j]
        mu = max(1.0, 2.0 * self.mus[-1])
        while self._eval(mu)[0] < p:
            if mu > 1e15:
                raise DomainError("p exceeds the rho-weight reachable on supp(sigma)")
            mu *= 2.0
        return self.mus[bisect.bisect_left(self.mus, mu) - 1], mu

    def solve(self, p):
        lo, hi = self._bracket(p)
        last, streak, width, since = 0, 0, hi - lo, 0
        for _ in range(200):
            f_lo, g_lo, s_lo, m_lo = self._eval(lo)
            f_hi, g_hi, s_hi, m_hi = self._eval(hi)
            t = (p - f_lo) / (f_hi - f_lo)
            q = (1.0 - t) * g_lo + t * g_hi
            bound = max(lo * p - s_lo, hi * p - s_hi)
            if q - bound <= self.tol * (1.0 + q) or hi - lo <= 1e-15 * hi:
                break
            if streak >= 2 or (since >= 3 and hi - lo > 0.5 * width):
                mid, streak, width, since = 0.5 * (lo + hi), 0, hi - lo, 0
            else:
                mid = lo + t * (hi - lo)
                mid = min(max(mid, lo + 1e-3 * (hi - lo)), hi - 1e-3 * (hi - lo))
                since += 1
            side = 1 if self._eval(mid)[0] < p else -1
            if side > 0:
                lo = mid
            else:
                hi = mid
            streak = streak + 1 if side == last else 1
            last = side
        return q, (1.0 - t) * m_lo + t * m_hi


def _min_weight_spectral(rho, sigma, p, rank_tol, curve=None):
    n = rho.shape[0]
    if p <= 0.0:
        return 0.0, np.zeros((n, n), dtype=complex)
    if p >= 1.0:
        proj = support_projector(rho, rank_tol)
        return float(np.real(np.trace(proj @ sigma))), proj
    curve = curve or _WeightCurve(rho, sigma)
    return curve.solve(p)


def _min_weight_sdp(rho, sigma, p):
    problem, _ = min_weight_program(rho, sigma, p)
    sol = solve(problem)
    if not sol.optimal:
        raise SolverError(f"min-weight SDP failed: {sol.message}", solution=sol)
    m = sol.primal["M"]
    return float(np.real(np.vdot(m, sigma))), m


def min_sigma_weight(rho, sigma, p: float, method: str = "spectral",
                     rank_tol: float = RANK_TOL) -> tuple[float, np.ndarray]:
    """Minimize ``tr(M sigma)`` over ``0 <= M <= I`` with ``tr(M rho) = p``.

    Args:
        method: ``"spectral"`` solves the Lagrangian dual by bisection on
            the multiplier with one eigendecomposition per step;
            ``"sdp"`` calls the interior-point engine.

    Returns:
        ``(q, M)`` with ``q`` the optimum.
    """
    rho, sigma = _states(rho, sigma)
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if method == "spectral":
        return _min_weight_spectral(rho, sigma, p, rank_tol)
    if method == "sdp":
        return _min_weight_sdp(rho, sigma, p)
    raise ValueError(f"unknown method {method!r}")


@dataclass
class DivergenceResult:
    """Observational divergence with its optimizing measurement.

    When ``infinite`` is set the divergence is unbounded: ``witness``
    then has positive weight under ``rho`` and none under ``sigma`` and
    ``value`` is ``None``.
    """

    value: float | None
    witness: np.ndarray
    witness_p: float
    witness_q: float
    sweep: list[tuple[float, float, float]] = field(default_factory=list)
    infinite: bool = False

    @property
    def value_bits(self):
        return self.value


def _objective(p, q):
    if p <= 0.0:
        return 0.0
    return p * math.log2(p / q)


def observational_divergence(rho, sigma, grid_size: int = GRID_SIZE,
                             refine_tol: float = REFINE_TOL, method: str = "spectral",
                             rank_tol: float = RANK_TOL) -> DivergenceResult:
    """``D(rho||sigma)`` by a p-sweep of :func:`min_sigma_weight`.

    The objective ``g(p) = p log2(p / q*(p))`` is sampled on a uniform grid
    of ``grid_size`` points on [0, 1] and refined by golden-section search
    to width ``refine_tol`` around each grid-local maximum.
    """
    rho, sigma = _states(rho, sigma)
    if grid_size < 3:
        raise DomainError("grid_size must be at least 3")
    if not support_contained(rho, sigma, rank_tol):
        witness = np.eye(rho.shape[0]) - support_projector(sigma, rank_tol)
        p = float(np.real(np.vdot(witness, rho)))
        return DivergenceResult(None, witness, p, 0.0, infinite=True)

    cache: dict[float, tuple[float, np.ndarray]] = {}
    curve = _WeightCurve(rho, sigma)

    def point(p):
        if p not in cache:
            if method == "spectral":
                cache[p] = _min_weight_spectral(rho, sigma, p, rank_tol, curve)
            else:
                cache[p] = min_sigma_weight(rho, sigma, p, method=method, rank_tol=rank_tol)
        return cache[p]

    def g(p):
        q, _ = point(p)
        return _objective(p, q) if q > 0 else -math.inf if p == 0 else math.inf

    grid = np.linspace(0.0, 1.0, grid_size)
    values = [g(float(p)) for p in grid]
    if any(math.isinf(v) and v > 0 for v in values):
        raise DomainError("sigma-weight vanished on a point of positive rho-weight")
    sweep = [(float(p), point(float(p))[0], v) for p, v in zip(grid, values)]

    candidates = [(values[i], float(grid[i])) for i in range(grid_size)]
    for i in range(grid_size):
        left = values[i - 1] if i > 0 else -math.inf
        right = values[i + 1] if i < grid_size - 1 else -math.inf
        if values[i] >= left and values[i] >= right:
            a = float(grid[max(i - 1, 0)])
            b = float(grid[min(i + 1, grid_size - 1)])
            candidates.append(_golden_max(g, a, b, refine_tol))

    best = max(v for v, _ in candidates)
    # Among near-ties prefer the largest p: it gives the most informative witness.
    p_star = max(p for v, p in candidates if v >= best - 1e-14)
    q_star, m_star = point(p_star)
    value = _objective(p_star, q_star)
    return DivergenceResult(value, m_star, p_star, q_star, sweep)


def _golden_max(g, a, b, tol):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    gc, gd = g(c), g(d)
    while b - a > tol:
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - _GOLDEN * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + _GOLDEN * (b - a)
            gd = g(d)
    return (gc, c) if gc >= gd else (gd, d)


# --------------------------------------------------------------------------
# SDP-based quantities


def fidelity_sdp(rho, rho_prime, form: str | None = None) -> float:
    """Fidelity as the squared optimum of the block SDP.

    Args:
        form: ``"direct"`` or ``"factored"``; by default direct when both
            states have full rank and factored otherwise.
    """
    rho, rho_prime = _states(rho, rho_prime)
    if form is None:
        n = rho.shape[0]
        full = all(support_basis(a).shape[1] == n for a in (rho, rho_prime))
        form = "direct" if full else "factored"
    problem, _ = fidelity_program(rho, rho_prime, form)
    sol = solve(problem, feas_tol=SMOOTH_FEAS_TOL, gap_tol=SMOOTH_GAP_TOL,
                fallback=(FEAS_TOL, GAP_TOL))
    if not sol.optimal:
        raise SolverError(f"fidelity SDP failed: {sol.message}", solution=sol)
    root = max(0.0, sol.primal_objective)
    return float(min(1.0, root * root))


def kappa_via_dual(rho_prime, sigma, rank_tol: float = RANK_TOL) -> tuple[float, float]:
    """``(kappa_direct, kappa_dual)`` for ``min{kappa : rho' <= kappa sigma}``.

    The dual value maximizes ``tr(M rho')`` over ``M >= 0`` with
    ``tr(M sigma) <= 1``, restricted to ``supp sigma``.
    """
    rho_prime, sigma = _states(rho_prime, sigma)
    require_support(rho_prime, sigma, rank_tol)
    direct = max_ratio(rho_prime, sigma, rank_tol)
    v = support_basis(sigma, rank_tol)
    problem, _ = substate_dual_program(v.conj().T @ rho_prime @ v, v.conj().T @ sigma @ v)
    sol = solve(problem, feas_tol=SMOOTH_FEAS_TOL, gap_tol=SMOOTH_GAP_TOL,
                fallback=(FEAS_TOL, GAP_TOL))
    if not sol.optimal:
        raise SolverError(f"substate dual SDP failed: {sol.message}", solution=sol)
    return direct, float(sol.primal_objective)


@dataclass
class SmoothingCertificate:
    """Primal/dual witness for the smooth relative min-entropy.

    ``rho_prime`` with ``rho_prime <= kappa sigma`` and fidelity at least
    ``1 - epsilon`` to ``rho`` proves ``value_bits`` is achievable. The dual
    variables satisfy ``Z1 >= 0``, ``tr(Z1 sigma) <= 1``, ``z3 >= 0`` and
    ``[[z4 I - Z1, z3 I], [z3 I, Z2]] <= 0``, which forces every feasible
    ``kappa`` to be at least ``dual_objective = z4 + 2 z3 sqrt(1-eps) +
    tr(Z2 rho)``. ``gap = kappa - dual_objective``.
    """

    epsilon: float
    rho_prime: np.ndarray
    kappa: float
    value_bits: float
    fidelity_achieved: float
    X: np.ndarray
    Z1: np.ndarray
    Z2: np.ndarray
    z3: float
    z4: float
    dual_objective: float
    gap: float
    solver_kappa: float = float("nan")
    iterations: int = 0
    rho: np.ndarray | None = field(default=None, repr=False)
    sigma: np.ndarray | None = field(default=None, repr=False)
    problem: SdpProblem | None = field(default=None, repr=False)

    def dual_block(self) -> np.ndarray:
        n = self.Z1.shape[0]
        eye = np.eye(n)
        return np.block([[self.z4 * eye - self.Z1, self.z3 * eye],
                         [self.z3 * eye, self.Z2]])

    def residuals(self) -> dict[str, float]:
        """Signed violations of every certificate invariant (<= 0 means satisfied)."""
        rho, sigma = self.rho, self.sigma
        eps = self.epsilon
        lo = np.linalg.eigvalsh((self.kappa + 1e-7) * sigma - self.rho_prime)[0]
        return {
            "substate": float(-lo),
            "trace": float(abs(np.trace(self.rho_prime).real - 1.0)),
            "rho_prime_psd": float(-np.linalg.eigvalsh(self.rho_prime)[0]),
            "fidelity": float((1.0 - eps) - fidelity(rho, self.rho_prime)),
            "kappa_lower": float(1.0 - self.kappa),
            "z1_trace": float(np.real(np.vdot(self.Z1, sigma)) - 1.0),
            "z1_psd": float(-np.linalg.eigvalsh(self.Z1)[0]),
            "z3_sign": float(-self.z3),
            "dual_block": float(np.linalg.eigvalsh(self.dual_block())[-1]),
            "gap": float(abs(self.gap)),
        }

    def checks(self) -> dict[str, bool]:
        """Pass flag per invariant at the certificate tolerances."""
        r = self.residuals()
        limits = dict(CERTIFICATE_TOLS, gap=CERTIFICATE_TOLS["gap"] * (1.0 + self.kappa))
        return {name: r[name] <= limit for name, limit in limits.items()}

    @property
    def valid(self) -> bool:
        return all(self.checks().values())

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "kappa": self.kappa,
            "value_bits": self.value_bits,
            "fidelity_achieved": self.fidelity_achieved,
            "rho_prime": encode_matrix(self.rho_prime),
            "X": encode_matrix(self.X),
            "dual": {"Z1": encode_matrix(self.Z1), "Z2": encode_matrix(self.Z2),
                     "z3": self.z3, "z4": self.z4},
            "dual_objective": self.dual_objective,
            "gap": self.gap,
            "solver_kappa": self.solver_kappa,
            "iterations": self.iterations,
        }


def _polish_dual(z1, rho, eps, margin):
    """Best ``(z3, z4, Z2)`` for a fixed ``Z1 >= 0``.

    For ``A = Z1 - z4 I > 0`` the block condition is tight at
    ``Z2 = -z3^2 A^-1``; the objective is then maximized by
    ``z3 = sqrt(1-eps) / tr(rho A^-1)``, leaving the concave function
    ``f(z4) = z4 + (1 - eps) / tr(rho A^-1)`` maximized over
    ``z4 <= lambda_min(Z1) - margin``.
    """
    lam, u = np.linalg.eigh(z1)
    c = np.maximum(np.real(np.einsum("ji,jk,ki->i", u.conj(), rho, u)), 0.0)
    top = lam[0] - margin

    def dfdz(z):
        gap = lam - z
        g = np.sum(c / gap)
        return 1.0 - (1.0 - eps) * np.sum(c / gap**2) / g**2

    if dfdz(top) >= 0.0:
        z4 = top
    else:
        step = 1.0 + abs(lam[-1])
        lo = top - step
        while dfdz(lo) < 0.0:
            step *= 2.0
            lo = top - step
        hi = top
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if dfdz(mid) >= 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * (1.0 + abs(mid)):
                break
        z4 = lo
    inv = 1.0 / (lam - z4)
    g = float(np.sum(c * inv))
    z3 = math.sqrt(1.0 - eps) / g
    z2 = -(z3 * z3) * (u * inv[None, :]) @ u.conj().T
    return z3, float(z4), 0.5 * (z2 + z2.conj().T)


def smooth_relative_min_entropy(rho, sigma, eps: float, rank_tol: float = RANK_TOL,
                                form: str = "factored", keep_problem: bool = False
                                ) -> SmoothingCertificate:
    """Smooth relative min-entropy with a primal/dual certificate.

    The SDP is posed on ``supp sigma``. The primal state is projected back
    onto the density matrices and ``kappa`` is recomputed exactly from it,
    so the primal side of the certificate holds by construction. The dual
    multiplier ``Z1`` is taken from the solver, made PSD and normalized,
    and the remaining dual variables are set to their optimal values for
    that ``Z1``.

    Args:
        form: ``"factored"`` (default, works for any rank of ``rho``) or
            ``"direct"`` (block as written; needs full-rank ``rho``).
        keep_problem: store the instantiated SDP on the certificate.

    Raises:
        DomainError: eps outside (0, 1).
        SupportError: support violation.
        SolverError: the SDP did not converge.
    """
    rho, sigma = _states(rho, sigma)
    eps = _check_eps(eps)
    require_support(rho, sigma, rank_tol)
    n = rho.shape[0]
    v = support_basis(sigma, rank_tol)
    r = v.shape[1]
    rho_r = v.conj().T @ rho @ v
    rho_r = 0.5 * (rho_r + rho_r.conj().T)
    sigma_r = v.conj().T @ sigma @ v
    sigma_r = 0.5 * (sigma_r + sigma_r.conj().T)

    problem, layout = smoothing_program(rho_r, sigma_r, eps, form)
    sol = solve(problem, feas_tol=SMOOTH_FEAS_TOL, gap_tol=SMOOTH_GAP_TOL,
                fallback=(FEAS_TOL, GAP_TOL))
    if not sol.optimal:
        raise SolverError(f"smoothing SDP failed: {sol.message}", solution=sol)

    y = sol.primal["Y"]
    rp_r = y[:r, :r]
    k = y[:r, r:]
    x_r = k @ layout.data["W"].conj().T if form == "factored" else k

    rho_prime = v @ rp_r @ v.conj().T
    rho_prime = 0.5 * (rho_prime + rho_prime.conj().T)
    w, u = np.linalg.eigh(rho_prime)
    w = np.clip(w, 0.0, None)
    rho_prime = (u * (w / w.sum())[None, :]) @ u.conj().T
    kappa = max_ratio(rho_prime, sigma, rank_tol)

    z1_r = -layout.operator("substate", sol.dual, r)
    z1_r = 0.5 * (z1_r + z1_r.conj().T)
    lam, q = np.linalg.eigh(z1_r)
    z1_r = (q * np.clip(lam, 0.0, None)[None, :]) @ q.conj().T
    z1_r /= max(1.0, float(np.real(np.vdot(z1_r, sigma_r))))
    lift = float(np.linalg.eigvalsh(z1_r)[-1]) + 1.0
    z1 = v @ z1_r @ v.conj().T + lift * (np.eye(n) - v @ v.conj().T)
    z1 = 0.5 * (z1 + z1.conj().T)
    z3, z4, z2 = _polish_dual(z1, rho, eps, margin=1e-7 * (1.0 + kappa))
    dual_obj = z4 + 2.0 * z3 * math.sqrt(1.0 - eps) + float(np.real(np.vdot(z2, rho)))

    return SmoothingCertificate(
        epsilon=eps,
        rho_prime=rho_prime,
        kappa=kappa,
        value_bits=math.log2(kappa),
        fidelity_achieved=fidelity(rho, rho_prime),
        X=v @ x_r @ v.conj().T,
        Z1=z1,
        Z2=z2,
        z3=z3,
        z4=z4,
        dual_objective=dual_obj,
        gap=kappa - dual_obj,
        solver_kappa=sol.primal_objective,
        iterations=sol.iterations,
        rho=rho,
        sigma=sigma,
        problem=problem if keep_problem else None,
    )


def inner_minimum(m_hat, rho, eps: float) -> float:
    """``min tr(M rho')`` over states with ``F(rho', rho) >= 1 - eps``."""
    m_hat = as_hermitian(m_hat, name="M")
    rho = as_density(rho, name="rho")
    eps = _check_eps(eps)
    problem, _ = inner_min_program(m_hat, rho, eps)
    sol = solve(problem, feas_tol=SMOOTH_FEAS_TOL, gap_tol=SMOOTH_GAP_TOL,
                fallback=(FEAS_TOL, GAP_TOL))
    if not sol.optimal:
        raise SolverError(f"inner minimization SDP failed: {sol.message}", solution=sol)
    return float(sol.primal_objective)

"""Instantiation of the concrete SDPs as :class:`~substate.sdp.SdpProblem` values.

Each builder returns the problem together with a :class:`Layout` recording
where each group of constraints sits, so callers can read dual multipliers
back into named operators.

The fidelity block ``[[rho', X], [X^H, rho]] >= 0`` has no interior point
when ``rho`` is rank deficient, which stalls interior-point methods. The
``"factored"`` form writes ``rho = W W^H`` (``W`` is n x rank) and uses the
equivalent block ``[[rho', K], [K^H, I]] >= 0`` with ``X = K W^H``; any
feasible ``(rho', K)`` maps to a feasible ``(rho', X)`` of the direct form
with the same ``tr X``. The ``"direct"`` form is the block as written.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import RANK_TOL
from .sdp import SdpProblem, embed_block, hermitian_basis


@dataclass
class Layout:
    """Index ranges of constraint groups inside ``problem.equalities``."""

    groups: dict[str, slice] = field(default_factory=dict)
    data: dict[str, np.ndarray] = field(default_factory=dict)

    def operator(self, name: str, dual: np.ndarray, dim: int) -> np.ndarray:
        """Rebuild the Hermitian multiplier of a basis-constraint group."""
        ys = dual[self.groups[name]]
        basis = hermitian_basis(dim)
        return sum((y * e for y, e in zip(ys, basis)), np.zeros((dim, dim), dtype=complex))

    def scalar(self, name: str, dual: np.ndarray) -> float:
        return float(dual[self.groups[name]][0])


def factor(rho: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """``W`` with ``W W^H = rho`` restricted to the numerical support (n x rank)."""
    w, v = np.linalg.eigh(rho)
    keep = w > rank_tol * w[-1]
    return v[:, keep] * np.sqrt(w[keep])[None, :]


def _pin(block: str, n_outer: int, where: slice, target: np.ndarray):
    """Basis constraints pinning the ``where`` diagonal sub-block to ``target``."""
    return [({block: embed_block(e, n_outer, where)}, float(np.real(np.vdot(e, target))))
            for e in hermitian_basis(target.shape[0])]


def fidelity_program(rho: np.ndarray, rho_prime: np.ndarray, form: str = "direct"):
    """``maximize Re tr X`` subject to ``[[rho', X], [X^H, rho]] >= 0``.

    The squared optimum is the fidelity. In the factored form both states
    are factored and the variable is the contraction ``K`` in
    ``X = W' K W^H``.
    """
    n = rho.shape[0]
    layout = Layout()
    if form == "direct":
        big = 2 * n
        top, bot = slice(0, n), slice(n, big)
        eqs = _pin("Y", big, top, rho_prime) + _pin("Y", big, bot, rho)
        layout.groups = {"top": slice(0, n * n), "bottom": slice(n * n, 2 * n * n)}
        c = 0.5 * embed_block(np.eye(n), big, top, bot)
    elif form == "factored":
        wp, w = factor(rho_prime), factor(rho)
        rp, r = wp.shape[1], w.shape[1]
        big = rp + r
        top, bot = slice(0, rp), slice(rp, big)
        eqs = _pin("Y", big, top, np.eye(rp)) + _pin("Y", big, bot, np.eye(r))
        layout.groups = {"top": slice(0, rp * rp), "bottom": slice(rp * rp, rp * rp + r * r)}
        layout.data = {"W": w, "W_prime": wp}
        g = w.conj().T @ wp
        c = 0.5 * embed_block(g.conj().T, big, top, bot)
    else:
        raise ValueError(f"unknown form {form!r}")
    problem = SdpProblem(blocks=[("Y", big)], objective={"Y": c}, equalities=eqs,
                         sense="maximize")
    return problem, layout


def smoothing_program(rho: np.ndarray, sigma: np.ndarray, eps: float, form: str = "factored"):
    """Minimize kappa over (rho', X) with rho' <= kappa sigma, tr rho' = 1 and the fidelity block.

    Blocks: ``Y`` (fidelity block, top-left is rho'), ``T = kappa sigma -
    rho'`` (substate slack), ``kappa`` and ``s`` (slack of
    ``Re tr X >= sqrt(1 - eps)``). Multiplier groups: ``lower`` (pins the
    lower-right block), ``trace``, ``substate`` (minus Z1) and ``fidelity``
    (twice z3).
    """
    n = rho.shape[0]
    if form == "direct":
        lower = rho
        w = None
        cross = np.eye(n)
    elif form == "factored":
        w = factor(rho)
        lower = np.eye(w.shape[1])
        cross = w
    else:
        raise ValueError(f"unknown form {form!r}")
    r = lower.shape[0]
    big = n + r
    top, bot = slice(0, n), slice(n, big)
    eqs = _pin("Y", big, bot, lower)
    eqs.append(({"Y": embed_block(np.eye(n), big, top)}, 1.0))
    for e in hermitian_basis(n):
        eqs.append(({"Y": embed_block(e, big, top), "T": e,
                     "kappa": np.array([[-np.real(np.vdot(e, sigma))]])}, 0.0))
    eqs.append(({"Y": 0.5 * embed_block(cross, big, top, bot), "s": -np.eye(1)},
                float(np.sqrt(1.0 - eps))))
    layout = Layout(
        groups={"lower": slice(0, r * r), "trace": slice(r * r, r * r + 1),
                "substate": slice(r * r + 1, r * r + 1 + n * n),
                "fidelity": slice(r * r + 1 + n * n, r * r + 2 + n * n)},
        data={"W": w} if w is not None else {},
    )
    problem = SdpProblem(blocks=[("Y", big), ("T", n), ("kappa", 1), ("s", 1)],
                         objective={"kappa": np.eye(1)}, equalities=eqs)
    return problem, layout


def inner_min_program(m_hat: np.ndarray, rho: np.ndarray, eps: float):
    """``minimize tr(M rho')`` over states rho' with ``F(rho', rho) >= 1 - eps`` (factored form)."""
    n = rho.shape[0]
    w = factor(rho)
    r = w.shape[1]
    big = n + r
    top, bot = slice(0, n), slice(n, big)
    eqs = _pin("Y", big, bot, np.eye(r))
    eqs.append(({"Y": embed_block(np.eye(n), big, top)}, 1.0))
    eqs.append(({"Y": 0.5 * embed_block(w, big, top, bot), "s": -np.eye(1)},
                float(np.sqrt(1.0 - eps))))
    problem = SdpProblem(blocks=[("Y", big), ("s", 1)],
                         objective={"Y": embed_block(m_hat, big, top)}, equalities=eqs)
    return problem, Layout(data={"W": w})


def min_weight_program(rho: np.ndarray, sigma: np.ndarray, p: float):
    """``minimize tr(M sigma)`` s.t. ``tr(M rho) = p`` and ``0 <= M <= I`` (``T = I - M``)."""
    n = rho.shape[0]
    eqs = [({"M": rho}, float(p))]
    for e in hermitian_basis(n):
        eqs.append(({"M": e, "T": e}, float(np.real(np.trace(e)))))
    problem = SdpProblem(blocks=[("M", n), ("T", n)], objective={"M": sigma}, equalities=eqs)
    return problem, Layout(groups={"weight": slice(0, 1), "cap": slice(1, 1 + n * n)})


def substate_dual_program(rho_prime: np.ndarray, sigma: np.ndarray):
    """``maximize tr(M rho')`` over ``M >= 0`` with ``tr(M sigma) <= 1``."""
    n = rho_prime.shape[0]
    problem = SdpProblem(blocks=[("M", n)], objective={"M": rho_prime},
                         inequalities=[({"M": sigma}, 1.0)], sense="maximize")
    return problem, Layout()

"""Dense Hermitian linear algebra on density matrices and friends.

Operators are plain complex ``numpy`` arrays. The ``as_*`` validators check
the invariants of each operator class (Hermitian, PSD, density matrix,
POVM element, projector), raise :class:`ValidationError` on violation and
return a symmetrized ``(A + A^H) / 2`` copy.

Fidelity uses the squared convention ``F(rho, sigma) = ||sqrt(rho) sqrt(sigma)||_1 ** 2``.

Support logic everywhere treats eigenvalues ``<= RANK_TOL * lambda_max``
as zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, SupportError, ValidationError

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
RANK_TOL = 1e-9
PROJECTOR_TOL = 1e-10
CONTAINMENT_TOL = 1e-8
NORM_TOL = 1e-10


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite square complex array."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        raise ValidationError(f"{name} is empty")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def hermiticity_residual(a: np.ndarray) -> float:
    """``max|A - A^H|`` relative to ``max|A|``."""
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(a - a.conj().T))) / scale


def as_hermitian(a, tol: float = HERMITIAN_TOL, name: str = "operator") -> np.ndarray:
    a = as_matrix(a, name)
    res = hermiticity_residual(a)
    if res > tol:
        raise ValidationError(f"{name} is not Hermitian (relative residual {res:.3e} > {tol:.1e})")
    return 0.5 * (a + a.conj().T)


def as_psd(a, tol: float = PSD_TOL, name: str = "operator") -> np.ndarray:
    a = as_hermitian(a, name=name)
    lam = np.linalg.eigvalsh(a)[0]
    if lam < -tol:
        raise ValidationError(f"{name} is not positive semidefinite (min eigenvalue {lam:.3e})")
    return a


def as_density(a, tol: float = PSD_TOL, trace_tol: float = TRACE_TOL,
               name: str = "state") -> np.ndarray:
    """Validate a unit-trace PSD Hermitian matrix."""
    a = as_psd(a, tol=tol, name=name)
    tr = float(np.real(np.trace(a)))
    if abs(tr - 1.0) > trace_tol:
        raise ValidationError(
            f"{name} does not have unit trace (trace {tr:.12g}, residual {abs(tr - 1.0):.3e})")
    return a


def as_povm_element(a, tol: float = PSD_TOL, name: str = "measurement") -> np.ndarray:
    a = as_psd(a, tol=tol, name=name)
    lam = np.linalg.eigvalsh(a)[-1]
    if lam > 1.0 + tol:
        raise ValidationError(f"{name} exceeds the identity (max eigenvalue {lam:.12g})")
    return a


def as_projector(a, tol: float = PROJECTOR_TOL, name: str = "projector") -> np.ndarray:
    a = as_hermitian(a, name=name)
    res = float(np.max(np.abs(a @ a - a)))
    if res > tol:
        raise ValidationError(f"{name} is not idempotent (max |P^2 - P| = {res:.3e})")
    return a


def check_same_dim(*mats: np.ndarray) -> int:
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise ValidationError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


# ---------------------------------------------------------------------------
# spectral tools
# ---------------------------------------------------------------------------


def hermitian_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns) of ``a``."""
    a = as_hermitian(a)
    w, v = np.linalg.eigh(a)
    return w, v


def _retained(w: np.ndarray, rank_tol: float) -> np.ndarray:
    top = float(np.max(np.abs(w)))
    return np.abs(w) > rank_tol * top if top > 0 else np.zeros(w.shape, dtype=bool)


def matrix_function(a, f: Callable[[np.ndarray], np.ndarray], support_only: bool = False,
                    rank_tol: float = RANK_TOL) -> np.ndarray:
    """Apply the scalar map ``f`` to the spectrum of Hermitian ``a``.

    With ``support_only`` the map is applied only to eigenvalues above the
    rank threshold; the rest are sent to 0 (the convention for ``log`` and
    inverse powers on the support).
    """
    w, v = hermitian_eig(a)
    out = np.zeros_like(w)
    keep = _retained(w, rank_tol) if support_only else np.ones(w.shape, dtype=bool)
    with np.errstate(all="ignore"):
        vals = np.asarray(f(w[keep]), dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = w[keep][~np.isfinite(vals)]
        raise DomainError(f"function undefined on retained eigenvalue(s) {bad}")
    out[keep] = vals
    return (v * out[None, :]) @ v.conj().T


def psd_sqrt(a) -> np.ndarray:
    """Square root of a PSD matrix; round-off negative eigenvalues are clipped to 0."""
    w, v = hermitian_eig(a)
    return (v * np.sqrt(np.clip(w, 0.0, None))[None, :]) @ v.conj().T


def log2m(a, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Base-2 matrix logarithm on the support of ``a``."""
    return matrix_function(a, np.log2, support_only=True, rank_tol=rank_tol)


def pinv_sqrt(a, rank_tol: float = RANK_TOL) -> np.ndarray:
    """``a^{-1/2}`` on the support of ``a``, 0 on its kernel."""
    return matrix_function(a, lambda w: 1.0 / np.sqrt(w), support_only=True, rank_tol=rank_tol)


def trace_norm(m) -> float:
    """Sum of singular values."""
    m = as_matrix(m)
    if hermiticity_residual(m) <= HERMITIAN_TOL:
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def fidelity(rho, rho_prime) -> float:
    """Squared fidelity ``||sqrt(rho) sqrt(rho')||_1 ** 2``, clipped to [0, 1]."""
    rho = as_density(rho, name="rho")
    rho_prime = as_density(rho_prime, name="rho'")
    check_same_dim(rho, rho_prime)
    s = np.linalg.svd(psd_sqrt(rho) @ psd_sqrt(rho_prime), compute_uv=False)
    return float(np.clip(np.sum(s) ** 2, 0.0, 1.0))


def support_basis(a, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal columns spanning the eigenvectors with eigenvalue > rank_tol * lambda_max."""
    w, v = hermitian_eig(a)
    top = w[-1]
    keep = w > rank_tol * top if top > 0 else np.zeros(w.shape, dtype=bool)
    return v[:, keep]


def support_projector(a, rank_tol: float = RANK_TOL) -> np.ndarray:
    v = support_basis(a, rank_tol)
    return v @ v.conj().T


def support_contained(rho, sigma, rank_tol: float = RANK_TOL,
                      tol: float = CONTAINMENT_TOL) -> bool:
    """True iff ``||(I - P) rho (I - P)||_1 <= tol`` with ``P`` the support projector of sigma."""
    return support_leakage(rho, sigma, rank_tol)[0] <= tol


def support_leakage(rho, sigma, rank_tol: float = RANK_TOL) -> tuple[float, np.ndarray]:
    """Weight of ``rho`` outside supp(sigma) and the unit vector carrying most of it."""
    rho = as_hermitian(rho, name="rho")
    sigma = as_hermitian(sigma, name="sigma")
    check_same_dim(rho, sigma)
    q = np.eye(rho.shape[0]) - support_projector(sigma, rank_tol)
    out = q @ rho @ q
    w, v = np.linalg.eigh(0.5 * (out + out.conj().T))
    return float(np.sum(np.abs(w))), v[:, -1]


def require_support(rho, sigma, rank_tol: float = RANK_TOL, tol: float = CONTAINMENT_TOL) -> None:
    """Raise :class:`SupportError` unless supp(rho) is inside supp(sigma)."""
    leak, vec = support_leakage(rho, sigma, rank_tol)
    if leak > tol:
        raise SupportError(
            f"supp(rho) is not contained in supp(sigma): weight {leak:.3e} outside, "
            f"along eigenvector {np.array2string(vec, precision=4)}", vector=vec)


def loewner_leq(a, b, tol: float = PSD_TOL) -> bool:
    """``a <= b`` in the Loewner order, i.e. ``lambda_min(b - a) >= -tol``."""
    a = as_hermitian(a, name="A")
    b = as_hermitian(b, name="B")
    check_same_dim(a, b)
    return bool(np.linalg.eigvalsh(b - a)[0] >= -tol)


def smallest_nonzero_eigenvalue(sigma, rank_tol: float = RANK_TOL) -> float:
    w = np.linalg.eigvalsh(as_hermitian(sigma, name="sigma"))
    if w[-1] <= 0:
        raise DomainError("operator has no positive eigenvalue")
    return float(np.min(w[w > rank_tol * w[-1]]))


# ---------------------------------------------------------------------------
# pure states, partial trace, purification
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PureState:
    """A unit vector on a tensor product of subsystems (row-major ordering)."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        dims = tuple(int(d) for d in self.dims)
        if int(np.prod(dims)) != amps.size:
            raise ValidationError(f"amplitudes of length {amps.size} do not match dims {dims}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state vector is not normalized (norm {norm:.12g})")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", dims)

    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def reduced(self, keep: Sequence[int]) -> np.ndarray:
        return partial_trace(self.amplitudes, self.dims, keep)

    def overlap(self, other: PureState) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def tensor(self, other: PureState) -> PureState:
        return PureState(np.kron(self.amplitudes, other.amplitudes), self.dims + other.dims)


def partial_trace(state, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced operator on subsystems ``keep`` (returned in increasing order).

    ``state`` is a state vector of length ``prod(dims)`` or an operator of
    that size.
    """
    dims = tuple(int(d) for d in dims)
    keep = sorted(set(int(k) for k in keep))
    total = int(np.prod(dims))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValidationError(f"subsystem indices {keep} out of range for dims {dims}")
    trace_out = [k for k in range(len(dims)) if k not in keep]
    kdim = int(np.prod([dims[k] for k in keep])) if keep else 1
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        if state.size != total:
            raise ValidationError(f"vector of length {state.size} does not match dims {dims}")
        psi = state.reshape(dims).transpose(keep + trace_out).reshape(kdim, -1)
        out = psi @ psi.conj().T
    elif state.ndim == 2 and state.shape == (total, total):
        n = len(dims)
        t = state.reshape(dims + dims)
        perm = keep + trace_out
        t = t.transpose(perm + [p + n for p in perm])
        rest = total // kdim
        t = t.reshape(kdim, rest, kdim, rest)
        out = np.einsum("ajbj->ab", t)
    else:
        raise ValidationError(f"state of shape {state.shape} does not match dims {dims}")
    return 0.5 * (out + out.conj().T)


def purify(rho, ancilla_dim: int | None = None) -> PureState:
    """Spectral purification ``sum_i sqrt(p_i) |i>_K |u_i>_H`` on K (x) H.

    ``ancilla_dim`` defaults to ``dim(H)``; any value ``>= rank(rho)`` works.
    Eigenvalues are taken in decreasing order, so ``diag(p, 1-p)`` with
    ``p >= 1/2`` purifies to ``sqrt(p)|00> + sqrt(1-p)|11>``.
    """
    rho = as_density(rho)
    n = rho.shape[0]
    w, v = np.linalg.eigh(rho)
    w, v = w[::-1], v[:, ::-1]
    w = np.clip(w, 0.0, None)
    rank = int(np.sum(_retained(w, RANK_TOL)))
    k = n if ancilla_dim is None else int(ancilla_dim)
    if k < rank:
        raise ValidationError(f"ancilla dimension {k} < rank {rank}")
    amps = np.zeros((k, n), dtype=complex)
    m = min(k, n)
    amps[:m] = (np.sqrt(w[:m])[:, None] * v[:, :m].T)
    amps /= np.linalg.norm(amps)
    return PureState(amps.ravel(), (k, n))


# ---------------------------------------------------------------------------
# random states
# ---------------------------------------------------------------------------


def random_density(dim: int, rank: int | None = None, rng=None) -> np.ndarray:
    """``G G^H / tr`` for a dim x rank matrix of standard complex Gaussians."""
    rank = dim if rank is None else int(rank)
    if not 1 <= rank <= dim:
        raise ValidationError(f"rank must be in [1, {dim}], got {rank}")
    rng = np.random.default_rng(rng)
    g = (rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))) / np.sqrt(2.0)
    m = g @ g.conj().T
    m /= np.real(np.trace(m))
    return 0.5 * (m + m.conj().T)


def random_psd(dim: int, rank: int | None = None, scale: float = 1.0, rng=None) -> np.ndarray:
    """Unnormalized ``scale * G G^H / dim`` (no trace constraint)."""
    rank = dim if rank is None else int(rank)
    rng = np.random.default_rng(rng)
    g = (rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))) / np.sqrt(2.0)
    m = scale * (g @ g.conj().T) / dim
    return 0.5 * (m + m.conj().T)


def random_unitary(dim: int, rng=None) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    rng = np.random.default_rng(rng)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]

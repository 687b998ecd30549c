"""Dense primal-dual interior-point solver for small Hermitian SDPs.

Problems are posed over named Hermitian blocks ``X_b`` (``dim == 1`` blocks
are nonnegative scalars)::

    minimize / maximize   sum_b <C_b, X_b>
    subject to            sum_b <A_ib, X_b>  = b_i     (equalities)
                          sum_b <A_jb, X_b> <= b_j     (inequalities)
                          X_b >= 0

with ``<A, X> = Re tr(A^H X)``. Inequalities receive scalar slack blocks.
By default every complex block is mapped to the real symmetric embedding
``[[Re A, -Im A], [Im A, Re A]]`` (coefficients halved, since the embedding
doubles traces) and the path-following core runs in real arithmetic; the
solution is mapped back and re-symmetrized. ``embed=False`` runs the same
core directly on complex blocks.

The core is an infeasible-start path-following method with
Nesterov-Todd scaling and Mehrotra's predictor-corrector step.

Dual convention (reported in the problem's own sense)::

    minimize:  maximize b^T y  s.t.  S_b = C_b - sum_i y_i A_ib >= 0, y_ineq <= 0
    maximize:  minimize b^T y  s.t.  S_b = sum_i y_i A_ib - C_b >= 0, y_ineq >= 0
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ValidationError
from .jsonio import decode_matrix, encode_matrix

FEAS_TOL = 1e-8
GAP_TOL = 1e-7
MAX_ITER = 200
MAX_BLOCK_DIM = 64
STEP_FRACTION = 0.98
DIVERGENCE_LIMIT = 1e8
DIVERGENCE_PATIENCE = 10
STALL_PATIENCE = 30

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"

SCHEMA_VERSION = 1


def _inner(a, b):
    return float(np.real(np.vdot(a, b)))


# ---------------------------------------------------------------------------
# problem / solution containers
# ---------------------------------------------------------------------------


@dataclass
class SdpProblem:
    """A block-structured SDP in Hermitian standard form.

    Coefficients are dicts mapping block name to a Hermitian array; absent
    blocks contribute zero. ``sense`` is ``"minimize"`` or ``"maximize"``.
    """

    blocks: list[tuple[str, int]]
    objective: dict[str, np.ndarray]
    equalities: list[tuple[dict[str, np.ndarray], float]] = field(default_factory=list)
    inequalities: list[tuple[dict[str, np.ndarray], float]] = field(default_factory=list)
    sense: str = "minimize"

    @property
    def block_dims(self) -> dict[str, int]:
        return dict(self.blocks)

    @property
    def n_constraints(self) -> int:
        return len(self.equalities) + len(self.inequalities)

    def validate(self, max_block_dim: int = MAX_BLOCK_DIM, tol: float = 1e-12) -> None:
        """Raise ``ValidationError`` unless the problem is well formed."""
        if self.sense not in ("minimize", "maximize"):
            raise ValidationError(f"sense must be 'minimize' or 'maximize', got {self.sense!r}")
        names = [name for name, _ in self.blocks]
        if len(set(names)) != len(names):
            raise ValidationError("block names must be unique")
        dims = self.block_dims
        for name, dim in self.blocks:
            if int(dim) < 1:
                raise ValidationError(f"block {name!r} has dimension {dim}")
            if dim > max_block_dim:
                raise ValidationError(
                    f"block {name!r} has dimension {dim} > cap {max_block_dim}")

        def check(coeffs, where):
            for name, mat in coeffs.items():
                if name not in dims:
                    raise ValidationError(f"{where}: unknown block {name!r}")
                mat = np.asarray(mat)
                if mat.shape != (dims[name], dims[name]):
                    raise ValidationError(
                        f"{where}: block {name!r} has shape {mat.shape}, "
                        f"expected {(dims[name], dims[name])}")
                if not np.all(np.isfinite(mat)):
                    raise ValidationError(f"{where}: block {name!r} has non-finite entries")
                scale = max(float(np.max(np.abs(mat), initial=0.0)), 1.0)
                if np.max(np.abs(mat - mat.conj().T), initial=0.0) > tol * scale:
                    raise ValidationError(f"{where}: block {name!r} is not Hermitian")

        check(self.objective, "objective")
        for i, (coeffs, rhs) in enumerate(self.equalities):
            check(coeffs, f"equality {i}")
            if not np.isfinite(rhs):
                raise ValidationError(f"equality {i}: non-finite right-hand side")
        for i, (coeffs, rhs) in enumerate(self.inequalities):
            check(coeffs, f"inequality {i}")
            if not np.isfinite(rhs):
                raise ValidationError(f"inequality {i}: non-finite right-hand side")

    def evaluate(self, coeffs: dict[str, np.ndarray], primal: dict[str, np.ndarray]) -> float:
        return sum(_inner(mat, primal[name]) for name, mat in coeffs.items())

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        def enc(coeffs):
            return {name: encode_matrix(mat) for name, mat in sorted(coeffs.items())}

        return {
            "schema_version": SCHEMA_VERSION,
            "sense": self.sense,
            "blocks": [[name, int(dim)] for name, dim in self.blocks],
            "objective": enc(self.objective),
            "equalities": [{"coeffs": enc(c), "rhs": float(r)} for c, r in self.equalities],
            "inequalities": [{"coeffs": enc(c), "rhs": float(r)} for c, r in self.inequalities],
        }

    @classmethod
    def from_dict(cls, data: dict) -> SdpProblem:
        def dec(coeffs):
            return {name: decode_matrix(obj) for name, obj in coeffs.items()}

        try:
            return cls(
                blocks=[(str(name), int(dim)) for name, dim in data["blocks"]],
                objective=dec(data["objective"]),
                equalities=[(dec(c["coeffs"]), float(c["rhs"])) for c in data.get("equalities", [])],
                inequalities=[(dec(c["coeffs"]), float(c["rhs"]))
                              for c in data.get("inequalities", [])],
                sense=data.get("sense", "minimize"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed SDP problem: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> SdpProblem:
        return cls.from_dict(json.loads(text))


@dataclass
class SdpSolution:
    """Result of :func:`solve`, reported in the problem's own sense."""

    status: str
    primal: dict[str, np.ndarray]
    dual: np.ndarray
    slack: dict[str, np.ndarray]
    primal_objective: float
    dual_objective: float
    gap: float
    iterations: int
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    message: str = ""
    history: list[dict] = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "status": self.status,
            "primal": {k: encode_matrix(v) for k, v in sorted(self.primal.items())},
            "slack": {k: encode_matrix(v) for k, v in sorted(self.slack.items())},
            "dual": [float(v) for v in self.dual],
            "primal_objective": self.primal_objective,
            "dual_objective": self.dual_objective,
            "gap": self.gap,
            "iterations": self.iterations,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "message": self.message,
        }

    @classmethod
    def from_dict(cls, data: dict) -> SdpSolution:
        return cls(
            status=data["status"],
            primal={k: decode_matrix(v) for k, v in data["primal"].items()},
            dual=np.asarray(data["dual"], dtype=float),
            slack={k: decode_matrix(v) for k, v in data["slack"].items()},
            primal_objective=float(data["primal_objective"]),
            dual_objective=float(data["dual_objective"]),
            gap=float(data["gap"]),
            iterations=int(data["iterations"]),
            primal_residual=float(data.get("primal_residual", np.nan)),
            dual_residual=float(data.get("dual_residual", np.nan)),
            message=data.get("message", ""),
        )


# ---------------------------------------------------------------------------
# helpers for building problems
# ---------------------------------------------------------------------------


def hermitian_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis (under ``Re tr(A^H B)``) of n x n Hermitian matrices.

    Pinning ``<E, X>`` for every basis element ``E`` pins the Hermitian
    matrix ``X``; ``n**2`` elements in total.
    """
    basis = []
    r = 1.0 / np.sqrt(2.0)
    for j in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[j, j] = 1.0
        basis.append(e)
    for j in range(n):
        for k in range(j + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[j, k] = e[k, j] = r
            basis.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[j, k] = 1j * r
            e[k, j] = -1j * r
            basis.append(e)
    return basis


def embed_block(a: np.ndarray, n_outer: int, rows: slice, cols: slice | None = None):
    """Place ``a`` (and its adjoint, for off-diagonal placement) in an n_outer block."""
    out = np.zeros((n_outer, n_outer), dtype=complex)
    if cols is None or cols == rows:
        out[rows, rows] = a
    else:
        out[rows, cols] = a
        out[cols, rows] = np.conj(a).T
    return out


def real_embedding(a: np.ndarray) -> np.ndarray:
    """``[[Re A, -Im A], [Im A, Re A]]``."""
    re, im = np.real(a), np.imag(a)
    return np.block([[re, -im], [im, re]])


def real_unembedding(z: np.ndarray) -> np.ndarray:
    """Nearest complex matrix to a real 2n x 2n block (inverse of :func:`real_embedding`)."""
    n = z.shape[0] // 2
    re = 0.5 * (z[:n, :n] + z[n:, n:])
    im = 0.5 * (z[n:, :n] - z[:n, n:])
    out = re + 1j * im
    return 0.5 * (out + out.conj().T)


# ---------------------------------------------------------------------------
# the interior-point core
# ---------------------------------------------------------------------------


def _factor(a):
    """Return (L, L^{-1}) with L L^H = a; eigen fallback when Cholesky fails."""
    a = 0.5 * (a + a.conj().T)
    try:
        l = np.linalg.cholesky(a)
        linv = scipy.linalg.solve_triangular(l, np.eye(l.shape[0], dtype=l.dtype), lower=True)
        return l, linv
    except np.linalg.LinAlgError:
        w, q = np.linalg.eigh(a)
        if w[-1] <= 0:
            return None
        w = np.maximum(w, 1e-15 * w[-1])
        return q * np.sqrt(w)[None, :], (q / np.sqrt(w)[None, :]).conj().T


def _max_step(linv, delta):
    """Largest alpha with L L^H + alpha * delta >= 0 (inf if unbounded)."""
    m = linv @ delta @ linv.conj().T
    lam = scipy.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


class _Core:
    """Path-following iteration on canonical form min <C,X> s.t. A(X) = b, X >= 0."""

    def __init__(self, c_blocks, a_blocks, b, feas_tol, gap_tol, max_iter, fallback=None):
        self.C = c_blocks
        self.A = a_blocks
        self.Aflat = [a.reshape(a.shape[0], -1) for a in a_blocks]
        self.Aconj = [np.conj(a) for a in self.Aflat]
        self.b = np.asarray(b, dtype=float)
        self.m = len(self.b)
        self.dims = [c.shape[0] for c in c_blocks]
        self.N = sum(self.dims)
        self.feas_tol = feas_tol
        self.gap_tol = gap_tol
        self.max_iter = max_iter
        self.fallback = fallback
        self.normb = np.linalg.norm(self.b)
        self.normC = np.sqrt(sum(np.linalg.norm(c) ** 2 for c in c_blocks))

    def op(self, xs):
        out = np.zeros(self.m)
        for ac, x in zip(self.Aconj, xs):
            out += np.real(ac @ x.ravel())
        return out

    def adj(self, y):
        return [(y @ af).reshape(n, n) for af, n in zip(self.Aflat, self.dims)]

    def start(self):
        xs, ss = [], []
        for k, n in enumerate(self.dims):
            a = self.A[k]
            anorm = np.linalg.norm(a.reshape(self.m, -1), axis=1)
            used = anorm > 0
            ratio = (1.0 + np.abs(self.b[used])) / (1.0 + anorm[used])
            zeta = max(10.0, np.sqrt(n), n * float(np.max(ratio, initial=0.0)))
            eta = max(10.0, np.sqrt(n), float(np.max(anorm, initial=0.0)),
                      float(np.linalg.norm(self.C[k])))
            dtype = a.dtype
            xs.append(zeta * np.eye(n, dtype=dtype))
            ss.append(eta * np.eye(n, dtype=dtype))
        return xs, np.zeros(self.m), ss

    def measures(self, xs, y, ss):
        rp = self.b - self.op(xs)
        aty = self.adj(y)
        rd = [c - t - s for c, t, s in zip(self.C, aty, ss)]
        pobj = sum(_inner(c, x) for c, x in zip(self.C, xs))
        dobj = float(self.b @ y)
        relp = np.linalg.norm(rp) / (1.0 + self.normb)
        reld = np.sqrt(sum(np.linalg.norm(r) ** 2 for r in rd)) / (1.0 + self.normC)
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        mu = sum(_inner(x, s) for x, s in zip(xs, ss)) / self.N
        return rp, rd, pobj, dobj, relp, reld, relgap, mu

    def run(self):
        xs, y, ss = self.start()
        history = []
        best = None
        diverging = 0
        status, message = NUMERICAL_FAILURE, "iteration cap reached"
        scale0 = max(max(np.linalg.norm(x) for x in xs), max(np.linalg.norm(s) for s in ss))
        it = 0
        for it in range(self.max_iter + 1):
            rp, rd, pobj, dobj, relp, reld, relgap, mu = self.measures(xs, y, ss)
            history.append({"iteration": it, "primal_objective": pobj, "dual_objective": dobj,
                            "primal_residual": relp, "dual_residual": reld, "mu": mu})
            merit = max(relp, reld, relgap)
            if best is None or merit < best[0]:
                best = (merit, [x.copy() for x in xs], y.copy(), [s.copy() for s in ss], it,
                        (relp, reld, relgap))
            if relp <= self.feas_tol and reld <= self.feas_tol and relgap <= self.gap_tol:
                status, message = OPTIMAL, "converged"
                best = (merit, xs, y, ss, it, (relp, reld, relgap))
                break
            growth = max(max(np.linalg.norm(x) for x in xs),
                         max(np.linalg.norm(s) for s in ss)) / scale0
            diverging = diverging + 1 if growth > DIVERGENCE_LIMIT else 0
            if diverging >= DIVERGENCE_PATIENCE:
                status = INFEASIBLE
                message = ("iterates diverged (norm growth > %.0e for %d iterations); "
                           "primal or dual infeasibility suspected"
                           % (DIVERGENCE_LIMIT, DIVERGENCE_PATIENCE))
                break
            if it == self.max_iter:
                break
            try:
                step = self.step(xs, y, ss, rp, rd, mu)
            except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
                message = f"linear algebra breakdown: {exc}"
                break
            if step is None:
                message = "lost positive definiteness of an iterate"
                break
            xs, y, ss, ap, ad = step
            if max(ap, ad) < 1e-12:
                message = "step length stalled"
                break
            if it - best[4] >= STALL_PATIENCE:
                message = "no progress since iteration %d" % best[4]
                break
        _, bx, by, bs, bit, (bp, bd, bg) = best
        if status == NUMERICAL_FAILURE and self.fallback is not None:
            ffeas, fgap = self.fallback
            if bp <= ffeas and bd <= ffeas and bg <= fgap:
                status = OPTIMAL
                message = f"converged to fallback tolerance ({message} at iteration {it})"
        return status, message, bx, by, bs, bit, history

    def step(self, xs, y, ss, rp, rd, mu):
        lx, ls, gs, ginvs, ws, ds = [], [], [], [], [], []
        for x, s in zip(xs, ss):
            fx, fs = _factor(x), _factor(s)
            if fx is None or fs is None:
                return None
            l, linv = fx
            t = l.conj().T @ s @ l
            ev, u = np.linalg.eigh(0.5 * (t + t.conj().T))
            if ev[0] <= 0:
                return None
            d = np.sqrt(ev)
            g = (l @ u) / np.sqrt(d)[None, :]
            ginv = (np.sqrt(d)[:, None] * u.conj().T) @ linv
            lx.append(linv)
            ls.append(fs[1])
            gs.append(g)
            ginvs.append(ginv)
            ws.append(g @ g.conj().T)
            ds.append(d)

        schur = np.zeros((self.m, self.m))
        for a, ac, w in zip(self.A, self.Aconj, ws):
            waw = w @ a @ w
            schur += np.real(ac @ waw.reshape(self.m, -1).T)
        schur = 0.5 * (schur + schur.T)
        try:
            factor = scipy.linalg.cho_factor(schur, check_finite=False)
            solve_m = lambda rhs: scipy.linalg.cho_solve(factor, rhs, check_finite=False)
        except np.linalg.LinAlgError:
            reg = 1e-13 * max(1.0, float(np.max(np.abs(np.diag(schur)))))
            lu = scipy.linalg.lu_factor(schur + reg * np.eye(self.m), check_finite=False)
            solve_m = lambda rhs: scipy.linalg.lu_solve(lu, rhs, check_finite=False)

        wrdw = self.op([w @ r @ w for w, r in zip(ws, rd)])

        def direction(rhs_tilde):
            rc = []
            for g, d, rt in zip(gs, ds, rhs_tilde):
                tt = 2.0 * rt / (d[:, None] + d[None, :])
                rc.append(g @ tt @ g.conj().T)
            dy = solve_m(rp - self.op(rc) + wrdw)
            # refinement against the unfactored operator keeps
            # A(dx) = rp accurate when the Schur complement is ill-conditioned
            for _ in range(2):
                aty = self.adj(dy)
                dss = [r - t for r, t in zip(rd, aty)]
                dxs = [c - w @ s @ w for c, w, s in zip(rc, ws, dss)]
                err = rp - self.op(dxs)
                if np.linalg.norm(err) <= 1e-15 * (1.0 + np.linalg.norm(rp)):
                    break
                dy = dy + solve_m(err)
            aty = self.adj(dy)
            dss = [r - t for r, t in zip(rd, aty)]
            dxs = [c - w @ s @ w for c, w, s in zip(rc, ws, dss)]
            dxs = [0.5 * (v + v.conj().T) for v in dxs]
            dss = [0.5 * (v + v.conj().T) for v in dss]
            return dxs, dy, dss

        def steplen(dxs, dss):
            ap = min([_max_step(l, dx) for l, dx in zip(lx, dxs)] + [np.inf])
            ad = min([_max_step(r, ds) for r, ds in zip(ls, dss)] + [np.inf])
            return min(1.0, STEP_FRACTION * ap), min(1.0, STEP_FRACTION * ad)

        # predictor
        pred = [-np.diag(d * d).astype(g.dtype) for d, g in zip(ds, gs)]
        dxa, dya, dsa = direction(pred)
        ap, ad = steplen(dxa, dsa)
        mu_aff = sum(_inner(x + ap * dx, s + ad * ds)
                     for x, dx, s, ds in zip(xs, dxa, ss, dsa)) / self.N
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0

        # corrector
        corr = []
        for d, g, ginv, dx, dsv in zip(ds, gs, ginvs, dxa, dsa):
            dxt = ginv @ dx @ ginv.conj().T
            dst = g.conj().T @ dsv @ g
            second = 0.5 * (dxt @ dst + dst @ dxt)
            corr.append(sigma * mu * np.eye(len(d), dtype=g.dtype) - np.diag(d * d) - second)
        dxs, dy, dss = direction(corr)
        ap, ad = steplen(dxs, dss)
        xs = [x + ap * dx for x, dx in zip(xs, dxs)]
        ss = [s + ad * ds for s, ds in zip(ss, dss)]
        y = y + ad * dy
        return xs, y, ss, ap, ad


# ---------------------------------------------------------------------------
# front end
# ---------------------------------------------------------------------------


def _is_complex(problem):
    mats = list(problem.objective.values())
    for coeffs, _ in problem.equalities + problem.inequalities:
        mats.extend(coeffs.values())
    return any(np.iscomplexobj(m) and np.any(np.imag(m) != 0) for m in mats)


def solve(problem: SdpProblem, feas_tol: float = FEAS_TOL, gap_tol: float = GAP_TOL,
          max_iter: int = MAX_ITER, embed: bool = True,
          max_block_dim: int = MAX_BLOCK_DIM,
          fallback: tuple[float, float] | None = None) -> SdpSolution:
    """Solve ``problem`` and return primal/dual iterates with residuals.

    The returned status is ``"optimal"`` only when the relative primal and
    dual residuals are within ``feas_tol`` and the relative gap within
    ``gap_tol``. Otherwise the best iterate seen is returned with status
    ``"numerical-failure"`` or, when the iterates diverge, ``"infeasible"``.

    ``fallback = (feas, gap)`` relaxes the criteria only when the iteration
    stops early (breakdown, stall or cap): the best iterate is then
    reported optimal if it meets these looser tolerances. This lets callers
    request high accuracy without risking a failure status near the edge
    of floating-point resolution.
    """
    problem.validate(max_block_dim=max_block_dim)
    dims = problem.block_dims
    names = [name for name, _ in problem.blocks]
    n_eq = len(problem.equalities)
    n_ineq = len(problem.inequalities)
    constraints = problem.equalities + problem.inequalities
    m = len(constraints)
    sign = 1.0 if problem.sense == "minimize" else -1.0
    use_complex = _is_complex(problem)

    # canonical blocks: user blocks, then one slack scalar per inequality
    canon = []
    for name in names:
        n = dims[name]
        if n == 1 or not use_complex:
            canon.append(("plain", name, n))
        elif embed:
            canon.append(("embedded", name, 2 * n))
        else:
            canon.append(("complex", name, n))

    def lift(mat, kind):
        mat = np.asarray(mat, dtype=complex)
        if kind == "embedded":
            return 0.5 * real_embedding(mat)
        if kind == "complex":
            return mat
        return np.real(mat).astype(float)

    c_blocks, a_blocks = [], []
    for kind, name, n in canon:
        dtype = complex if kind == "complex" else float
        c = problem.objective.get(name)
        c_blocks.append(sign * lift(c, kind) if c is not None else np.zeros((n, n), dtype=dtype))
        a = np.zeros((m, n, n), dtype=dtype)
        for i, (coeffs, _) in enumerate(constraints):
            if name in coeffs:
                a[i] = lift(coeffs[name], kind)
        a_blocks.append(a)
    for j in range(n_ineq):
        c_blocks.append(np.zeros((1, 1)))
        a = np.zeros((m, 1, 1))
        a[n_eq + j, 0, 0] = 1.0
        a_blocks.append(a)
    b = np.array([rhs for _, rhs in constraints], dtype=float)

    core = _Core(c_blocks, a_blocks, b, feas_tol, gap_tol, max_iter, fallback)
    status, message, xs, y, ss, iters, history = core.run()

    primal, slack = {}, {}
    for (kind, name, _), x, s in zip(canon, xs, ss):
        if kind == "embedded":
            primal[name] = real_unembedding(x)
            slack[name] = 2.0 * real_unembedding(s)
        else:
            primal[name] = 0.5 * (x + np.conj(x).T).astype(complex)
            slack[name] = 0.5 * (s + np.conj(s).T).astype(complex)
    # back to the user's sense: S = sign * (C - A^T y_int) and y = sign * y_int
    # user-sense multipliers y = sign * y_int leave the slack S_int unchanged
    dual = sign * y
    pobj = problem.evaluate(problem.objective, primal)
    dobj = float(b @ dual)
    rp = np.array([problem.evaluate(c, primal) - r for c, r in problem.equalities])
    rq = np.array([max(0.0, problem.evaluate(c, primal) - r) for c, r in problem.inequalities])
    sol = SdpSolution(
        status=status, primal=primal, dual=dual, slack=slack,
        primal_objective=pobj, dual_objective=dobj, gap=sign * (pobj - dobj),
        iterations=iters,
        primal_residual=float(np.linalg.norm(np.concatenate([rp, rq]))),
        dual_residual=float(history[-1]["dual_residual"]) if history else np.nan,
        message=message, history=history,
    )
    # history objectives are in canonical (minimize) sense; report in user sense
    for rec in history:
        rec["primal_objective"] *= sign
        rec["dual_objective"] *= sign
    return sol


# ---------------------------------------------------------------------------
# independent certificate check
# ---------------------------------------------------------------------------


@dataclass
class CertificateReport:
    """Residuals recomputed from problem data and the returned variables only."""

    checks: dict[str, tuple[float, bool]]

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks.values())

    def failures(self) -> list[str]:
        return [name for name, (_, ok) in self.checks.items() if not ok]

    def to_dict(self) -> dict:
        return {name: {"value": float(v), "pass": bool(ok)} for name, (v, ok) in self.checks.items()}


def verify_certificate(problem: SdpProblem, solution: SdpSolution,
                       tol: float = 1e-8) -> CertificateReport:
    """Recompute primal/dual feasibility, PSD margins and the duality gap.

    Nothing from the solver's internals is trusted except the returned
    primal blocks and dual multipliers; the dual slack is rebuilt from the
    problem data. Residual checks are absolute at ``tol``; the gap check
    is relative, ``|gap| <= tol * (1 + |primal objective|)``.
    """
    dims = problem.block_dims
    sign = 1.0 if problem.sense == "minimize" else -1.0
    constraints = problem.equalities + problem.inequalities
    n_eq = len(problem.equalities)
    y = np.asarray(solution.dual, dtype=float)
    checks = {}

    eq = [abs(problem.evaluate(c, solution.primal) - r) for c, r in problem.equalities]
    checks["primal_equality_residual"] = (max(eq, default=0.0), max(eq, default=0.0) <= tol)
    ineq = [max(0.0, problem.evaluate(c, solution.primal) - r) for c, r in problem.inequalities]
    checks["primal_inequality_violation"] = (max(ineq, default=0.0),
                                             max(ineq, default=0.0) <= tol)
    margins = []
    for name, n in problem.blocks:
        x = np.asarray(solution.primal[name])
        herm = float(np.max(np.abs(x - x.conj().T), initial=0.0))
        margins.append(min(np.linalg.eigvalsh(0.5 * (x + x.conj().T))[0], -herm))
    pm = min(margins) if margins else 0.0
    checks["primal_psd_margin"] = (pm, pm >= -tol)

    dual_margins = []
    for name, n in problem.blocks:
        s = np.asarray(problem.objective.get(name, np.zeros((n, n))), dtype=complex).copy()
        for yi, (coeffs, _) in zip(y, constraints):
            if name in coeffs:
                s = s - yi * np.asarray(coeffs[name])
        s = sign * s
        dual_margins.append(np.linalg.eigvalsh(0.5 * (s + s.conj().T))[0])
    dm = min(dual_margins) if dual_margins else 0.0
    checks["dual_psd_margin"] = (dm, dm >= -tol)
    sign_violation = max((max(0.0, sign * y[n_eq + j]) for j in range(len(problem.inequalities))),
                         default=0.0)
    checks["dual_sign_violation"] = (sign_violation, sign_violation <= tol)

    pobj = problem.evaluate(problem.objective, solution.primal)
    dobj = float(sum(yi * r for yi, (_, r) in zip(y, constraints)))
    gap = sign * (pobj - dobj)
    checks["duality_gap"] = (gap, abs(gap) <= tol * (1.0 + abs(pobj)))
    return CertificateReport(checks)

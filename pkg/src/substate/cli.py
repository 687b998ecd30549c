"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or undefined quantity, 2 solver
failure, 3 a verification suite had failing trials. Errors are written to
stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import constructions as cons
from . import divergences as div
from . import harness
from .errors import DomainError, SolverError, SubstateError, ValidationError
from .jsonio import encode_matrix, load_matrix, read_text
from .operators import RANK_TOL, PSD_TOL, as_density, as_psd, fidelity
from .sdp import SdpProblem, solve

SCHEMA_VERSION = 1
CONFIG_ENV = "SUBSTATE_CONFIG"

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_SUITE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _decimal(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a decimal number, got {text!r}") from None
    if not math.isfinite(value) or text.strip().lower().startswith(("0x", "-0x")):
        raise argparse.ArgumentTypeError(f"expected a finite decimal number, got {text!r}")
    return value


def _decimal_list(text: str) -> list[float]:
    return [_decimal(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _state(path, args, name):
    return as_density(load_matrix(path), tol=args.tol, name=f"{name} ({path})")


def _finite(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _cmd_compute(args):
    what = args.quantity
    a = _state(args.first, args, "rho")
    b = _state(args.second, args, "sigma")
    out: dict = {"quantity": what}
    if what == "relent":
        out["value_bits"] = div.relative_entropy(a, b, rank_tol=args.rank_tol)
    elif what == "dmax":
        out["value_bits"] = div.relative_min_entropy(a, b, rank_tol=args.rank_tol)
        kappa = 2.0 ** out["value_bits"]
        lo = float(np.linalg.eigvalsh(kappa * b - a)[0])
        out["residuals"] = {"loewner_min_eig": lo}
    elif what == "dobs":
        res = div.observational_divergence(a, b, grid_size=args.grid, refine_tol=args.refine,
                                           rank_tol=args.rank_tol)
        out.update({
            "value_bits": res.value,
            "infinite": res.infinite,
            "witness": encode_matrix(res.witness),
            "witness_p": res.witness_p,
            "witness_q": res.witness_q,
        })
        if not res.infinite:
            recomputed = res.witness_p * math.log2(res.witness_p / res.witness_q) \
                if res.witness_p > 0 else 0.0
            out["residuals"] = {"value_vs_witness": abs(recomputed - res.value)}
    elif what == "smooth":
        eps = _one_eps(args)
        cert = div.smooth_relative_min_entropy(a, b, eps, rank_tol=args.rank_tol,
                                               keep_problem=args.dump_sdp is not None)
        if args.dump_sdp is not None:
            _write(args.dump_sdp, cert.problem.to_json() + "\n")
        out.update({"value_bits": cert.value_bits, "certificate": cert.to_dict(),
                    "residuals": cert.residuals(), "checks": cert.checks()})
    elif what == "fidelity":
        closed = fidelity(a, b)
        sdp_val = div.fidelity_sdp(a, b)
        out.update({"value": closed, "value_sdp": sdp_val,
                    "residuals": {"sdp_vs_closed_form": abs(sdp_val - closed)}})
    return out, EXIT_OK


def _one_eps(args) -> float:
    if not args.eps:
        raise ValidationError("--eps is required")
    if len(args.eps) != 1:
        raise ValidationError("--eps takes a single value for this command")
    return args.eps[0]


def _cmd_construct(args):
    rho = _state(args.first, args, "rho")
    sigma = _state(args.second, args, "sigma")
    eps = _one_eps(args)
    if args.what == "substate":
        if args.measurement is None:
            raise ValidationError("construct substate needs a measurement file M")
        m = as_psd(load_matrix(args.measurement), tol=args.tol, name=f"M ({args.measurement})")
        d = cons.divergence_value(div.observational_divergence(rho, sigma, grid_size=args.grid,
                                                               refine_tol=args.refine))
        built = cons.substate_for_measurement(rho, sigma, m, eps, d=d)
        rp = built.rho_prime
        lhs = (1.0 - eps) * float(np.real(np.vdot(m, rp)))
        rhs = 2.0 ** (d / eps) * float(np.real(np.vdot(m, sigma)))
        delta = float(np.real(np.vdot(built.projector, rho)))
        out = {
            "divergence_bits": d,
            "rho_prime": encode_matrix(rp),
            "indices": built.indices,
            "projector": encode_matrix(built.projector),
            "residuals": {
                "projected_weight_minus_eps": delta - eps,
                "fidelity_shortfall": (1.0 - eps) - fidelity(rho, rp),
                "measurement_excess": lhs - rhs,
            },
        }
    else:
        trip = cons.purification_decomposition(rho, sigma, eps)
        out = {
            "alpha": trip.alpha,
            "divergence_bits": trip.divergence,
            "rho_prime": encode_matrix(trip.rho_prime),
            "theta": encode_matrix(trip.theta),
            "v_prime": _vec(trip.v_prime),
            "w_prime": _vec(trip.w_prime),
            "w": _vec(trip.w),
            "residuals": trip.residuals(),
        }
    return out, EXIT_OK


def _vec(state):
    return {"dims": list(state.dims),
            "amplitudes": [[float(z.real), float(z.imag)] for z in state.amplitudes]}


def _cmd_check(args):
    rho = _state(args.first, args, "rho")
    sigma = _state(args.second, args, "sigma")
    grid = args.eps if args.eps else list(cons.DEFAULT_EPS_GRID)
    rep = cons.converse_check(rho, sigma, eps_grid=grid, rank_tol=args.rank_tol)
    out = {"value_bits": rep.divergence, "report": rep.to_dict(),
           "residuals": {"divergence_minus_bound": rep.divergence - rep.bound}}
    return out, EXIT_OK


def _load_config(args) -> harness.TrialConfig:
    data: dict = {}
    path = args.config or os.environ.get(CONFIG_ENV)
    if path:
        try:
            data = json.loads(read_text(path))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise ValidationError(f"{path}: config must be a JSON object")
    if args.dims:
        data["dims"] = args.dims
    if args.eps:
        data["epsilons"] = args.eps
    if args.trials is not None:
        data["trials"] = args.trials
    if args.seed is not None:
        data["seed"] = args.seed
    return harness.TrialConfig.from_dict(data)


def _cmd_verify(args):
    config = _load_config(args)
    names = list(harness.SUITES) if args.suite == "all" else [args.suite]
    reports = {name: harness.SUITES[name](config) for name in names}
    ok = all(r.passed for r in reports.values())
    if args.format == "csv":
        text = "".join(harness.report_to_text(r, "csv") for r in reports.values())
    elif len(reports) == 1:
        text = harness.report_to_text(next(iter(reports.values())), "json")
    else:
        body = {"schema_version": SCHEMA_VERSION,
                "reports": {k: r.to_dict() for k, r in reports.items()},
                "passed": ok}
        text = json.dumps(body, sort_keys=True, indent=2) + "\n"
    _emit_text(args, text)
    return None, EXIT_OK if ok else EXIT_SUITE


def _cmd_solve_sdp(args):
    problem = SdpProblem.from_json(read_text(args.problem))
    sol = solve(problem, feas_tol=args.feas_tol, gap_tol=args.gap_tol,
                fallback=(1e-8, 1e-7))
    out = {"status": sol.status, "primal_objective": sol.primal_objective,
           "dual_objective": sol.dual_objective, "gap": sol.gap,
           "iterations": sol.iterations, "message": sol.message}
    if sol.primal_objective > 0:
        out["value_bits"] = math.log2(sol.primal_objective)
    return out, EXIT_OK if sol.optimal else EXIT_SOLVER


def _write(path, text):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"{path}: cannot write ({exc.strerror})") from exc


def _emit_text(args, text):
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _finite(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=_decimal, default=PSD_TOL,
                        help="PSD tolerance for input validation")
    common.add_argument("--rank-tol", type=_decimal, default=RANK_TOL, dest="rank_tol")
    common.add_argument("--eps", type=_decimal_list, default=None,
                        help="smoothing parameter(s), comma separated")
    common.add_argument("--grid", type=int, default=div.GRID_SIZE,
                        help="p-grid size for the divergence sweep")
    common.add_argument("--refine", type=_decimal, default=div.REFINE_TOL,
                        help="golden-section width for the divergence sweep")
    common.add_argument("--out", default=None, help="write output here instead of stdout")

    parser = _Parser(prog="substate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compute", parents=[common], help="entropic quantities of a pair")
    p.add_argument("quantity", choices=["relent", "dmax", "dobs", "smooth", "fidelity"])
    p.add_argument("first", help="rho matrix JSON ('-' for stdin)")
    p.add_argument("second", help="sigma matrix JSON")
    p.add_argument("--dump-sdp", default=None, dest="dump_sdp",
                   help="write the instantiated smoothing SDP to this path")
    p.set_defaults(func=_cmd_compute)

    p = sub.add_parser("construct", parents=[common], help="explicit constructions")
    p.add_argument("what", choices=["substate", "purify-decompose"])
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("measurement", nargs="?", default=None,
                   help="PSD operator M (construct substate only)")
    p.set_defaults(func=_cmd_construct)

    p = sub.add_parser("check", parents=[common], help="converse check")
    p.add_argument("what", choices=["converse"])
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("verify", parents=[common], help="randomized verification suites")
    p.add_argument("suite", choices=[*harness.SUITES, "all"])
    p.add_argument("--dims", type=_int_list, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--config", default=None,
                   help=f"TrialConfig JSON (default: ${CONFIG_ENV})")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("solve-sdp", parents=[common], help="solve a dumped SDP problem")
    p.add_argument("problem")
    p.add_argument("--feas-tol", type=_decimal, default=div.SMOOTH_FEAS_TOL, dest="feas_tol")
    p.add_argument("--gap-tol", type=_decimal, default=div.SMOOTH_GAP_TOL, dest="gap_tol")
    p.set_defaults(func=_cmd_solve_sdp)
    return parser


def _fail(kind, exc, code):
    err = {"schema_version": SCHEMA_VERSION, "error": kind, "message": str(exc)}
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def dispatch(argv=None) -> int:
    """Run one command; returns the process exit code."""
    try:
        args = build_parser().parse_args(argv)
        out, code = args.func(args)
    except SolverError as exc:
        return _fail("solver", exc, EXIT_SOLVER)
    except ValidationError as exc:
        return _fail("validation", exc, EXIT_INPUT)
    except (DomainError, SubstateError) as exc:
        return _fail("domain", exc, EXIT_INPUT)
    except OSError as exc:
        return _fail("io", exc, EXIT_INPUT)
    if out is not None:
        out = {"schema_version": SCHEMA_VERSION, **_jsonable(out)}
        try:
            _emit_text(args, json.dumps(out, sort_keys=True, indent=2) + "\n")
        except ValidationError as exc:
            return _fail("io", exc, EXIT_INPUT)
    return code


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()

"""Seeded verification campaigns over random state pairs.

Every trial draws its inputs from its own substream
``SeedSequence(seed, spawn_key=(cell, trial))``, so a trial's inputs do
not depend on which other trials run or in what order. Solver failures
are recorded as failed trials and never abort a suite.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .constructions import THEOREM_SLACK, converse_check, theorem_bound_bits
from .divergences import (
    inner_minimum,
    observational_divergence,
    relative_entropy,
    relative_min_entropy,
    smooth_relative_min_entropy,
)
from .errors import DomainError, SubstateError
from .operators import random_density, random_unitary

SCHEMA_VERSION = 1

DEFAULT_TOLERANCES = {
    "theorem": THEOREM_SLACK,
    "relation_d": 1e-4,
    "relation_s": 1e-6,
    "minimax": 1e-5,
}


@dataclass
class TrialConfig:
    """Campaign parameters.

    Attributes:
        ranks: ``"full"`` (both states full rank), ``"random"`` (sigma full
            rank on a random subspace, rho of random rank inside it) or an
            integer fixing the rank of rho.
    """

    dims: list[int] = field(default_factory=lambda: [2, 3, 4, 6, 8])
    ranks: str | int = "full"
    epsilons: list[float] = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7])
    trials: int = 50
    seed: int = 0
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self):
        self.dims = [int(d) for d in self.dims]
        self.epsilons = [float(e) for e in self.epsilons]
        if not self.dims or any(d < 2 for d in self.dims):
            raise DomainError(f"dims must be integers >= 2, got {self.dims}")
        if any(not 0.0 < e < 1.0 for e in self.epsilons):
            raise DomainError(f"epsilons must lie in (0, 1), got {self.epsilons}")
        if int(self.trials) < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")
        self.trials = int(self.trials)
        if not (isinstance(self.ranks, int) or self.ranks in ("full", "random")):
            raise DomainError(f"unknown rank policy {self.ranks!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        self.tolerances = {**DEFAULT_TOLERANCES, **self.tolerances}

    @classmethod
    def from_dict(cls, data: dict) -> TrialConfig:
        known = {"dims", "ranks", "epsilons", "trials", "seed", "tolerances"}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def trial_rng(seed: int, cell: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(cell, trial)))


def gen_instance(dim: int, rank_policy="full", rng=None) -> tuple[np.ndarray, np.ndarray]:
    """Random pair with ``supp rho`` inside ``supp sigma`` by construction."""
    rng = np.random.default_rng(rng)
    if rank_policy == "full":
        return random_density(dim, dim, rng), random_density(dim, dim, rng)
    if rank_policy == "random":
        sub = int(rng.integers(1, dim + 1))
        rank = int(rng.integers(1, sub + 1))
        basis = random_unitary(dim, rng)[:, :sub]
        sigma = basis @ random_density(sub, sub, rng) @ basis.conj().T
        rho = basis @ random_density(sub, rank, rng) @ basis.conj().T
        return 0.5 * (rho + rho.conj().T), 0.5 * (sigma + sigma.conj().T)
    rank = int(rank_policy)
    return random_density(dim, rank, rng), random_density(dim, dim, rng)


def instance_hash(*mats) -> str:
    h = hashlib.sha256()
    for m in mats:
        h.update(np.ascontiguousarray(m, dtype=complex).tobytes())
    return h.hexdigest()[:16]


@dataclass
class Report:
    """Per-trial records plus an aggregate recomputable from them."""

    suite: str
    config: dict
    records: list[dict] = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.records)

    def finalize(self) -> Report:
        self.aggregate = aggregate(self.records)
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> Report:
        return cls(**data)


def aggregate(records: list[dict]) -> dict:
    """Pass counts, worst violation per check, and solver iteration stats."""
    worst: dict[str, float] = {}
    for r in records:
        for name, v in r.get("violations", {}).items():
            if v is not None:
                worst[name] = max(worst.get(name, -math.inf), v)
    iters = [r["iterations"] for r in records if r.get("iterations") is not None]
    return {
        "trials": len(records),
        "passed": sum(1 for r in records if r["passed"]),
        "failed": sum(1 for r in records if not r["passed"]),
        "errors": sum(1 for r in records if r.get("error")),
        "max_violation": worst,
        "iterations": {
            "count": len(iters),
            "mean": float(np.mean(iters)) if iters else None,
            "max": int(max(iters)) if iters else None,
        },
    }


def _config_dict(config: TrialConfig) -> dict:
    return asdict(config)


def _run(suite: str, config: TrialConfig, trial_fn) -> Report:
    report = Report(suite=suite, config=_config_dict(config))
    for cell, dim in enumerate(config.dims):
        for trial in range(config.trials):
            rng = trial_rng(config.seed, cell, trial)
            rho, sigma = gen_instance(dim, config.ranks, rng)
            base = {"cell": cell, "trial": trial, "dim": dim,
                    "input_hash": instance_hash(rho, sigma)}
            start = time.perf_counter()
            try:
                rows = trial_fn(rho, sigma, config)
            except (SubstateError, ArithmeticError, np.linalg.LinAlgError) as exc:
                rows = [{"passed": False, "error": f"{type(exc).__name__}: {exc}",
                         "violations": {}}]
            elapsed = time.perf_counter() - start
            for row in rows:
                row.setdefault("error", None)
                row["time_s"] = elapsed / len(rows)
                report.records.append({**base, **row})
    return report.finalize()


def _thm1_trial(rho, sigma, config):
    tol = config.tolerances["theorem"]
    d = observational_divergence(rho, sigma).value
    rows = []
    for eps in config.epsilons:
        try:
            cert = smooth_relative_min_entropy(rho, sigma, eps)
        except SubstateError as exc:
            rows.append({"epsilon": eps, "divergence": d, "passed": False,
                         "error": f"{type(exc).__name__}: {exc}", "violations": {}})
            continue
        bound = theorem_bound_bits(d, eps)
        margin = bound - cert.value_bits
        checks = cert.checks()
        rows.append({
            "epsilon": eps,
            "divergence": d,
            "smooth_bits": cert.value_bits,
            "bound_bits": bound,
            "margin": margin,
            "iterations": cert.iterations,
            "certificate_residuals": cert.residuals(),
            "certificate_ok": all(checks.values()),
            "violations": {"theorem1": -margin},
            "passed": margin >= -tol,
        })
    return rows


def run_thm1_suite(config: TrialConfig) -> Report:
    """``S_eps <= D/eps + log2(1/(1-eps))`` for every trial and eps.

    D is computed once per pair and shared across the eps list.
    """
    return _run("thm1", config, _thm1_trial)


def _converse_trial(rho, sigma, config):
    tol = config.tolerances["theorem"]
    rep = converse_check(rho, sigma, eps_grid=config.epsilons, slack=tol)
    k_excess = max(p["k"] for p in rep.profile) - rep.divergence
    return [{
        "converse": rep.to_dict(),
        "violations": {"converse_upper": rep.divergence - rep.bound,
                       "converse_lower": k_excess},
        "passed": bool(rep.passed and rep.forward_ok),
    }]


def run_converse_suite(config: TrialConfig) -> Report:
    """``k <= D`` and ``D <= 4k + 3`` with ``eps = delta/4`` added to the grid."""
    return _run("converse", config, _converse_trial)


def _relation_trial(rho, sigma, config):
    tol = config.tolerances
    d = observational_divergence(rho, sigma).value
    s = relative_entropy(rho, sigma)
    smax = relative_min_entropy(rho, sigma)
    v = {
        "d_le_s_plus_1": d - (s + 1.0),
        "s_le_smax": s - smax,
        "d_nonneg": -d,
        "smax_nonneg": -smax,
    }
    ok = (v["d_le_s_plus_1"] <= tol["relation_d"] and v["s_le_smax"] <= tol["relation_s"]
          and v["d_nonneg"] <= tol["relation_s"] and v["smax_nonneg"] <= tol["relation_s"])
    return [{"divergence": d, "relative_entropy": s, "relative_min_entropy": smax,
             "violations": v, "passed": bool(ok)}]


def run_relation_suite(config: TrialConfig) -> Report:
    """``D <= S + 1``, ``S <= S_inf``, ``D >= 0`` and ``S_inf >= 0`` per pair."""
    return _run("relations", config, _relation_trial)


def _minimax_trial(rho, sigma, config):
    tol = config.tolerances["minimax"]
    rows = []
    for eps in config.epsilons:
        cert = smooth_relative_min_entropy(rho, sigma, eps)
        inner = inner_minimum(cert.Z1, rho, eps)
        rel = abs(inner - cert.kappa) / cert.kappa
        rows.append({"epsilon": eps, "kappa": cert.kappa, "inner_min": inner,
                     "relative_difference": rel, "iterations": cert.iterations,
                     "violations": {"minimax": rel}, "passed": rel <= tol})
    return rows


def run_minimax_check(config: TrialConfig) -> Report:
    """``2^S_eps`` against the inner minimization at the dual witness ``Z1``."""
    return _run("minimax", config, _minimax_trial)


SUITES = {
    "thm1": run_thm1_suite,
    "converse": run_converse_suite,
    "relations": run_relation_suite,
    "minimax": run_minimax_check,
}


def _flatten(prefix, value, out):
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}" if prefix else k, value[k], out)
    elif isinstance(value, list):
        out[prefix] = json.dumps(value, sort_keys=True)
    else:
        out[prefix] = value


def report_to_text(report: Report, fmt: str = "json") -> str:
    """Serialize deterministically: sorted keys, fixed float formatting."""
    if fmt == "json":
        return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        rows = []
        for r in report.records:
            flat: dict = {}
            _flatten("", r, flat)
            rows.append(flat)
        cols = sorted({k for row in rows for k in row})
        buf = io.StringIO()
        buf.write(f"# schema_version={report.schema_version} suite={report.suite}\n")
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()
    raise DomainError(f"unknown report format {fmt!r}")


def write_report(report: Report, path, fmt: str = "json") -> None:
    """Write ``report`` to ``path`` as JSON or CSV.

    Raises:
        OSError: with the path in the message.
    """
    text = report_to_text(report, fmt)
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write report to {path}: {exc.strerror}") from exc


def read_report(path) -> Report:
    return Report.from_dict(json.loads(Path(path).read_text()))

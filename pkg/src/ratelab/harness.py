"""Experiment orchestration: plans, replication loops, slope fits, CSV I/O.

All randomness derives from (base seed, n index, replication index) via
counter-based streams, so reruns are byte-identical and replications can
be scheduled in any order.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass

import numpy as np

from .erm import EVAL_STREAM, fit, l2_error
from .losses import LossSpec
from .noise import CovariateSpec, NoiseSpec, sample_covariates, sample_noise
from .rng import RngStream
from .sieves import PartitionSieve, TargetFunction, rate_optimal_cells


class PlanError(ValueError):
    pass


RUN_CSV_HEADER = [
    "plan_id",
    "n",
    "replication",
    "l2_error",
    "empirical_risk",
    "tau",
    "wall_time",
    "seed",
    "stream_id",
    "warnings",
]

PHASE_CSV_HEADER = ["m", "gamma", "s", "exponent", "regime", "e_complex", "e_heavy"]


@dataclass(frozen=True)
class ExperimentPlan:
    id: str
    noise: NoiseSpec
    covariates: CovariateSpec
    target: TargetFunction
    loss: LossSpec
    sample_sizes: tuple
    replications: int
    base_seed: int
    sieve_kind: str = "PartitionSieve"
    holder_alpha: float = 1.0  # drives the K_n = ceil(n^{1/(2a+d)}) tuning rule
    m_bound: float = 2.0
    tau_schedule: str = "fixed"  # fixed | adaptive
    tau_constant: float = 1.0
    moment_margin: float = 0.1
    n_eval: int = 2000

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sample_sizes)
        object.__setattr__(self, "sample_sizes", sizes)
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise PlanError("sample sizes must be strictly increasing")
        if self.replications < 1:
            raise PlanError("need at least one replication")
        if self.tau_schedule not in ("fixed", "adaptive"):
            raise PlanError(f"unknown tau schedule {self.tau_schedule!r}")
        if self.target.sup_norm() > self.m_bound + 1e-12:
            raise PlanError("target sup-norm exceeds the sieve truncation bound")

    def validate_moments(self) -> None:
        """Reject theorem/noise mismatches before any sampling happens."""
        if self.loss.kind in ("Squared", "Huber"):
            self.noise.require_moments(1.0)


@dataclass(frozen=True)
class RunRecord:
    plan_id: str
    n: int
    replication: int
    l2_error: float
    empirical_risk: float
    tau: float
    wall_time: float
    seed: int
    stream_id: int
    warnings: str = ""


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    stderr_slope: float
    n_min: int
    n_max: int
    aggregation: str


def _replication_stream(plan: ExperimentPlan, n_index: int, replication: int) -> RngStream:
    return RngStream(plan.base_seed, ((n_index + 1) << 32) | replication)


def _tau_for(plan: ExperimentPlan, n: int, n_cells: int) -> float:
    if plan.loss.kind != "Huber":
        return plan.loss.tau
    if plan.tau_schedule == "fixed":
        return plan.loss.tau
    m = plan.noise.usable_m(plan.moment_margin)
    v_m = plan.noise.moment(m)
    n_tilde = n / n_cells
    return plan.tau_constant * (v_m * n_tilde) ** (1.0 / m)


def run_plan(plan: ExperimentPlan) -> list[RunRecord]:
    """Execute |sample_sizes| x replications fits; deterministic in the seed."""
    plan.validate_moments()
    records = []
    eval_stream = RngStream(plan.base_seed, EVAL_STREAM.stream_id)
    for n_index, n in enumerate(plan.sample_sizes):
        k = rate_optimal_cells(n, plan.holder_alpha, plan.covariates.dim)
        sieve = PartitionSieve(plan.covariates.dim, k, m_bound=plan.m_bound)
        tau = _tau_for(plan, n, sieve.n_cells)
        loss = LossSpec(plan.loss.kind, tau) if plan.loss.kind == "Huber" else plan.loss
        for rep in range(plan.replications):
            t0 = time.perf_counter()
            stream = _replication_stream(plan, n_index, rep)
            x = sample_covariates(plan.covariates, stream.child(0), n)
            xi = sample_noise(plan.noise, stream.child(1), n)
            y = plan.target(x) + xi
            result = fit(sieve, (x, y), loss)
            err = l2_error(result.model, plan.target, plan.covariates, plan.n_eval, eval_stream)
            records.append(
                RunRecord(
                    plan_id=plan.id,
                    n=n,
                    replication=rep,
                    l2_error=err,
                    empirical_risk=result.empirical_risk,
                    tau=tau,
                    wall_time=time.perf_counter() - t0,
                    seed=plan.base_seed,
                    stream_id=stream.stream_id,
                    warnings="",
                )
            )
    return records


def aggregate_errors(records: list[RunRecord], aggregation: str = "median") -> dict[int, float]:
    if aggregation not in ("median", "mean"):
        raise PlanError(f"unknown aggregation {aggregation!r}")
    by_n: dict[int, list[float]] = {}
    for rec in records:
        by_n.setdefault(rec.n, []).append(rec.l2_error)
    agg = np.median if aggregation == "median" else np.mean
    return {n: float(agg(v)) for n, v in sorted(by_n.items())}


def fit_rate(records: list[RunRecord], aggregation: str = "median") -> RateFit:
    """OLS of log aggregated error on log n; slope estimates the rate exponent."""
    agg = aggregate_errors(records, aggregation)
    if len(agg) < 4:
        raise PlanError("rate fits need at least 4 distinct sample sizes")
    reps = {}
    for rec in records:
        reps[rec.n] = reps.get(rec.n, 0) + 1
    if min(reps.values()) < 30:
        raise PlanError("rate fits need at least 30 replications per sample size")
    if any(v <= 0 for v in agg.values()):
        raise PlanError("degenerate fit: an aggregated error is zero")
    log_n = np.log(np.array(list(agg.keys()), dtype=float))
    log_e = np.log(np.array(list(agg.values())))
    A = np.column_stack([log_n, np.ones_like(log_n)])
    coef, residuals, *_ = np.linalg.lstsq(A, log_e, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    fitted = A @ coef
    dof = max(len(log_n) - 2, 1)
    sigma2 = float(np.sum((log_e - fitted) ** 2)) / dof
    sxx = float(np.sum((log_n - log_n.mean()) ** 2))
    stderr = math.sqrt(sigma2 / sxx) if sxx > 0 else math.inf
    return RateFit(slope, intercept, stderr, int(min(agg)), int(max(agg)), aggregation)


def tail_profile(records: list[RunRecord]) -> dict:
    """{P50, P90, P99} of measured error at a fixed n, plus the P99/P50 ratio."""
    ns = {rec.n for rec in records}
    if len(ns) != 1:
        raise PlanError("tail profiles are taken at a single sample size")
    errors = np.array([rec.l2_error for rec in records])
    if len(errors) < 200:
        raise PlanError("tail profiles need at least 200 replications")
    p50, p90, p99 = (float(np.quantile(errors, q)) for q in (0.5, 0.9, 0.99))
    return {"P50": p50, "P90": p90, "P99": p99, "ratio": p99 / p50 if p50 > 0 else math.inf}


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def records_to_csv(records: list[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(RUN_CSV_HEADER)
    for rec in records:
        writer.writerow(
            [
                rec.plan_id,
                rec.n,
                rec.replication,
                repr(rec.l2_error),
                repr(rec.empirical_risk),
                repr(rec.tau),
                repr(rec.wall_time),
                rec.seed,
                rec.stream_id,
                rec.warnings,
            ]
        )
    return buf.getvalue()


def records_from_csv(text: str) -> list[RunRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != RUN_CSV_HEADER:
        raise PlanError(f"unexpected CSV header {header}")
    out = []
    for row in reader:
        out.append(
            RunRecord(
                plan_id=row[0],
                n=int(row[1]),
                replication=int(row[2]),
                l2_error=float(row[3]),
                empirical_risk=float(row[4]),
                tau=float(row[5]),
                wall_time=float(row[6]),
                seed=int(row[7]),
                stream_id=int(row[8]),
                warnings=row[9],
            )
        )
    return out


def phase_rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(PHASE_CSV_HEADER)
    for row in rows:
        writer.writerow([row[k] for k in PHASE_CSV_HEADER])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Declarative configs
# ---------------------------------------------------------------------------

_PLAN_KEYS = {
    "id",
    "noise",
    "covariates",
    "target",
    "loss",
    "sample_sizes",
    "replications",
    "base_seed",
    "sieve_kind",
    "holder_alpha",
    "m_bound",
    "tau_schedule",
    "tau_constant",
    "moment_margin",
    "n_eval",
}

_NOISE_KEYS = {"family", "scale", "tail_param"}
_COV_KEYS = {"dim", "family", "support_note"}
_TARGET_KEYS = {"kind", "amplitude", "frequency", "level", "breakpoints", "values"}
_LOSS_KEYS = {"kind", "tau"}


def _check_keys(table: dict, allowed: set, where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise PlanError(f"unknown keys {sorted(unknown)} in {where}")


def plan_from_dict(config: dict) -> ExperimentPlan:
    _check_keys(config, _PLAN_KEYS, "plan")
    for sub, keys in (("noise", _NOISE_KEYS), ("covariates", _COV_KEYS), ("target", _TARGET_KEYS), ("loss", _LOSS_KEYS)):
        if sub not in config:
            raise PlanError(f"missing [{sub}] table")
        _check_keys(config[sub], keys, sub)
    target = dict(config["target"])
    for tup_key in ("breakpoints", "values"):
        if tup_key in target:
            target[tup_key] = tuple(target[tup_key])
    return ExperimentPlan(
        id=config["id"],
        noise=NoiseSpec(**config["noise"]),
        covariates=CovariateSpec(**config["covariates"]),
        target=TargetFunction(**target),
        loss=LossSpec(**config["loss"]),
        sample_sizes=tuple(config["sample_sizes"]),
        replications=int(config["replications"]),
        base_seed=int(config["base_seed"]),
        **{
            k: config[k]
            for k in ("sieve_kind", "holder_alpha", "m_bound", "tau_schedule", "tau_constant", "moment_margin", "n_eval")
            if k in config
        },
    )


def load_plan(path: str) -> ExperimentPlan:
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:  # pragma: no cover - version-dependent
        import tomli as tomllib
    with open(path, "rb") as fh:
        return plan_from_dict(tomllib.load(fh))

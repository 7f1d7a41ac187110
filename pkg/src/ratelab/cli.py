"""Command-line entry points: rates, phase, bounds, simulate, fit."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import rates
from .ep_bounds import BoundInputs, EntropyModel, theorem1_bound
from .harness import (
    PHASE_CSV_HEADER,
    PlanError,
    fit_rate,
    load_plan,
    records_from_csv,
    records_to_csv,
    run_plan,
)

SCHEMA_VERSION = 1


def _rate_row(m: float, gamma: float, s: float) -> dict:
    res = rates.nplse_exponent(m, gamma, s)
    return {
        "m": m,
        "gamma": gamma,
        "s": s,
        "exponent": res.exponent,
        "regime": res.regime,
        "e_complex": res.components["e_complex"],
        "e_heavy": res.components["e_heavy"],
    }


def _rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(PHASE_CSV_HEADER)
    for row in rows:
        writer.writerow([row[k] for k in PHASE_CSV_HEADER])
    return buf.getvalue()


def cmd_rates(args) -> int:
    row = _rate_row(args.m, args.gamma, args.s)
    if args.json:
        print(json.dumps({"schema_version": SCHEMA_VERSION, **row}))
    else:
        sys.stdout.write(_rows_to_csv([row]))
    return 0


def _parse_grid(text: str):
    """'m0:m1:steps,g0:g1:steps' -> (m linspace, gamma linspace)."""
    try:
        m_part, g_part = text.split(",")
        m0, m1, msteps = m_part.split(":")
        g0, g1, gsteps = g_part.split(":")
        m_vals = np.linspace(float(m0), float(m1), int(msteps))
        g_vals = np.linspace(float(g0), float(g1), int(gsteps))
    except ValueError as exc:
        raise SystemExit(f"bad --grid {text!r}: expected m0:m1:steps,g0:g1:steps") from exc
    return m_vals, g_vals


def cmd_phase(args) -> int:
    m_vals, g_vals = _parse_grid(args.grid)
    rows = rates.phase_diagram(m_vals, g_vals, args.s, args.mode)
    text = _rows_to_csv(rows)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    return 0


def _bound_inputs_from_config(config: dict) -> BoundInputs:
    allowed = {"sigma", "kappa", "n", "truncation_M", "entropy", "tail"}
    unknown = set(config) - allowed
    if unknown:
        raise SystemExit(f"unknown keys {sorted(unknown)} in bounds config")
    ent_cfg = config.get("entropy", {})
    ent_unknown = set(ent_cfg) - {"D_F", "gamma", "gamma_prime", "U_F"}
    if ent_unknown:
        raise SystemExit(f"unknown keys {sorted(ent_unknown)} in [entropy]")
    entropy = EntropyModel(**ent_cfg)
    tail_cfg = config.get("tail", {"kind": "zero"})
    kind = tail_cfg.get("kind", "zero")
    if kind == "zero":
        tail = lambda M: 0.0
    elif kind == "bounded":
        # envelope bounded by sup: E[F 1(F > M)] <= sup when M < sup, else 0
        sup = float(tail_cfg["sup"])
        tail = lambda M: sup if M < sup else 0.0
    else:
        raise SystemExit(f"unknown tail kind {kind!r}")
    return BoundInputs(
        sigma=float(config["sigma"]),
        kappa=float(config["kappa"]),
        n=int(config["n"]),
        entropy=entropy,
        tail_expectation=tail,
        truncation_M=config.get("truncation_M"),
    )


def _load_toml(path: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # pragma: no cover - version-dependent
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def cmd_bounds(args) -> int:
    inputs = _bound_inputs_from_config(_load_toml(args.config))
    parts = theorem1_bound(inputs, breakdown=True)
    print(f"{'term':<10}{'value':>16}")
    for key in ("T1", "T2", "T3", "T4", "T5"):
        print(f"{key:<10}{parts[key]:>16.6e}")
    print(f"{'M':<10}{parts['M']:>16.6e}")
    print(f"{'epsilon':<10}{parts['epsilon']:>16.6e}")
    print(json.dumps({"schema_version": SCHEMA_VERSION, "bound": parts["total"], "terms": {k: parts[k] for k in ("T1", "T2", "T3", "T4", "T5")}, "M": parts["M"], "epsilon": parts["epsilon"]}))
    return 0


def cmd_simulate(args) -> int:
    plan = load_plan(args.config)
    records = run_plan(plan)
    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, f"{plan.id}_records.csv")
    with open(out_csv, "w", newline="") as fh:
        fh.write(records_to_csv(records))
    summary = {
        "schema_version": SCHEMA_VERSION,
        "plan_id": plan.id,
        "records": len(records),
        "records_csv": out_csv,
    }
    with open(os.path.join(args.out, f"{plan.id}_summary.json"), "w") as fh:
        json.dump(summary, fh)
    print(json.dumps(summary))
    return 0


def cmd_fit(args) -> int:
    with open(getattr(args, "in"), "r", newline="") as fh:
        records = records_from_csv(fh.read())
    try:
        fit = fit_rate(records, args.agg)
    except PlanError as exc:
        raise SystemExit(str(exc))
    print(
        json.dumps(
            {
                "schema_version": SCHEMA_VERSION,
                "slope": fit.slope,
                "intercept": fit.intercept,
                "stderr_slope": fit.stderr_slope,
                "n_min": fit.n_min,
                "n_max": fit.n_max,
                "aggregation": fit.aggregation,
            }
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ratelab", description="Rate formulas, maximal-inequality bounds and Monte-Carlo rate verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="evaluate the estimation-rate exponent at one (m, gamma, s)")
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("phase", help="emit a phase-diagram CSV over an (m, gamma) grid")
    p.add_argument("--grid", required=True, help="m0:m1:steps,g0:g1:steps")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--mode", choices=["a", "b", "c"], default="a")
    p.add_argument("--out", required=True, help="output CSV path, or - for stdout")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("bounds", help="evaluate the maximal-inequality bound from a TOML config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="run an experiment plan and write per-replication records")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a log-log slope to a records CSV")
    p.add_argument("--in", required=True)
    p.add_argument("--agg", choices=["median", "mean"], default="median")
    p.set_defaults(func=cmd_fit)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())

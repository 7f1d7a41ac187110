import json
import math
import os

import numpy as np
import pytest

from ratelab import (
    CovariateSpec,
    ExperimentPlan,
    LossSpec,
    NoiseSpec,
    PlanError,
    RunRecord,
    TargetFunction,
    aggregate_errors,
    fit_rate,
    plan_from_dict,
    records_from_csv,
    records_to_csv,
    run_plan,
    tail_profile,
)
from ratelab.cli import main as cli_main


def _plan(**kw):
    base = dict(
        id="toy",
        noise=NoiseSpec("Gaussian", scale=0.5),
        covariates=CovariateSpec(1),
        target=TargetFunction("Sine"),
        loss=LossSpec("Squared"),
        sample_sizes=(64, 128),
        replications=3,
        base_seed=11,
        n_eval=1000,
    )
    base.update(kw)
    return ExperimentPlan(**base)


def _synthetic_records(errors_by_n, reps=30):
    records = []
    for n, err in errors_by_n.items():
        if np.isscalar(err):
            err = [err] * reps
        for r, e in enumerate(err):
            records.append(RunRecord("syn", n, r, float(e), 0.0, 0.0, 0.0, 0, 0))
    return records


# ---------------------------------------------------------------------------
# run_plan
# ---------------------------------------------------------------------------


def test_run_plan_record_cardinality():
    records = run_plan(_plan())
    assert len(records) == 6
    assert {(r.n, r.replication) for r in records} == {(n, r) for n in (64, 128) for r in range(3)}


def test_run_plan_is_deterministic():
    a = run_plan(_plan())
    b = run_plan(_plan())
    assert [r.l2_error for r in a] == [r.l2_error for r in b]
    assert [r.empirical_risk for r in a] == [r.empirical_risk for r in b]


def test_noiseless_plan_error_is_approximation_only():
    plan = _plan(noise=NoiseSpec("Gaussian", scale=0.0), sample_sizes=(64, 512, 4096), replications=1)
    records = run_plan(plan)
    errs = [r.l2_error for r in records]
    assert all(e >= 0 for e in errs)
    assert errs[0] > errs[1] > errs[2]


def test_plan_validation():
    with pytest.raises(PlanError):
        _plan(sample_sizes=(128, 64))
    with pytest.raises(PlanError):
        _plan(replications=0)
    with pytest.raises(PlanError):
        _plan(tau_schedule="harmonic")
    with pytest.raises(PlanError):
        _plan(target=TargetFunction("Sine", amplitude=5.0), m_bound=2.0)


def test_huber_theorem_path_rejects_momentless_noise():
    plan = _plan(noise=NoiseSpec("Cauchy"), loss=LossSpec("Huber", tau=1.0))
    with pytest.raises(Exception):
        run_plan(plan)


def test_quantile_path_accepts_cauchy():
    plan = _plan(noise=NoiseSpec("Cauchy"), loss=LossSpec("Quantile", tau=0.5))
    records = run_plan(plan)
    assert len(records) == 6


def test_adaptive_tau_grows_with_n():
    plan = _plan(
        noise=NoiseSpec("SymmetricPareto", tail_param=1.5),
        loss=LossSpec("Huber", tau=1.0),
        tau_schedule="adaptive",
        tau_constant=0.01,
        sample_sizes=(256, 4096),
        replications=1,
    )
    records = run_plan(plan)
    taus = sorted({r.tau for r in records})
    assert len(taus) == 2
    assert taus[1] > taus[0] > 0


# ---------------------------------------------------------------------------
# fit_rate / tail_profile
# ---------------------------------------------------------------------------


def test_fit_rate_exact_power_law():
    ns = [2**k for k in range(8, 12)]
    records = _synthetic_records({n: n ** (-1.0 / 3.0) for n in ns})
    fit = fit_rate(records)
    assert fit.slope == pytest.approx(-1.0 / 3.0, abs=1e-12)
    assert fit.stderr_slope == pytest.approx(0.0, abs=1e-10)
    assert fit.n_min == ns[0] and fit.n_max == ns[-1]


def test_fit_rate_with_mild_noise():
    rng = np.random.default_rng(0)
    ns = [2**k for k in range(8, 14)]
    records = _synthetic_records({n: 3.0 * n**-0.5 * (1.0 + rng.uniform(-0.01, 0.01)) for n in ns})
    fit = fit_rate(records)
    assert -0.52 <= fit.slope <= -0.48


def test_fit_rate_scale_invariance_of_slope():
    ns = [2**k for k in range(8, 12)]
    base = fit_rate(_synthetic_records({n: n**-0.4 for n in ns}))
    doubled = fit_rate(_synthetic_records({n: 2.0 * n**-0.4 for n in ns}))
    assert doubled.slope == pytest.approx(base.slope, abs=1e-12)
    assert doubled.intercept == pytest.approx(base.intercept + math.log(2.0), abs=1e-10)


def test_fit_rate_preconditions():
    ns3 = {2**k: 0.1 for k in range(8, 11)}
    with pytest.raises(PlanError):
        fit_rate(_synthetic_records(ns3))
    ns4 = {2**k: 0.1 for k in range(8, 12)}
    with pytest.raises(PlanError):
        fit_rate(_synthetic_records(ns4, reps=10))
    with pytest.raises(PlanError):
        fit_rate(_synthetic_records({2**k: 0.0 for k in range(8, 12)}))


def test_aggregate_median_vs_mean():
    records = _synthetic_records({100: [1.0] * 29 + [100.0]})
    assert aggregate_errors(records, "median")[100] == 1.0
    assert aggregate_errors(records, "mean")[100] > 4.0
    with pytest.raises(PlanError):
        aggregate_errors(records, "mode")


def test_tail_profile_degenerate():
    records = _synthetic_records({100: [2.5] * 200})
    prof = tail_profile(records)
    assert prof["P50"] == prof["P90"] == prof["P99"] == 2.5
    assert prof["ratio"] == 1.0


def test_tail_profile_gaussian_oracle():
    rng = np.random.default_rng(1)
    records = _synthetic_records({100: np.abs(rng.standard_normal(500)).tolist()})
    prof = tail_profile(records)
    assert abs(prof["ratio"] - 2.576 / 0.674) / (2.576 / 0.674) < 0.25


def test_tail_profile_pareto_heavy():
    hits = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        samples = rng.uniform(size=500) ** (-1.0 / 1.5)
        prof = tail_profile(_synthetic_records({100: samples.tolist()}))
        hits += prof["ratio"] > 6.0
    assert hits >= 9


def test_tail_profile_preconditions():
    with pytest.raises(PlanError):
        tail_profile(_synthetic_records({100: [1.0] * 100}))
    with pytest.raises(PlanError):
        tail_profile(_synthetic_records({100: [1.0] * 200, 200: [1.0] * 200}))


# ---------------------------------------------------------------------------
# Persistence and configs
# ---------------------------------------------------------------------------


def test_records_csv_roundtrip_rfc4180():
    records = run_plan(_plan())
    text = records_to_csv(records)
    assert text.startswith("plan_id,n,replication")
    assert "\r\n" in text
    back = records_from_csv(text)
    assert back == records


def test_csv_deterministic_except_wall_time():
    def strip_wall(text):
        rows = [r.split(",") for r in text.strip().splitlines()]
        return [r[:6] + r[7:] for r in rows]

    a = records_to_csv(run_plan(_plan()))
    b = records_to_csv(run_plan(_plan()))
    assert strip_wall(a) == strip_wall(b)


def test_plan_from_dict_and_unknown_keys():
    config = {
        "id": "cfg",
        "noise": {"family": "Gaussian", "scale": 1.0},
        "covariates": {"dim": 1},
        "target": {"kind": "Sine"},
        "loss": {"kind": "Squared"},
        "sample_sizes": [64, 128],
        "replications": 2,
        "base_seed": 5,
    }
    plan = plan_from_dict(config)
    assert plan.noise.family == "Gaussian"
    bad = dict(config, frobnicate=1)
    with pytest.raises(PlanError):
        plan_from_dict(bad)
    bad_nested = dict(config, noise={"family": "Gaussian", "spice": 2})
    with pytest.raises(PlanError):
        plan_from_dict(bad_nested)
    with pytest.raises(PlanError):
        plan_from_dict({k: v for k, v in config.items() if k != "loss"})


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def test_cli_rates_csv_and_json(capsys):
    cli_main(["rates", "--m", "3", "--gamma", "1", "--s", "0"])
    out = capsys.readouterr().out
    header, row = out.strip().splitlines()
    assert header == "m,gamma,s,exponent,regime,e_complex,e_heavy"
    assert row.split(",")[4] == "Donsker"
    cli_main(["rates", "--m", "3", "--gamma", "1", "--s", "0", "--json"])
    payload = json.loads(capsys.readouterr().out)
    assert payload["schema_version"] == 1
    assert payload["exponent"] == pytest.approx(1.0 / 3.0)


def test_cli_phase_writes_csv(tmp_path, capsys):
    out = tmp_path / "phase.csv"
    cli_main(["phase", "--grid", "1.1:4:5,0.2:1.8:4", "--s", "0.5", "--mode", "a", "--out", str(out)])
    capsys.readouterr()
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "m,gamma,s,exponent,regime,e_complex,e_heavy"
    assert len(lines) == 21


def test_cli_bounds_breakdown(tmp_path, capsys):
    cfg = tmp_path / "bounds.toml"
    cfg.write_text(
        "sigma = 0.125\nkappa = 1.0\nn = 400\ntruncation_M = 1.0\n"
        "[entropy]\nD_F = 2.0\ngamma = 0.0\ngamma_prime = 1.0\nU_F = 4.0\n"
        "[tail]\nkind = \"zero\"\n"
    )
    cli_main(["bounds", "--config", str(cfg)])
    out = capsys.readouterr().out
    assert "T1" in out and "T5" in out
    payload = json.loads(out.strip().splitlines()[-1])
    assert payload["schema_version"] == 1
    assert payload["bound"] > 0


def test_cli_simulate_then_fit(tmp_path, capsys):
    cfg = tmp_path / "plan.toml"
    cfg.write_text(
        'id = "mini"\n'
        "sample_sizes = [64, 128, 256, 512]\n"
        "replications = 30\n"
        "base_seed = 3\n"
        "n_eval = 1000\n"
        '[noise]\nfamily = "Gaussian"\nscale = 0.5\n'
        "[covariates]\ndim = 1\n"
        '[target]\nkind = "Sine"\n'
        '[loss]\nkind = "Squared"\n'
    )
    out_dir = tmp_path / "out"
    cli_main(["simulate", "--config", str(cfg), "--out", str(out_dir)])
    summary = json.loads(capsys.readouterr().out)
    assert summary["records"] == 120
    csv_path = summary["records_csv"]
    assert os.path.exists(csv_path)
    cli_main(["fit", "--in", csv_path, "--agg", "median"])
    fit_payload = json.loads(capsys.readouterr().out)
    assert fit_payload["slope"] < -0.1
    assert fit_payload["aggregation"] == "median"


def test_cli_unknown_config_key_fails(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('id = "x"\nwhatever = 1\n')
    with pytest.raises((PlanError, SystemExit)):
        cli_main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")])

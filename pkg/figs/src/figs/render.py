"""Render phase-diagram heatmaps, log-log rate plots, and tail bar charts.

The input contract is purely the CSV headers written by the simulation
harness; this package never imports the code that produced them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

PHASE_HEADER = ["m", "gamma", "s", "exponent", "regime", "e_complex", "e_heavy"]
RECORDS_HEADER = [
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

REGIME_COLORS = {
    "Donsker": "#4c72b0",
    "NonDonsker": "#dd8452",
    "HeavyTail": "#c44e52",
}

KINDS = ("PhaseDiagram", "RatePlot", "TailBars")


class SchemaError(ValueError):
    """Input CSV header does not match the expected contract."""


@dataclass(frozen=True)
class FigureRequest:
    input_csv: str
    kind: str  # PhaseDiagram | RatePlot | TailBars
    output_path: str
    styling: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")


def _read_rows(path: str, expected_header: list) -> list[dict]:
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"empty CSV {path!r}: no header row") from None
        if header != expected_header:
            missing = [c for c in expected_header if c not in header]
            extra = [c for c in header if c not in expected_header]
            raise SchemaError(
                f"CSV header mismatch in {path!r}: missing columns {missing}, unexpected columns {extra}"
            )
        rows = [dict(zip(header, row)) for row in reader]
    if not rows:
        raise SchemaError(f"empty CSV {path!r}: header only, no data rows")
    return rows


def _render_phase(rows: list[dict], out: str, styling: dict) -> dict:
    m_vals = sorted({float(r["m"]) for r in rows})
    g_vals = sorted({float(r["gamma"]) for r in rows})
    m_index = {v: i for i, v in enumerate(m_vals)}
    g_index = {v: i for i, v in enumerate(g_vals)}
    regimes = sorted({r["regime"] for r in rows})
    code = {name: i for i, name in enumerate(regimes)}
    grid = np.full((len(g_vals), len(m_vals)), -1, dtype=int)
    for r in rows:
        grid[g_index[float(r["gamma"])], m_index[float(r["m"])]] = code[r["regime"]]
    if np.any(grid < 0):
        raise SchemaError("phase CSV does not tile a full (m, gamma) grid")

    # boundary overlay: cells whose regime differs from a grid neighbor
    boundary = np.zeros_like(grid, dtype=bool)
    boundary[:, 1:] |= grid[:, 1:] != grid[:, :-1]
    boundary[:, :-1] |= grid[:, 1:] != grid[:, :-1]
    boundary[1:, :] |= grid[1:, :] != grid[:-1, :]
    boundary[:-1, :] |= grid[1:, :] != grid[:-1, :]

    fig, ax = plt.subplots(figsize=styling.get("figsize", (7, 5)))
    colors = [REGIME_COLORS.get(name, "#999999") for name in regimes]
    cmap = matplotlib.colors.ListedColormap(colors)
    ax.pcolormesh(m_vals, g_vals, grid, cmap=cmap, vmin=-0.5, vmax=len(regimes) - 0.5, shading="nearest")
    by, bx = np.nonzero(boundary)
    ax.scatter(
        [m_vals[j] for j in bx],
        [g_vals[i] for i in by],
        marker=".",
        s=12,
        color="black",
        label="regime boundary",
    )
    handles = [plt.Rectangle((0, 0), 1, 1, color=c) for c in colors]
    ax.legend(
        handles + ax.get_legend_handles_labels()[0],
        regimes + ["regime boundary"],
        loc="upper right",
        fontsize=8,
    )
    ax.set_xlabel("moment order m")
    ax.set_ylabel("entropy exponent gamma")
    ax.set_title(styling.get("title", "Error-rate regimes"))
    fig.savefig(out, dpi=styling.get("dpi", 150))
    plt.close(fig)
    return {
        "kind": "PhaseDiagram",
        "regions": regimes,
        "n_regions": len(regimes),
        "boundary_cells": int(boundary.sum()),
        "grid_shape": grid.shape,
    }


def _median_by_n(rows: list[dict]) -> tuple[np.ndarray, np.ndarray]:
    by_n: dict[int, list[float]] = {}
    for r in rows:
        by_n.setdefault(int(r["n"]), []).append(float(r["l2_error"]))
    ns = np.array(sorted(by_n))
    meds = np.array([np.median(by_n[n]) for n in ns])
    return ns, meds


def _render_rate(rows: list[dict], out: str, styling: dict) -> dict:
    ns, meds = _median_by_n(rows)
    if len(ns) < 2:
        raise SchemaError("rate plots need at least two distinct sample sizes")
    if np.any(meds <= 0):
        raise SchemaError("rate plots need positive median errors")
    log_n, log_e = np.log(ns.astype(float)), np.log(meds)
    slope, intercept = np.polyfit(log_n, log_e, 1)
    resid = log_e - (slope * log_n + intercept)
    dof = max(len(ns) - 2, 1)
    sxx = float(np.sum((log_n - log_n.mean()) ** 2))
    stderr = float(np.sqrt(np.sum(resid**2) / dof / sxx)) if sxx > 0 else float("inf")

    fig, ax = plt.subplots(figsize=styling.get("figsize", (7, 5)))
    ax.loglog(ns, meds, "o-", label="median L2 error")
    fit_line = np.exp(intercept) * ns.astype(float) ** slope
    annotation = f"fitted slope {slope:.3f}±{stderr:.3f}"
    ax.loglog(ns, fit_line, "--", label=annotation)
    theory = styling.get("theory_exponent")
    if theory is not None:
        anchor = meds[0] * (ns.astype(float) / ns[0]) ** float(theory)
        ax.loglog(ns, anchor, ":", label=f"theory slope {float(theory):.3f}")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("median L2 error")
    ax.legend(fontsize=8)
    ax.set_title(styling.get("title", "Convergence rate"))
    fig.savefig(out, dpi=styling.get("dpi", 150))
    plt.close(fig)
    return {"kind": "RatePlot", "slope": float(slope), "stderr": stderr, "annotation": annotation}


def _render_tails(rows: list[dict], out: str, styling: dict) -> dict:
    ns = {int(r["n"]) for r in rows}
    if len(ns) != 1:
        raise SchemaError("tail bar charts require records at a single sample size")
    by_plan: dict[str, list[float]] = {}
    for r in rows:
        by_plan.setdefault(r["plan_id"], []).append(float(r["l2_error"]))
    plans = sorted(by_plan)
    quantiles = {p: np.quantile(by_plan[p], [0.5, 0.9, 0.99]) for p in plans}

    fig, ax = plt.subplots(figsize=styling.get("figsize", (7, 5)))
    width = 0.8 / len(plans)
    xs = np.arange(3)
    for i, p in enumerate(plans):
        ax.bar(xs + i * width, quantiles[p], width, label=p)
    ax.set_xticks(xs + width * (len(plans) - 1) / 2)
    ax.set_xticklabels(["P50", "P90", "P99"])
    ax.set_ylabel("L2 error quantile")
    ax.legend(fontsize=8)
    ax.set_title(styling.get("title", f"Error quantiles at n={next(iter(ns))}"))
    fig.savefig(out, dpi=styling.get("dpi", 150))
    plt.close(fig)
    return {
        "kind": "TailBars",
        "plans": plans,
        "ratios": {p: float(q[2] / q[0]) if q[0] > 0 else float("inf") for p, q in quantiles.items()},
    }


def render(request: FigureRequest) -> dict:
    """Validate the CSV, draw the figure, write the image, return a summary.

    On schema mismatch or empty input a SchemaError is raised before any
    output file is created.
    """
    if request.kind == "PhaseDiagram":
        rows = _read_rows(request.input_csv, PHASE_HEADER)
        return _render_phase(rows, request.output_path, request.styling)
    rows = _read_rows(request.input_csv, RECORDS_HEADER)
    if request.kind == "RatePlot":
        return _render_rate(rows, request.output_path, request.styling)
    return _render_tails(rows, request.output_path, request.styling)

"""File emission for pipeline results.

Writes the comparison table, one allocation JSON per policy, the weight
tensor, and per-pair deformation-bound series.  All numbers are printed
through repr, which round-trips doubles exactly, and every container is
written in a fixed order, so byte-identical inputs produce byte-identical
files.  Wall-clock timings are deliberately left out of the files (the
allocation JSON carries a null placeholder); they only ever appear on
stdout.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .scenario import RunReport

COMPARISON_HEADER = "policy,total_trace,min_trace,max_sigma_max,min_sigma_max"
ANALYSIS_HEADER = ("t,sigma_max_cgt,bound_lower,bound_actual,bound_upper,"
                   "alpha1,alpha2,alpha3,alpha4")
WEIGHTS_HEADER = "observer,target,step,weight_to_horizon,weight_instantaneous"


def _fmt(x: float) -> str:
    return repr(float(x))


def _write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def comparison_csv(report: RunReport) -> str:
    lines = [COMPARISON_HEADER]
    for name, row in report.metrics.items():
        lines.append(",".join([name, _fmt(row["total_trace"]),
                               _fmt(row["min_trace"]),
                               _fmt(row["max_sigma_max"]),
                               _fmt(row["min_sigma_max"])]))
    return "\n".join(lines) + "\n"


def allocation_json(report: RunReport, policy: str) -> str:
    solve = report.solves[policy]
    doc = {
        "objective": float(solve.objective),
        "optimality": solve.optimality,
        "per_target_traces": [float(v) for v in solve.per_target_traces],
        "allocation": solve.triples(),
        "nodes_explored": int(solve.nodes_explored),
        "wall_time_ms": None,
    }
    return json.dumps(doc, indent=2) + "\n"


def weights_csv(report: RunReport) -> str:
    w = report.weights.w
    wi = report.weights_instant.w
    lines = [WEIGHTS_HEADER]
    m, n, steps = w.shape
    for i in range(m):
        for j in range(n):
            for k in range(steps):
                lines.append(f"{i},{j},{k},{_fmt(w[i, j, k])},"
                             f"{_fmt(wi[i, j, k])}")
    return "\n".join(lines) + "\n"


def analysis_csv(rows: np.ndarray) -> str:
    lines = [ANALYSIS_HEADER]
    for row in np.asarray(rows):
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def analysis_filename(i: int, j: int) -> str:
    return f"analysis_o{i}_t{j}.csv"


def emit_reports(report: RunReport, out_dir) -> list[Path]:
    """Write all delimited outputs for one run; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [_write(out / "comparison.csv", comparison_csv(report))]
    for policy in report.solves:
        written.append(_write(out / f"allocation_{policy}.json",
                              allocation_json(report, policy)))
    written.append(_write(out / "weights.csv", weights_csv(report)))
    for (i, j), rows in report.analysis.items():
        written.append(_write(out / analysis_filename(i, j),
                              analysis_csv(rows)))
    return written


def emit_analysis(analysis: dict, out_dir) -> list[Path]:
    """Write only the per-pair deformation series (analyze flow)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [_write(out / analysis_filename(i, j), analysis_csv(rows))
            for (i, j), rows in analysis.items()]

"""Matplotlib renderings of pipeline results.

Figures land next to the delimited reports: a per-target information
comparison across policies, the backward deformation growth per target,
and one allocation timeline per policy.  Rendering uses the Agg backend
with fixed sizes and suppressed writer metadata so repeated runs of the
same configuration produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .scenario import RunReport  # noqa: E402

_SAVE = {"dpi": 150, "metadata": {"Software": None}}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def comparison_figure(report: RunReport, path: Path) -> Path:
    """Grouped bars of accumulated per-target trace, one group per target."""
    policies = list(report.solves)
    n = report.weights.shape[1]
    x = np.arange(n, dtype=float)
    width = 0.8 / max(len(policies), 1)
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    for p, policy in enumerate(policies):
        traces = report.solves[policy].per_target_traces
        offset = (p - 0.5 * (len(policies) - 1)) * width
        ax.bar(x + offset, np.maximum(traces, 1e-300), width, label=policy)
    ax.set_yscale("log")
    ax.set_xticks(x)
    ax.set_xticklabels([str(j) for j in range(n)])
    ax.set_xlabel("target")
    ax.set_ylabel("accumulated information trace")
    ax.set_title("Per-target information by policy")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def analysis_figure(analysis: dict, path: Path) -> Path:
    """Backward deformation growth per target over the schedule."""
    targets = sorted({j for (_, j) in analysis})
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    for j in targets:
        i = min(i for (i, jj) in analysis if jj == j)
        rows = analysis[(i, j)]
        ax.plot(rows[:, 0], rows[:, 1], label=f"target {j}")
    ax.set_yscale("log")
    ax.set_xlabel("measurement epoch (TU)")
    ax.set_ylabel("sigma_max of backward deformation")
    ax.set_title("Deformation of horizon-epoch uncertainty")
    ax.legend(ncol=2, fontsize="small")
    fig.tight_layout()
    return _save(fig, path)


def allocation_figure(report: RunReport, policy: str, path: Path) -> Path:
    """Timeline of which observer watches which target at each step."""
    m, n, steps = report.weights.shape
    cmap = plt.get_cmap("tab10")
    fig, ax = plt.subplots(figsize=(8.0, 1.2 + 0.7 * m))
    for i, j, k in report.solves[policy].triples():
        ax.scatter(k, i, s=120, color=cmap(j % 10), marker="s")
        ax.annotate(str(j), (k, i), ha="center", va="center", fontsize=7,
                    color="white")
    ax.set_xlim(-0.5, steps - 0.5)
    ax.set_ylim(-0.5, m - 0.5)
    ax.set_xticks(range(steps))
    ax.set_yticks(range(m))
    ax.set_xlabel("step")
    ax.set_ylabel("observer")
    ax.set_title(f"Allocation timeline ({policy}); labels are target indices")
    ax.invert_yaxis()
    fig.tight_layout()
    return _save(fig, path)


def render_figures(report: RunReport, out_dir) -> list[Path]:
    """Render every figure for one run; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [comparison_figure(report, out / "comparison.png"),
               analysis_figure(report.analysis, out / "analysis.png")]
    for policy in report.solves:
        written.append(allocation_figure(report, policy,
                                         out / f"allocation_{policy}.png"))
    return written


def render_analysis_figure(analysis: dict, out_dir) -> list[Path]:
    """Render only the deformation figure (analyze flow)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [analysis_figure(analysis, out / "analysis.png")]

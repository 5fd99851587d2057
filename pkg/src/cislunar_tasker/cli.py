"""Command-line interface.

Four subcommands: ``solve`` runs the full planning pipeline on a
scenario and writes reports plus figures; ``analyze`` writes the
deformation-bound time series for every observer-target pair on a
configurable grid; ``orbits`` regenerates the periodic-orbit catalog
from scratch; ``oracle`` cross-checks both solvers against brute-force
enumeration on small random instances.

Exit codes: 0 success, 1 validation or usage error, 2 numerical
failure, 3 infeasible constraints.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CislunarError, InfeasibleError, ValidationError
from .figures import render_analysis_figure, render_figures
from .orbits import build_default_catalog, periodicity_residual, save_catalog
from .reporting import emit_analysis, emit_reports
from .scenario import (POLICIES, analysis_series, load_scenario, run_pipeline,
                       _propagate_all)
from .tasking import brute_force_oracle, solve_max_min, solve_max_trace

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_INFEASIBLE = 3


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to the validation exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _default_scenario_path() -> Path:
    import importlib.resources
    return Path(importlib.resources.files("cislunar_tasker")
                / "data" / "default_scenario.json")


def build_parser() -> _Parser:
    parser = _Parser(prog="cislunar-tasker",
                     description="Plan multi-observer optical tasking on "
                                 "libration-point orbits.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: _Parser, objective: bool = False):
        p.add_argument("--scenario", type=Path,
                       default=_default_scenario_path(),
                       help="scenario JSON (default: bundled scenario)")
        p.add_argument("--out", type=Path, default=Path("out"),
                       help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=0,
                       help="random seed where randomness is involved")
        p.add_argument("--grid", type=int, default=None,
                       help="number of analysis grid points "
                            "(default: one per schedule step)")
        if objective:
            p.add_argument("--objective",
                           choices=list(POLICIES) + ["all"], default=None,
                           help="policy to solve (default: the scenario's)")

    common(sub.add_parser("solve", help="run the planning pipeline"),
           objective=True)
    common(sub.add_parser("analyze",
                          help="deformation-bound series per pair"))
    common(sub.add_parser("orbits", help="regenerate the orbit catalog"))
    common(sub.add_parser("oracle",
                          help="cross-check solvers against enumeration"))
    return parser


def _cmd_solve(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.objective == "all":
        objectives = POLICIES
    elif args.objective is not None:
        objectives = (args.objective,)
    else:
        objectives = None
    report = run_pipeline(scenario, objectives)
    written = emit_reports(report, args.out)
    written += render_figures(report, args.out)
    for name, solve in report.solves.items():
        print(f"{name}: objective {solve.objective:.6e} ({solve.optimality}, "
              f"{solve.nodes_explored} nodes, {solve.wall_time_ms:.0f} ms)")
    print(f"wrote {len(written)} files to {args.out}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    scenario = load_scenario(args.scenario)
    observers, targets = _propagate_all(scenario)
    sched = scenario.schedule
    grid = None
    if args.grid is not None:
        if args.grid < 2:
            raise ValidationError("--grid must be at least 2")
        grid = np.linspace(sched.t[0], sched.t_end, args.grid)
    analysis = analysis_series(observers, targets, scenario.noise, sched, grid)
    written = emit_analysis(analysis, args.out)
    written += render_analysis_figure(analysis, args.out)
    print(f"wrote {len(written)} files to {args.out}")
    return EXIT_OK


def _cmd_orbits(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(orbit):
        res = periodicity_residual(orbit)
        print(f"{orbit.name}: period {orbit.period:.6f} TU, stability "
              f"{orbit.stability_index:.3f}, residual {res:.2e}")

    catalog = build_default_catalog(progress=progress)
    path = out / "orbit_catalog.json"
    save_catalog(catalog, path)
    print(f"wrote {len(catalog)} orbits to {path}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    rng = np.random.default_rng(args.seed)
    shapes = ((2, 2, 2), (2, 2, 3), (1, 2, 4))
    trials = 20
    for trial in range(trials):
        m, n, steps = shapes[int(rng.integers(len(shapes)))]
        w = rng.random((m, n, steps))
        for label, solver, objective in (
                ("max-trace", solve_max_trace, "max-trace"),
                ("max-min", solve_max_min, "max-min")):
            got = solver(w).objective
            want = brute_force_oracle(w, objective).objective
            if got != want:
                print(f"trial {trial} ({m},{n},{steps}) {label}: solver "
                      f"{got!r} != oracle {want!r}", file=sys.stderr)
                return EXIT_NUMERICAL
    print(f"{trials} trials, solver and oracle objectives identical")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"solve": _cmd_solve, "analyze": _cmd_analyze,
               "orbits": _cmd_orbits, "oracle": _cmd_oracle}[args.command]
    try:
        return handler(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CislunarError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

"""Scenario configuration and the end-to-end planning pipeline.

A scenario pins everything a planning run needs: the three-body system,
the observers and targets as catalog orbits with phases, the observation
schedule, the sensor noise, the per-target prior information, and the
objective.  ``load_scenario`` reads and validates the JSON form,
``run_pipeline`` turns a scenario into solved allocations, final
information matrices, comparison metrics, and deformation-bound time
series, and ``RunReport`` carries it all to the reporting layer.

All quantities are nondimensional (canonical length and time units of
the configured system); orbit phases are fractions of a period, applied
at the first decision epoch.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import EARTH_MOON, Cr3bpParams, Trajectory, propagate_trajectory
from .errors import InfeasibleError, ValidationError
from .filters import propagate_info_multistep
from .info_analysis import theorem1_bounds
from .measurement import NoiseModel, jacobian_target, relative_state
from .orbits import (PeriodicOrbit, bundled_catalog, find_orbit, load_catalog,
                     state_at_phase)
from .tasking import (Schedule, SolveReport, WeightTensor, build_weights,
                      myopic_policy, solve_max_min, solve_max_trace,
                      validate_allocation)

POLICIES = ("max-trace", "max-min", "myopic")
THREADS_ENV = "CISLUNAR_TASKER_THREADS"

#: default relative optimality gap for the worst-target solve inside the
#: pipeline; zero would be exact but the bottleneck program's dual bound
#: converges very slowly at full scenario scale (see solve_max_min)
MAX_MIN_GAP = 0.01


def thread_count() -> int:
    """Worker cap from the environment; 0 or unset means one per CPU."""
    raw = os.environ.get(THREADS_ENV, "0").strip()
    try:
        k = int(raw)
    except ValueError:
        raise ValidationError(
            f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if k < 0:
        raise ValidationError(f"{THREADS_ENV} must be nonnegative, got {k}")
    return k if k > 0 else (os.cpu_count() or 1)


def parallel_map(fn, items) -> list:
    """Map preserving order, threaded when the environment allows.

    Results do not depend on the worker count; the cap only bounds
    concurrency.
    """
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class OrbitInstance:
    """A catalog orbit occupied at a given phase (fraction of period)."""

    orbit: PeriodicOrbit
    phase: float

    def initial_state(self, params: Cr3bpParams = EARTH_MOON) -> np.ndarray:
        return state_at_phase(self.orbit, self.phase, params)


@dataclass(frozen=True)
class Scenario:
    """Validated inputs of one planning run.

    initial_information is the 6x6 prior information matrix shared by
    every target, referenced to the first decision epoch; objective is
    the policy a plain run solves (a caller may request others).
    """

    params: Cr3bpParams
    observers: list[OrbitInstance]
    targets: list[OrbitInstance]
    schedule: Schedule
    noise: NoiseModel
    initial_information: np.ndarray
    objective: str

    def __post_init__(self):
        if len(self.observers) < 1 or len(self.targets) < 1:
            raise ValidationError("need at least one observer and one target")
        lam0 = np.asarray(self.initial_information, dtype=float)
        if lam0.shape != (6, 6):
            raise ValidationError(
                f"initial information must be 6x6, got {lam0.shape}")
        object.__setattr__(self, "initial_information", lam0)
        if self.objective not in POLICIES:
            raise ValidationError(
                f"objective must be one of {', '.join(POLICIES)}, "
                f"got {self.objective!r}")
        looks = len(self.observers) * self.schedule.steps
        if self.objective != "myopic" and looks < 2 * len(self.targets):
            raise InfeasibleError(
                f"{len(self.observers)} observers over {self.schedule.steps} "
                f"steps cannot cover {len(self.targets)} targets twice")


def _get(obj: dict, key: str, where: str, kind=None):
    if key not in obj:
        raise ValidationError(f"{where}.{key}: missing field")
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        names = kind.__name__ if not isinstance(kind, tuple) else \
            "/".join(k.__name__ for k in kind)
        raise ValidationError(
            f"{where}.{key}: expected {names}, got {type(value).__name__}")
    return value


def _instances(rows, where: str, catalog: list[PeriodicOrbit]) -> list[OrbitInstance]:
    if not isinstance(rows, list) or not rows:
        raise ValidationError(f"{where}: expected a nonempty list")
    out = []
    for idx, row in enumerate(rows):
        here = f"{where}[{idx}]"
        if not isinstance(row, dict):
            raise ValidationError(f"{here}: expected an object")
        name = _get(row, "orbit", here, str)
        phase = float(_get(row, "phase", here, (int, float)))
        try:
            orbit = find_orbit(catalog, name)
        except ValidationError:
            raise ValidationError(
                f"{here}.orbit: {name!r} not in catalog") from None
        out.append(OrbitInstance(orbit=orbit, phase=phase))
    return out


def _prior_matrix(raw, where: str) -> np.ndarray:
    if isinstance(raw, (int, float)):
        return float(raw) * np.eye(6)
    if isinstance(raw, list):
        arr = np.asarray(raw, dtype=float)
        if arr.shape == (6,):
            return np.diag(arr)
        if arr.shape == (6, 6):
            return arr
    raise ValidationError(
        f"{where}: expected a scalar, 6 diagonal entries, or a 6x6 matrix")


def load_scenario(path) -> Scenario:
    """Read and validate a scenario JSON file.

    Orbit names resolve against the bundled catalog unless the file
    names another with a top-level "catalog" path (relative paths are
    taken from the scenario file's directory).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read scenario {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"scenario {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError("scenario: expected a JSON object")

    if "params" in raw:
        pr = _get(raw, "params", "scenario", dict)
        try:
            params = Cr3bpParams(
                mu=float(_get(pr, "mu", "scenario.params", (int, float))),
                lu_km=float(_get(pr, "lu_km", "scenario.params", (int, float))),
                tu_s=float(_get(pr, "tu_s", "scenario.params", (int, float))))
        except ValueError as exc:
            raise ValidationError(f"scenario.params: {exc}") from exc
    else:
        params = EARTH_MOON

    if "catalog" in raw:
        cat_path = Path(_get(raw, "catalog", "scenario", str))
        if not cat_path.is_absolute():
            cat_path = path.parent / cat_path
        catalog = load_catalog(cat_path)
    else:
        catalog = bundled_catalog()

    observers = _instances(_get(raw, "observers", "scenario"),
                           "scenario.observers", catalog)
    targets = _instances(_get(raw, "targets", "scenario"),
                         "scenario.targets", catalog)

    sch = _get(raw, "schedule", "scenario", dict)
    steps = _get(sch, "steps", "scenario.schedule", int)
    if steps < 1:
        raise ValidationError("scenario.schedule.steps: must be at least 1")
    schedule = Schedule.regular(
        t0=float(_get(sch, "t0", "scenario.schedule", (int, float))),
        steps=steps,
        delta_t=float(_get(sch, "delta_t", "scenario.schedule", (int, float))),
        eps_t=float(_get(sch, "eps_t", "scenario.schedule", (int, float))))

    nz = _get(raw, "noise", "scenario", dict)
    sigma = float(_get(nz, "sigma", "scenario.noise", (int, float)))
    if not sigma > 0.0:
        raise ValidationError("scenario.noise.sigma: must be positive")
    noise = NoiseModel(sigma=sigma, delta_t=schedule.delta_t)

    lam0 = _prior_matrix(raw.get("initial_information", 0.0),
                         "scenario.initial_information")
    objective = raw.get("objective", "max-trace")
    if not isinstance(objective, str):
        raise ValidationError("scenario.objective: expected a string")
    return Scenario(params=params, observers=observers, targets=targets,
                    schedule=schedule, noise=noise,
                    initial_information=lam0, objective=objective)


@dataclass(frozen=True)
class RunReport:
    """Everything one pipeline run produced.

    solves, information, and metrics are keyed by policy name in the
    canonical order; information holds the 6x6 accumulated matrix per
    target, metrics the four comparison-table entries.  analysis maps
    (observer, target) index pairs to deformation-bound time series
    (rows t, sigma_max of the backward deformation tensor, lower bound,
    actual, upper bound, four alignment coefficients).
    """

    scenario: Scenario
    observer_trajectories: list[Trajectory]
    target_trajectories: list[Trajectory]
    weights: WeightTensor
    weights_instant: WeightTensor
    solves: dict[str, SolveReport]
    information: dict[str, list[np.ndarray]]
    metrics: dict[str, dict[str, float]]
    analysis: dict[tuple[int, int], np.ndarray]


def _propagate_all(scenario: Scenario) -> tuple[list[Trajectory], list[Trajectory]]:
    sched = scenario.schedule
    epochs = np.append(sched.t_prime, sched.t_end)

    def one(inst: OrbitInstance) -> Trajectory:
        return propagate_trajectory(
            inst.initial_state(scenario.params), sched.t[0], epochs,
            scenario.params)

    both = parallel_map(one, list(scenario.observers) + list(scenario.targets))
    return both[:len(scenario.observers)], both[len(scenario.observers):]


def _final_information(scenario: Scenario, observers: list[Trajectory],
                       targets: list[Trajectory],
                       allocation: np.ndarray) -> list[np.ndarray]:
    """Accumulated information at the horizon, per target, for one allocation."""
    sched = scenario.schedule
    noise = scenario.noise
    out = []
    for j, tgt in enumerate(targets):
        measurements = []
        for k in range(sched.steps):
            tp = sched.t_prime[k]
            for i in range(len(observers)):
                if allocation[i, j, k]:
                    phi_back = tgt.stm_between(sched.t_end, tp)
                    rel = relative_state(observers[i].state_at(tp),
                                         tgt.state_at(tp))
                    measurements.append(
                        (phi_back, jacobian_target(rel).H, noise.R))
        phi_total = tgt.stm_between(sched.t_end, sched.t[0])
        info = propagate_info_multistep(scenario.initial_information,
                                        measurements, phi_total)
        out.append(info.total)
    return out


def _metrics(information: list[np.ndarray]) -> dict[str, float]:
    traces = np.array([np.trace(lam) for lam in information])
    sigmas = np.array([np.linalg.eigvalsh(lam)[-1] for lam in information])
    return {"total_trace": float(traces.sum()),
            "min_trace": float(traces.min()),
            "max_sigma_max": float(sigmas.max()),
            "min_sigma_max": float(sigmas.min())}


def analysis_series(observers: list[Trajectory], targets: list[Trajectory],
                    noise: NoiseModel, schedule: Schedule,
                    grid=None) -> dict[tuple[int, int], np.ndarray]:
    """Deformation-bound time series for every observer-target pair.

    Each row holds (t, sigma_max of the backward deformation tensor,
    lower bound, actual largest deformed-gain eigenvalue, upper bound,
    and the four informative alignment coefficients) for the map pulling
    horizon-epoch variations back to t.  The default grid is the
    schedule's measurement epochs.
    """
    grid = schedule.t_prime if grid is None else np.asarray(grid, dtype=float)
    out = {}
    for j, tgt in enumerate(targets):
        phis = [tgt.stm_between(schedule.t_end, t) for t in grid]
        states = [tgt.state_at(t) for t in grid]
        for i, obs in enumerate(observers):
            rows = np.empty((len(grid), 9))
            for row, (t, phi, x_t) in enumerate(zip(grid, phis, states)):
                rel = relative_state(obs.state_at(t), x_t)
                rep = theorem1_bounds(jacobian_target(rel), noise, phi)
                rows[row] = (t, rep.cgt_sigma_max, rep.lower, rep.actual,
                             rep.upper, *rep.alphas[:4])
            out[(i, j)] = rows
    return out


def _requested(scenario: Scenario, objectives) -> tuple[str, ...]:
    if objectives is None:
        names = (scenario.objective,)
    else:
        names = tuple(objectives)
    for name in names:
        if name not in POLICIES:
            raise ValidationError(
                f"unknown objective {name!r}; choose from {', '.join(POLICIES)}")
    return tuple(p for p in POLICIES if p in names)


def run_pipeline(scenario: Scenario, objectives=None,
                 max_min_gap: float = MAX_MIN_GAP) -> RunReport:
    """Propagate, weigh, solve, and summarize one scenario.

    objectives selects the policies to solve (default: the scenario's
    own); max_min_gap is passed to the worst-target solver as its
    relative optimality gap.  The myopic baseline ranks by instantaneous
    gains but is scored, like the others, by information accumulated at
    the horizon.
    """
    names = _requested(scenario, objectives)
    observers, targets = _propagate_all(scenario)
    sched = scenario.schedule
    weights = build_weights(observers, targets, scenario.noise, sched)
    weights_instant = build_weights(observers, targets, scenario.noise, sched,
                                    to_horizon=False)

    solves: dict[str, SolveReport] = {}
    for name in names:
        if name == "max-trace":
            solves[name] = solve_max_trace(weights)
        elif name == "max-min":
            solves[name] = solve_max_min(weights, rel_gap=max_min_gap)
        else:
            picked = myopic_policy(weights_instant)
            scored = validate_allocation(picked, weights)
            solves[name] = SolveReport(
                allocation=picked.allocation,
                objective=scored.total,
                per_target_traces=scored.per_target,
                optimality="heuristic",
                nodes_explored=0,
                wall_time_ms=picked.wall_time_ms)

    information = {name: _final_information(scenario, observers, targets,
                                            rep.allocation)
                   for name, rep in solves.items()}
    metrics = {name: _metrics(information[name]) for name in solves}
    analysis = analysis_series(observers, targets, scenario.noise, sched)
    return RunReport(scenario=scenario, observer_trajectories=observers,
                     target_trajectories=targets, weights=weights,
                     weights_instant=weights_instant, solves=solves,
                     information=information, metrics=metrics,
                     analysis=analysis)

"""Observation-schedule assignment as exact integer programs.

Plans which observer looks at which target in each decision step of a
fixed schedule.  Because measurement information is additive and
independent of assignment history, every (observer, target, step) cell
carries a precomputable scalar weight (an information-gain trace pulled
to the schedule's evaluation epoch) and both planning objectives are
linear in the binary assignment variables.  Two exact solvers are
provided (total trace by branch and bound, worst-target trace by branch
and cut), plus a myopic per-step baseline and a brute-force oracle for
verification at small scale.

Assignment constraints: each observer looks at no more than one target
per step, and every target must be observed at least ``min_looks`` times
over the horizon (twice by default, the minimum for observability of a
target's full state from directional data).
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linear_sum_assignment, milp

from .errors import CislunarError, InfeasibleError, ValidationError
from .measurement import info_gain, jacobian_target, relative_state


@dataclass(frozen=True)
class Schedule:
    """Decision epochs of an observation horizon.

    Step k opens an exposure of length delta_t at t[k]; the measurement
    is referenced to the exposure midpoint, and eps_t of steering time
    separates consecutive exposures.  The horizon closes at t_end, one
    exposure plus one buffer after the last decision epoch, where
    accumulated information is evaluated.
    """

    t: np.ndarray
    delta_t: float
    eps_t: float

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.t, dtype=float))
        object.__setattr__(self, "t", t)
        if t.ndim != 1 or t.size < 1:
            raise ValidationError("schedule needs at least one decision epoch")
        if not self.delta_t > 0.0:
            raise ValidationError("exposure length must be positive")
        if self.eps_t < 0.0:
            raise ValidationError("steering buffer cannot be negative")
        gaps = np.diff(t)
        if gaps.size and not np.allclose(gaps, self.delta_t + self.eps_t,
                                         rtol=0.0, atol=1e-12):
            raise ValidationError(
                "decision epochs must be spaced by delta_t + eps_t")

    @classmethod
    def regular(cls, t0: float, steps: int, delta_t: float,
                eps_t: float) -> "Schedule":
        """Evenly spaced schedule of `steps` exposures starting at t0."""
        if steps < 1:
            raise ValidationError("schedule needs at least one step")
        k = np.arange(steps, dtype=float)
        return cls(t=float(t0) + k * (float(delta_t) + float(eps_t)),
                   delta_t=float(delta_t), eps_t=float(eps_t))

    @property
    def steps(self) -> int:
        return self.t.size

    @property
    def t_prime(self) -> np.ndarray:
        """Measurement epochs, midpoints of each exposure."""
        return self.t + 0.5 * self.delta_t

    @property
    def t_end(self) -> float:
        """Evaluation epoch closing the horizon."""
        return float(self.t[-1] + self.delta_t + self.eps_t)


@dataclass(frozen=True)
class WeightTensor:
    """Per-assignment information traces, indexed [observer, target, step]."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 3 or min(w.shape) < 1:
            raise ValidationError(
                "weights must be a nonempty observer x target x step tensor")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise ValidationError("weights must be finite and nonnegative")
        object.__setattr__(self, "w", w)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.w.shape


def _weights_array(weights) -> np.ndarray:
    if isinstance(weights, WeightTensor):
        return weights.w
    return WeightTensor(w=weights).w


def build_weights(observers, targets, noise, schedule: Schedule,
                  to_horizon: bool = True) -> WeightTensor:
    """Information-gain traces for every (observer, target, step) cell.

    An instantaneous observation of target j by observer i at the step-k
    exposure midpoint contributes H^T R^-1 H about the target state at
    that epoch.  With to_horizon set the contribution is expressed about
    the target state at the schedule's evaluation epoch instead, through
    the backward state transition matrix from the evaluation epoch to the
    measurement epoch, which makes traces additive across steps in a
    common frame.  Without it the trace is the raw per-step gain, the
    quantity a myopic policy ranks by.

    Parameters
    ----------
    observers, targets : sequences of Trajectory
        Nominal motion of each object, covering every exposure midpoint
        and the evaluation epoch.
    noise : NoiseModel
        Measurement noise; shared by all pairs.
    schedule : Schedule
    to_horizon : bool
        Project each gain to the evaluation epoch (the default).

    Raises
    ------
    InfeasibleError
        If observers x steps cannot cover every target twice.
    GeometryError
        If an observer and target coincide at a measurement epoch.
    """
    m, n = len(observers), len(targets)
    if m < 1 or n < 1:
        raise ValidationError("need at least one observer and one target")
    steps = schedule.steps
    if m * steps < 2 * n:
        raise InfeasibleError(
            f"{m} observers over {steps} steps cannot cover "
            f"{n} targets twice")
    t_end = schedule.t_end
    w = np.empty((m, n, steps))
    for j, tgt in enumerate(targets):
        for k, tp in enumerate(schedule.t_prime):
            x_t = tgt.state_at(tp)
            phi_back = tgt.stm_between(t_end, tp) if to_horizon else None
            for i, obs in enumerate(observers):
                rel = relative_state(obs.state_at(tp), x_t)
                gain = info_gain(jacobian_target(rel), noise)
                if phi_back is not None:
                    gain = phi_back.T @ gain @ phi_back
                w[i, j, k] = np.trace(gain)
    return WeightTensor(w=w)


# ---------------------------------------------------------------------------
# allocations and reports

@dataclass(frozen=True)
class SolveReport:
    """Outcome of one assignment solve.

    allocation is the full binary tensor u[observer, target, step];
    objective is the solved criterion value (total trace for max-trace
    and the myopic baseline, worst-target trace for max-min);
    per_target_traces are the accumulated weights per target under the
    returned allocation.  optimality is "proven" when the producing
    solver certified a global optimum, "heuristic" for the myopic
    baseline and for gap-limited worst-target solves.
    """

    allocation: np.ndarray
    objective: float
    per_target_traces: np.ndarray
    optimality: str
    nodes_explored: int
    wall_time_ms: float

    def triples(self) -> list[list[int]]:
        """Assigned cells as [observer, target, step], sorted by step."""
        i_idx, j_idx, k_idx = np.nonzero(self.allocation)
        trips = sorted(zip(k_idx, i_idx, j_idx))
        return [[int(i), int(j), int(k)] for k, i, j in trips]


@dataclass(frozen=True)
class ConstraintReport:
    """Per-target accumulation and constraint booleans for an allocation."""

    per_target: np.ndarray
    total: float
    observation_counts: np.ndarray
    single_assignment_ok: bool
    coverage_ok: bool


def validate_allocation(alloc, weights, min_looks: int = 2) -> ConstraintReport:
    """Accumulated weight per target plus constraint checks.

    alloc may be a binary tensor shaped like the weights or a SolveReport.
    """
    if isinstance(alloc, SolveReport):
        alloc = alloc.allocation
    u = np.asarray(alloc)
    w = _weights_array(weights)
    if u.shape != w.shape:
        raise ValidationError(
            f"allocation shape {u.shape} does not match weights {w.shape}")
    if not np.isin(u, (0, 1)).all():
        raise ValidationError("allocation entries must be 0 or 1")
    m, n, steps = w.shape
    # same ascending cell-order accumulation the solvers report through,
    # so a round-tripped allocation reproduces its traces bitwise
    u_cells = u.transpose(2, 0, 1).reshape(m * steps, n)
    cell_idx, tgt_idx = np.nonzero(u_cells)
    per_target = np.zeros(n)
    np.add.at(per_target, tgt_idx, _cell_weights(w)[cell_idx, tgt_idx])
    counts = u.sum(axis=(0, 2))
    single_ok = bool((u.sum(axis=1) <= 1).all())
    coverage_ok = bool((counts >= min_looks).all())
    return ConstraintReport(per_target=per_target,
                            total=float(per_target.sum()),
                            observation_counts=counts.astype(int),
                            single_assignment_ok=single_ok,
                            coverage_ok=coverage_ok)


def _require_coverage_feasible(m: int, n: int, steps: int, min_looks: int):
    if m * steps < min_looks * n:
        raise InfeasibleError(
            f"{m} observers over {steps} steps provide {m * steps} looks, "
            f"fewer than {min_looks} per target for {n} targets")


def _cell_weights(w: np.ndarray) -> np.ndarray:
    """Rows of w per cell, cells ordered (step, observer)."""
    m, _, steps = w.shape
    return np.array([w[c % m, :, c // m] for c in range(m * steps)])


def _alloc_from_choices(choices: np.ndarray, m: int, n: int,
                        steps: int) -> np.ndarray:
    u = np.zeros((m, n, steps), dtype=np.uint8)
    for c, j in enumerate(choices):
        if j >= 0:
            u[c % m, j, c // m] = 1
    return u


def _per_target_totals(choices: np.ndarray, c_w: np.ndarray) -> np.ndarray:
    """Accumulated weight per target, summed in ascending cell order.

    Every solver, baseline, and the oracle report objectives through this
    one accumulation so equal allocations produce bitwise-equal numbers.
    """
    totals = np.zeros(c_w.shape[1])
    sel = np.flatnonzero(choices >= 0)
    np.add.at(totals, choices[sel], c_w[sel, choices[sel]])
    return totals


def _report(choices, w, kind, optimality, nodes, t_start) -> SolveReport:
    m, n, steps = w.shape
    choices = np.asarray(choices, dtype=np.int64)
    totals = _per_target_totals(choices, _cell_weights(w))
    value = totals.sum() if kind == "total" else totals.min()
    u = _alloc_from_choices(choices, m, n, steps)
    return SolveReport(allocation=u, objective=float(value),
                       per_target_traces=totals, optimality=optimality,
                       nodes_explored=int(nodes),
                       wall_time_ms=(time.perf_counter() - t_start) * 1e3)


# ---------------------------------------------------------------------------
# exact solvers

def _best_completion(c_w: np.ndarray, cellmax: np.ndarray, suffix: np.ndarray,
                     c: int, counts: np.ndarray, min_looks: int) -> float:
    """Exact best value obtainable from cells c onward given current counts.

    With nonnegative weights an optimal completion lets every cell not
    needed for coverage take its best target; the cells that fill the
    remaining coverage slots are chosen by a minimum-regret assignment
    (regret = cell's best weight minus its weight on the slot's target).
    Returns -inf when the remaining cells cannot cover the deficit.
    """
    deficits = np.maximum(min_looks - counts, 0)
    slots = int(deficits.sum())
    if slots == 0:
        return float(suffix[c])
    if slots > len(c_w) - c:
        return -np.inf
    cols = np.repeat(np.arange(len(deficits)), deficits)
    regret = cellmax[c:, None] - c_w[c:, cols]
    rows, col_idx = linear_sum_assignment(regret)
    return float(suffix[c] - regret[rows, col_idx].sum())


def solve_max_trace(weights, min_looks: int = 2) -> SolveReport:
    """Provably optimal allocation maximizing the total accumulated trace.

    Depth-first branch and bound over (step, observer) cells.  Idle cells
    are never branched on: weights are nonnegative, so assigning a cell
    weakly dominates idling for both the objective and coverage.  The
    bound on a partial assignment is exact (an optimal completion is free
    cells at their best target plus a minimum-regret filling of the open
    coverage slots), so the search walks straight to an optimum and
    prunes everything else; children are tried bound-descending with ties
    toward the smaller target index, and incumbents must improve
    strictly, making the returned optimum deterministic.
    """
    t_start = time.perf_counter()
    w = _weights_array(weights)
    m, n, steps = w.shape
    _require_coverage_feasible(m, n, steps, min_looks)
    ncells = m * steps
    c_w = _cell_weights(w)
    cellmax = c_w.max(axis=1)
    suffix = np.zeros(ncells + 1)
    suffix[:ncells] = np.cumsum(cellmax[::-1])[::-1]

    counts = np.zeros(n, dtype=np.int64)
    choice = np.full(ncells, -1, dtype=np.int64)
    state = {"best": -np.inf, "choices": None, "nodes": 0}

    def descend(c: int, value: float):
        if c == ncells:
            if value > state["best"]:
                state["best"] = value
                state["choices"] = choice.copy()
            return
        row = c_w[c]
        bounds = np.empty(n)
        for j in range(n):
            counts[j] += 1
            bounds[j] = value + row[j] + _best_completion(
                c_w, cellmax, suffix, c + 1, counts, min_looks)
            counts[j] -= 1
        for j in np.lexsort((np.arange(n), -bounds)):
            if bounds[j] <= state["best"]:
                break
            state["nodes"] += 1
            choice[c] = j
            counts[j] += 1
            descend(c + 1, value + row[j])
            counts[j] -= 1
            choice[c] = -1

    descend(0, 0.0)
    if state["choices"] is None:
        raise InfeasibleError("no allocation satisfies the coverage constraint")
    return _report(state["choices"], w, "total", "proven",
                   state["nodes"], t_start)


def solve_max_min(weights, min_looks: int = 2,
                  rel_gap: float = 0.0) -> SolveReport:
    """Optimal allocation maximizing the worst target's trace.

    The bottleneck objective is a genuine integer program (maximizing a
    floor admits no cheap exact completion bound the way the additive
    objective does), so it is handed to a branch-and-cut solver: binary
    cell-to-target assignment variables, one continuous floor variable
    constrained below every target's accumulated weight.  With the
    default rel_gap of zero the solve runs until optimality is proven
    and the report says so; a positive rel_gap permits stopping once the
    incumbent is within that relative factor of the dual bound, which
    can be orders of magnitude faster on large instances (bottleneck
    programs are notorious for slow dual convergence), and the report
    then carries optimality "heuristic" unless the gap closed anyway.
    Weights enter the program scaled to unit maximum for conditioning;
    the reported objective and traces are recomputed from the returned
    assignment in original units, so they are plain sums of input
    weights, not solver arithmetic.  The solve runs single-threaded and
    is deterministic for a fixed instance and gap.
    """
    t_start = time.perf_counter()
    w = _weights_array(weights)
    m, n, steps = w.shape
    _require_coverage_feasible(m, n, steps, min_looks)
    ncells = m * steps
    c_w = _cell_weights(w)

    scale = float(c_w.max())
    scaled = c_w / scale if scale > 0.0 else c_w
    nvar = ncells * n + 1  # u[c, j] row-major, floor variable last
    cost = np.zeros(nvar)
    cost[-1] = -1.0

    one_per_cell = np.zeros((ncells, nvar))
    for c in range(ncells):
        one_per_cell[c, c * n:(c + 1) * n] = 1.0
    coverage = np.zeros((n, nvar))
    floor_below = np.zeros((n, nvar))
    for j in range(n):
        coverage[j, j:ncells * n:n] = 1.0
        floor_below[j, j:ncells * n:n] = scaled[:, j]
    floor_below[:, -1] = -1.0
    constraints = [LinearConstraint(one_per_cell, -np.inf, 1.0),
                   LinearConstraint(coverage, float(min_looks), np.inf),
                   LinearConstraint(floor_below, 0.0, np.inf)]

    integrality = np.ones(nvar)
    integrality[-1] = 0.0
    upper = np.ones(nvar)
    upper[-1] = np.inf
    # presolve stays off: on these mostly-binary programs with one free
    # continuous floor variable it can return a suboptimal incumbent
    # while reporting a closed gap
    res = milp(cost, constraints=constraints, integrality=integrality,
               bounds=Bounds(np.zeros(nvar), upper),
               options={"mip_rel_gap": float(rel_gap), "presolve": False})
    if res.status == 2:
        raise InfeasibleError("no allocation satisfies the coverage constraint")
    if res.status != 0 or res.x is None:
        raise CislunarError(f"worst-target solve failed: {res.message}")

    assignment = res.x[:-1].reshape(ncells, n)
    choices = np.where(assignment.max(axis=1) > 0.5,
                       assignment.argmax(axis=1), -1)
    counts = np.bincount(choices[choices >= 0], minlength=n)
    if counts.min() < min_looks:
        raise InfeasibleError("solver returned an under-covering assignment")
    optimality = "proven" if float(res.mip_gap) == 0.0 else "heuristic"
    return _report(choices, w, "worst", optimality,
                   getattr(res, "mip_node_count", 0), t_start)


# ---------------------------------------------------------------------------
# baselines and oracle

def myopic_policy(weights) -> SolveReport:
    """Per-step greedy assignment on instantaneous gains.

    Each (step, observer) cell independently takes the target with the
    largest weight (ties toward the smaller index); no coverage repair is
    attempted, so the result can under-observe targets.  Feed it weights
    built with to_horizon=False for a genuinely memory-less baseline;
    check coverage afterwards with validate_allocation.
    """
    t_start = time.perf_counter()
    w = _weights_array(weights)
    choices = _cell_weights(w).argmax(axis=1)
    return _report(choices, w, "total", "heuristic", 0, t_start)


def brute_force_oracle(weights, objective: str = "max-trace",
                       min_looks: int = 2,
                       max_assignments: int = 10_000_000) -> SolveReport:
    """Exhaustive enumeration over all (targets + idle)^cells assignments.

    Exact for either objective; refuses instances whose enumeration
    exceeds max_assignments.  Options enumerate targets in index order
    with idle last and incumbents must improve strictly, mirroring the
    solvers' tie-break direction.
    """
    t_start = time.perf_counter()
    if objective not in ("max-trace", "max-min"):
        raise ValidationError(f"unknown objective {objective!r}")
    w = _weights_array(weights)
    m, n, steps = w.shape
    ncells = m * steps
    total = (n + 1) ** ncells
    if total > max_assignments:
        raise ValidationError(
            f"enumeration of {total} assignments exceeds the "
            f"{max_assignments} cap")
    _require_coverage_feasible(m, n, steps, min_looks)
    c_w = _cell_weights(w)

    kind = "total" if objective == "max-trace" else "worst"
    best_val = -np.inf
    best = None
    nodes = 0
    for combo in itertools.product(range(n + 1), repeat=ncells):
        nodes += 1
        choices = np.array(combo, dtype=np.int64)
        choices[choices == n] = -1
        if np.bincount(choices[choices >= 0], minlength=n).min() < min_looks:
            continue
        totals = _per_target_totals(choices, c_w)
        value = totals.sum() if kind == "total" else totals.min()
        if value > best_val:
            best_val = value
            best = choices
    if best is None:
        raise InfeasibleError("no allocation satisfies the coverage constraint")
    return _report(best, w, kind, "proven", nodes, t_start)

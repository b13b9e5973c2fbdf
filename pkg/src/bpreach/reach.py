"""Backward (BReach-LP / ReBReach-LP) and forward (Reach-LP) set propagation.

Each backward step works in three stages:

1. ignore the policy and bound the states that can reach the target under any
   admissible control (one LP pair per state axis);
2. partition that box and relax the network over each cell;
3. per cell, bound the states that reach the target with a control inside the
   relaxation, and take the bounding box of the per-cell results.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import (
    HPolytope,
    HyperRectangle,
    PartitionGrid,
    bounding_box_of_union,
    partition,
    to_polytope,
)
from .lp import (
    LinearProgram,
    LpSolver,
    LpStatus,
    build_control_set_backstep,
    build_forward_step,
    build_nn_constrained_backstep,
    build_refinement_lp,
    default_solver,
)
from .network import AffineBoundPair, MlpNetwork, crown_relax
from .systems import LtiSystem

__all__ = [
    "LtiSystem",
    "BpRun",
    "ForwardRun",
    "UnboundedSetError",
    "backward_step",
    "breach_lp",
    "rebreach_lp",
    "reach_lp_forward",
]


class UnboundedSetError(RuntimeError):
    """An axis LP was unbounded, so the set has no finite box bound."""


@dataclass
class StepDetail:
    """Intermediate products of one backward step, kept for refinement."""

    control_box: HyperRectangle
    cells: list = field(default_factory=list)
    relaxations: list = field(default_factory=list)
    estimate: Optional[HyperRectangle] = None


@dataclass
class BpRun:
    estimates: list
    step_times: list
    horizon: int
    partition: tuple
    mode: str
    details: list = field(default_factory=list, repr=False, compare=False)

    @property
    def total_time(self) -> float:
        return float(sum(self.step_times))

    @property
    def terminated_early(self) -> bool:
        return bool(self.estimates) and self.estimates[-1].is_empty


@dataclass
class ForwardRun:
    estimates: list
    step_times: list
    horizon: int
    partition: tuple

    @property
    def total_time(self) -> float:
        return float(sum(self.step_times))


def _as_grid(r) -> PartitionGrid:
    return r if isinstance(r, PartitionGrid) else PartitionGrid(tuple(r))


def _box_from_lps(solver: LpSolver, build: Callable[[int, str], LinearProgram],
                  n_x: int) -> HyperRectangle:
    """Solve min/max per axis; Empty on the first infeasible program."""
    lower = np.empty(n_x)
    upper = np.empty(n_x)
    for axis in range(n_x):
        for sense in ("min", "max"):
            out = solver.solve(build(axis, sense))
            if out.status is LpStatus.INFEASIBLE:
                return HyperRectangle.empty(n_x)
            if out.status is LpStatus.UNBOUNDED:
                raise UnboundedSetError(f"axis {axis} ({sense}) is unbounded")
            if sense == "min":
                lower[axis] = out.value
            else:
                upper[axis] = out.value
    # LP round-off can leave a degenerate interval microscopically inverted.
    upper = np.maximum(upper, lower)
    return HyperRectangle(lower, upper)


def _check_dims(sys: LtiSystem, net: MlpNetwork):
    if net.input_dim != sys.n_x or net.output_dim != sys.n_u:
        raise ValueError(
            f"network maps {net.input_dim}->{net.output_dim}, system needs {sys.n_x}->{sys.n_u}"
        )


def _backward_step_detail(sys, net, target: HPolytope, grid: PartitionGrid,
                          solver: LpSolver) -> StepDetail:
    n_x = sys.n_x
    control_box = _box_from_lps(
        solver, lambda ax, s: build_control_set_backstep(sys, target, ax, s), n_x
    )
    detail = StepDetail(control_box=control_box)
    if control_box.is_empty:
        detail.estimate = control_box
        return detail
    pieces = []
    for cell in partition(control_box, grid):
        bounds = crown_relax(net, cell)
        detail.cells.append(cell)
        detail.relaxations.append(bounds)
        pieces.append(_box_from_lps(
            solver,
            lambda ax, s: build_nn_constrained_backstep(sys, target, cell, bounds, ax, s),
            n_x,
        ))
    detail.estimate = bounding_box_of_union(pieces)
    return detail


def backward_step(sys: LtiSystem, net: MlpNetwork, target: HPolytope, r,
                  solver: Optional[LpSolver] = None) -> HyperRectangle:
    """Box over-approximating the states that the policy drives into ``target`` in one step."""
    _check_dims(sys, net)
    if target.dim != sys.n_x:
        raise ValueError(f"target has dimension {target.dim}, system state has {sys.n_x}")
    grid = _as_grid(r)
    solver = solver or default_solver()
    return _backward_step_detail(sys, net, target, grid, solver).estimate


def _as_polytope(target) -> HPolytope:
    if isinstance(target, HyperRectangle):
        return to_polytope(target)
    return target


def breach_lp(sys: LtiSystem, net: MlpNetwork, target, horizon: int, r,
              solver: Optional[LpSolver] = None) -> BpRun:
    """Iterate :func:`backward_step` for ``horizon`` steps, stopping at the first Empty."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    _check_dims(sys, net)
    grid = _as_grid(r)
    solver = solver or default_solver()
    poly = _as_polytope(target)
    if poly.dim != sys.n_x:
        raise ValueError(f"target has dimension {poly.dim}, system state has {sys.n_x}")
    estimates, times, details = [], [], []
    for _ in range(horizon):
        t0 = time.perf_counter()
        detail = _backward_step_detail(sys, net, poly, grid, solver)
        times.append(time.perf_counter() - t0)
        estimates.append(detail.estimate)
        details.append(detail)
        if detail.estimate.is_empty:
            break
        poly = to_polytope(detail.estimate)
    return BpRun(estimates, times, horizon, grid.r, "breach", details)


def rebreach_lp(sys: LtiSystem, net: MlpNetwork, target, horizon: int, r,
                solver: Optional[LpSolver] = None) -> BpRun:
    """Refine a BReach-LP chain with multi-step trajectory programs.

    The estimate ``k`` steps back keeps the partition and cell relaxations of
    its own backward step, and additionally requires the trajectory to pass
    through the (already refined) estimates ``k-1, ..., 1`` before landing in
    the original target. Intermediate sets are relaxed once each.
    """
    solver = solver or default_solver()
    base = breach_lp(sys, net, target, horizon, r, solver)
    poly = _as_polytope(target)
    n_x = sys.n_x

    refined = [base.estimates[0]]
    times = [base.step_times[0]]
    links: list[tuple[HyperRectangle, AffineBoundPair]] = []
    for k in range(2, len(base.estimates) + 1):
        t0 = time.perf_counter()
        prev = refined[-1]
        if prev.is_empty:
            break
        detail = base.details[k - 1]
        if detail.estimate.is_empty:
            refined.append(detail.estimate)
            times.append(base.step_times[k - 1] + time.perf_counter() - t0)
            break
        # links run from step -(k-1) to -1
        links.insert(0, (prev, crown_relax(net, prev)))
        pieces = []
        for cell, bounds in zip(detail.cells, detail.relaxations):
            chain = [(cell, bounds), *links]
            pieces.append(_box_from_lps(
                solver, lambda ax, s: build_refinement_lp(sys, chain, poly, ax, s), n_x
            ))
        refined.append(bounding_box_of_union(pieces))
        times.append(base.step_times[k - 1] + time.perf_counter() - t0)
    return BpRun(refined, times, horizon, base.partition, "rebreach", base.details)


def reach_lp_forward(sys: LtiSystem, net: MlpNetwork, x0: HyperRectangle, horizon: int, r,
                     solver: Optional[LpSolver] = None) -> ForwardRun:
    """Forward reachable-set boxes ``R_1 .. R_horizon`` from ``x0``."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if x0.is_empty:
        raise ValueError("initial set must be nonempty")
    _check_dims(sys, net)
    if x0.dim != sys.n_x:
        raise ValueError(f"initial set has dimension {x0.dim}, system state has {sys.n_x}")
    grid = _as_grid(r)
    solver = solver or default_solver()
    n_x = sys.n_x
    current = x0
    estimates, times = [], []
    for _ in range(horizon):
        t0 = time.perf_counter()
        pieces = []
        for cell in partition(current, grid):
            bounds = crown_relax(net, cell)
            pieces.append(_box_from_lps(
                solver, lambda ax, s: build_forward_step(sys, cell, bounds, ax, s), n_x
            ))
        current = bounding_box_of_union(pieces)
        if current.is_empty:
            # only possible if the policy bounds contradict the control set everywhere
            raise ValueError("policy bounds are incompatible with the control set")
        times.append(time.perf_counter() - t0)
        estimates.append(current)
    return ForwardRun(estimates, times, horizon, grid.r)


def volume_reduction(coarse: Sequence[HyperRectangle], fine: Sequence[HyperRectangle]) -> float:
    """Percentage by which the total volume of ``fine`` undercuts ``coarse``."""
    v_coarse = sum(b.volume() for b in coarse)
    v_fine = sum(b.volume() for b in fine)
    if v_coarse == 0.0:
        return 0.0
    return 100.0 * (v_coarse - v_fine) / v_coarse

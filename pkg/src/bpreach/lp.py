"""Linear programs for the backward/forward set computations and a dense simplex solver.

Every LP here has free variables ``z`` and the form::

    max/min  c @ z + offset   s.t.  G z <= g,  E z = e

The bundled solver is a two-phase tableau simplex using Bland's rule, so the
same program always produces the same pivots and the same answer.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np

from .geometry import HPolytope, HyperRectangle
from .network import AffineBoundPair
from .systems import LtiSystem

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9

FEAS_TOL_ENV = "BPREACH_FEAS_TOL"
PIVOT_TOL_ENV = "BPREACH_PIVOT_TOL"


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    sense: str  # "max" or "min"
    G: np.ndarray
    g: np.ndarray
    E: np.ndarray
    e: np.ndarray
    offset: float = 0.0
    tag: str = ""

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        n = c.size
        G = np.asarray(self.G, dtype=float).reshape(-1, n)
        E = np.asarray(self.E, dtype=float).reshape(-1, n)
        g = np.asarray(self.g, dtype=float).reshape(-1)
        e = np.asarray(self.e, dtype=float).reshape(-1)
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")
        if G.shape[0] != g.size or E.shape[0] != e.size:
            raise ValueError("constraint matrix and right-hand side lengths differ")
        for arr in (c, G, g, E, e):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP data must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "e", e)

    @property
    def n(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    value: Optional[float] = None
    z: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class LpSolver(Protocol):
    def solve(self, lp: LinearProgram) -> LpOutcome: ...


class SimplexSolver:
    """Dense two-phase simplex with Bland's anti-cycling rule."""

    def __init__(self, feas_tol: float = FEAS_TOL, pivot_tol: float = PIVOT_TOL,
                 max_iter: int = 100_000):
        self.feas_tol = feas_tol
        self.pivot_tol = pivot_tol
        self.max_iter = max_iter

    def __repr__(self):
        return f"SimplexSolver(feas_tol={self.feas_tol:g}, pivot_tol={self.pivot_tol:g})"

    def solve(self, lp: LinearProgram) -> LpOutcome:
        n = lp.n
        m_i, m_e = lp.G.shape[0], lp.E.shape[0]
        m = m_i + m_e

        # Standard form over y = [p, q, s] >= 0 with z = p - q.
        A = np.zeros((m, 2 * n + m_i))
        A[:m_i, :n] = lp.G
        A[:m_i, n:2 * n] = -lp.G
        A[:m_i, 2 * n:] = np.eye(m_i)
        A[m_i:, :n] = lp.E
        A[m_i:, n:2 * n] = -lp.E
        b = np.concatenate([lp.g, lp.e])
        flip = b < 0
        A[flip] *= -1.0
        b[flip] *= -1.0

        cost = np.zeros(A.shape[1])
        cost[:n] = lp.c
        cost[n:2 * n] = -lp.c
        if lp.sense == "max":
            cost = -cost

        A_std, b_std = A.copy(), b.copy()

        # Initial basis: the slack where the row was not flipped, else an artificial.
        n_std = A.shape[1]
        natural = np.zeros(m, dtype=bool)
        natural[:m_i] = ~flip[:m_i]
        art_rows = np.flatnonzero(~natural)
        n_art = art_rows.size
        T = np.zeros((m, n_std + n_art))
        T[:, :n_std] = A
        T[art_rows, n_std + np.arange(n_art)] = 1.0
        basis = np.empty(m, dtype=int)
        basis[natural] = 2 * n + np.flatnonzero(natural)
        basis[art_rows] = n_std + np.arange(n_art)
        rhs = b.copy()

        if n_art:
            phase1_cost = np.zeros(T.shape[1])
            phase1_cost[n_std:] = 1.0
            status = self._iterate(T, rhs, basis, phase1_cost, T.shape[1])
            if status is not LpStatus.OPTIMAL:  # phase 1 is bounded below by 0
                raise RuntimeError("phase 1 did not terminate optimally")
            infeas = float(phase1_cost[basis] @ rhs)
            if infeas > self.feas_tol * max(1.0, float(np.max(np.abs(b), initial=0.0))):
                return LpOutcome(LpStatus.INFEASIBLE)
            keep = np.ones(m, dtype=bool)
            for i in range(m):
                if basis[i] < n_std:
                    continue
                cand = np.flatnonzero(np.abs(T[i, :n_std]) > self.pivot_tol)
                if cand.size:
                    best = int(cand[np.argmax(np.abs(T[i, cand]))])
                    self._pivot(T, rhs, basis, i, best)
                else:
                    keep[i] = False  # redundant row
            T, rhs, basis = T[keep, :n_std], rhs[keep], basis[keep]
            A_std, b_std = A_std[keep], b_std[keep]
        else:
            T = T[:, :n_std]

        status = self._iterate(T, rhs, basis, cost, n_std)
        if status is LpStatus.UNBOUNDED:
            return LpOutcome(LpStatus.UNBOUNDED)

        y = np.zeros(n_std)
        y_b = rhs.copy()
        try:
            y_b = np.linalg.solve(A_std[:, basis], b_std)
        except np.linalg.LinAlgError:
            pass
        y[basis] = np.maximum(y_b, 0.0)
        z = y[:n] - y[n:2 * n]
        return LpOutcome(LpStatus.OPTIMAL, float(lp.c @ z + lp.offset), z)

    def _pivot(self, T, rhs, basis, row, col):
        piv = T[row, col]
        T[row] /= piv
        rhs[row] /= piv
        colvals = T[:, col].copy()
        colvals[row] = 0.0
        T -= np.outer(colvals, T[row])
        rhs -= colvals * rhs[row]
        basis[row] = col

    def _iterate(self, T, rhs, basis, cost, n_cols) -> LpStatus:
        """Minimise ``cost @ y`` from the current feasible basis."""
        for _ in range(self.max_iter):
            reduced = cost[:n_cols] - cost[basis] @ T[:, :n_cols]
            entering = np.flatnonzero(reduced < -self.pivot_tol)
            if entering.size == 0:
                return LpStatus.OPTIMAL
            col = int(entering[0])
            column = T[:, col]
            rows = np.flatnonzero(column > self.pivot_tol)
            if rows.size == 0:
                return LpStatus.UNBOUNDED
            ratios = rhs[rows] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            row = int(ties[np.argmin(basis[ties])])
            self._pivot(T, rhs, basis, row, col)
        raise RuntimeError("simplex iteration limit reached")


def default_solver() -> SimplexSolver:
    """Solver with tolerances taken from the environment when set."""
    feas = float(os.environ.get(FEAS_TOL_ENV, FEAS_TOL))
    piv = float(os.environ.get(PIVOT_TOL_ENV, PIVOT_TOL))
    return SimplexSolver(feas_tol=feas, pivot_tol=piv)


def solve(lp: LinearProgram) -> LpOutcome:
    return default_solver().solve(lp)


# ---------------------------------------------------------------- builders

def _check_sense(sense: str) -> None:
    if sense not in ("max", "min"):
        raise ValueError(f"sense must be 'max' or 'min', got {sense!r}")


def _check_target(sys: LtiSystem, target: HPolytope):
    if target.dim != sys.n_x:
        raise ValueError(f"target has dimension {target.dim}, system state has {sys.n_x}")


def _check_axis(axis: int, n_x: int):
    if not 0 <= axis < n_x:
        raise ValueError(f"axis {axis} out of range for {n_x} states")


def _covers(outer: HyperRectangle, inner: HyperRectangle) -> bool:
    return bool(np.all(outer.lower <= inner.lower) and np.all(inner.upper <= outer.upper))


def _check_bounds(sys: LtiSystem, box: HyperRectangle, bounds: AffineBoundPair):
    if box.dim != sys.n_x:
        raise ValueError(f"box has dimension {box.dim}, system state has {sys.n_x}")
    if bounds.Psi.shape != (sys.n_u, sys.n_x) or bounds.Phi.shape != (sys.n_u, sys.n_x):
        raise ValueError("affine control bounds do not match the system dimensions")
    if bounds.domain.is_empty or not _covers(bounds.domain, box):
        raise ValueError("affine control bounds domain does not cover the box")


class _Rows:
    """Accumulates inequality and equality rows over a fixed variable count."""

    def __init__(self, n: int):
        self.n = n
        self.G, self.g, self.E, self.e = [], [], [], []

    def leq(self, blocks: dict, rhs):
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        rows = np.zeros((rhs.size, self.n))
        for start, mat in blocks.items():
            mat = np.atleast_2d(mat)
            rows[:, start:start + mat.shape[1]] += mat
        self.G.append(rows)
        self.g.append(rhs)

    def eq(self, blocks: dict, rhs):
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        rows = np.zeros((rhs.size, self.n))
        for start, mat in blocks.items():
            mat = np.atleast_2d(mat)
            rows[:, start:start + mat.shape[1]] += mat
        self.E.append(rows)
        self.e.append(rhs)

    def box(self, start: int, box: HyperRectangle):
        eye = np.eye(box.dim)
        self.leq({start: eye}, box.upper)
        self.leq({start: -eye}, -box.lower)

    def program(self, c, sense, offset=0.0, tag=""):
        G = np.vstack(self.G) if self.G else np.zeros((0, self.n))
        g = np.concatenate(self.g) if self.g else np.zeros(0)
        E = np.vstack(self.E) if self.E else np.zeros((0, self.n))
        e = np.concatenate(self.e) if self.e else np.zeros(0)
        return LinearProgram(c=c, sense=sense, G=G, g=g, E=E, e=e, offset=offset, tag=tag)


def _axis_objective(n: int, index: int) -> np.ndarray:
    c = np.zeros(n)
    c[index] = 1.0
    return c


def _control_and_target(rows: _Rows, sys: LtiSystem, target: HPolytope, xi: int, ui: int):
    """Add ``u in U`` and ``H (A x + B u + c) <= h`` for variables at ``xi``/``ui``."""
    n_u = sys.n_u
    rows.leq({ui: np.eye(n_u)}, sys.u_ub)
    rows.leq({ui: -np.eye(n_u)}, -sys.u_lb)
    rows.leq({xi: target.H @ sys.A, ui: target.H @ sys.B}, target.h - target.H @ sys.c)


def _policy_bounds(rows: _Rows, bounds: AffineBoundPair, xi: int, ui: int):
    n_u = bounds.alpha.size
    # Psi x + alpha <= u  and  u <= Phi x + beta
    rows.leq({xi: bounds.Psi, ui: -np.eye(n_u)}, -bounds.alpha)
    rows.leq({xi: -bounds.Phi, ui: np.eye(n_u)}, bounds.beta)


def build_control_set_backstep(sys: LtiSystem, target: HPolytope, axis: int,
                               sense: str) -> LinearProgram:
    """States that reach ``target`` in one step under some admissible control."""
    _check_target(sys, target)
    _check_axis(axis, sys.n_x)
    _check_sense(sense)
    n_x, n_u = sys.n_x, sys.n_u
    rows = _Rows(n_x + n_u)
    _control_and_target(rows, sys, target, 0, n_x)
    return rows.program(_axis_objective(n_x + n_u, axis), sense, tag="control_set")


def build_nn_constrained_backstep(sys: LtiSystem, target: HPolytope, cell: HyperRectangle,
                                  bounds: AffineBoundPair, axis: int, sense: str) -> LinearProgram:
    """States in ``cell`` that reach ``target`` with a control inside the policy bounds."""
    _check_target(sys, target)
    _check_axis(axis, sys.n_x)
    _check_sense(sense)
    _check_bounds(sys, cell, bounds)
    n_x, n_u = sys.n_x, sys.n_u
    rows = _Rows(n_x + n_u)
    rows.box(0, cell)
    _policy_bounds(rows, bounds, 0, n_x)
    _control_and_target(rows, sys, target, 0, n_x)
    return rows.program(_axis_objective(n_x + n_u, axis), sense, tag="nn_backstep")


def build_refinement_lp(sys: LtiSystem, chain: Sequence[tuple[HyperRectangle, AffineBoundPair]],
                        target: HPolytope, axis: int, sense: str) -> LinearProgram:
    """Multi-step program tying a state ``k`` steps back to the final target.

    ``chain`` holds one ``(box, bounds)`` per step, ordered from ``-k`` to
    ``-1``. Variables are ``(x_{-k}, u_{-k}, ..., x_{-1}, u_{-1}, x_0)``; the
    objective is the ``axis`` coordinate of ``x_{-k}``.
    """
    chain = list(chain)
    if not chain:
        raise ValueError("refinement chain must not be empty")
    _check_target(sys, target)
    _check_axis(axis, sys.n_x)
    _check_sense(sense)
    n_x, n_u = sys.n_x, sys.n_u
    for box, bounds in chain:
        _check_bounds(sys, box, bounds)
    k = len(chain)
    stride = n_x + n_u
    n = k * stride + n_x
    rows = _Rows(n)
    for j, (box, bounds) in enumerate(chain):
        xi, ui, xn = j * stride, j * stride + n_x, (j + 1) * stride
        rows.box(xi, box)
        _policy_bounds(rows, bounds, xi, ui)
        rows.leq({ui: np.eye(n_u)}, sys.u_ub)
        rows.leq({ui: -np.eye(n_u)}, -sys.u_lb)
        # x_next - A x - B u = c
        rows.eq({xn: np.eye(n_x), xi: -sys.A, ui: -sys.B}, sys.c)
    rows.leq({k * stride: target.H}, target.h)
    return rows.program(_axis_objective(n, axis), sense, tag="refinement")


def build_forward_step(sys: LtiSystem, from_cell: HyperRectangle, bounds: AffineBoundPair,
                       axis: int, sense: str) -> LinearProgram:
    """Extreme value of ``(A x + B u + c)[axis]`` over ``from_cell`` and the policy bounds."""
    _check_axis(axis, sys.n_x)
    _check_sense(sense)
    _check_bounds(sys, from_cell, bounds)
    n_x, n_u = sys.n_x, sys.n_u
    rows = _Rows(n_x + n_u)
    rows.box(0, from_cell)
    _policy_bounds(rows, bounds, 0, n_x)
    rows.leq({n_x: np.eye(n_u)}, sys.u_ub)
    rows.leq({n_x: -np.eye(n_u)}, -sys.u_lb)
    c = np.concatenate([sys.A[axis], sys.B[axis]])
    return rows.program(c, sense, offset=float(sys.c[axis]), tag="forward")


class CountingSolver:
    """Wraps a solver and counts calls per program tag."""

    def __init__(self, inner: Optional[LpSolver] = None):
        self.inner = inner if inner is not None else default_solver()
        self.calls: dict[str, int] = {}

    @property
    def total(self) -> int:
        return sum(self.calls.values())

    def solve(self, lp: LinearProgram) -> LpOutcome:
        self.calls[lp.tag] = self.calls.get(lp.tag, 0) + 1
        return self.inner.solve(lp)

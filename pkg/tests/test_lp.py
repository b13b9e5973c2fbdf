import numpy as np
import pytest

from bpreach import fixtures
from bpreach.geometry import HPolytope, HyperRectangle, to_polytope
from bpreach.lp import (
    CountingSolver,
    LinearProgram,
    LpStatus,
    SimplexSolver,
    build_control_set_backstep,
    build_forward_step,
    build_nn_constrained_backstep,
    build_refinement_lp,
    default_solver,
    solve,
)
from bpreach.network import crown_relax, make_clip_network
from bpreach.systems import LtiSystem

from .conftest import random_bounded_lp, vertex_enumeration_optimum

NO_EQ = dict(E=np.zeros((0, 1)), e=[])


def lp1(sense, G, g):
    return LinearProgram(c=[1.0], sense=sense, G=G, g=g, **NO_EQ)


def test_solve_trivial_cases():
    out = solve(lp1("max", [[1], [-1]], [3, 3]))
    assert out.status is LpStatus.OPTIMAL and out.value == 3.0
    assert solve(lp1("max", [[1], [-1]], [0, -1])).status is LpStatus.INFEASIBLE
    assert solve(lp1("max", [[-1]], [0])).status is LpStatus.UNBOUNDED


def test_solve_equalities():
    lp = LinearProgram(c=[1.0, 1.0], sense="max", G=np.vstack([np.eye(2), -np.eye(2)]),
                       g=[5, 5, 5, 5], E=[[1.0, -1.0]], e=[1.0])
    out = solve(lp)
    assert out.optimal and out.value == pytest.approx(9.0, abs=1e-9)
    assert out.z[0] - out.z[1] == pytest.approx(1.0, abs=1e-9)


def test_malformed_programs_raise():
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0, 2.0], sense="max", G=[[1.0, 0.0]], g=[1.0, 2.0], E=np.zeros((0, 2)), e=[])
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0], sense="up", G=[[1.0]], g=[1.0], **NO_EQ)
    with pytest.raises(ValueError):
        LinearProgram(c=[np.nan], sense="max", G=[[1.0]], g=[1.0], **NO_EQ)


def test_solver_matches_vertex_enumeration():
    rng = np.random.default_rng(2024)
    solver = SimplexSolver()
    for _ in range(100):
        c, sense, G, g = random_bounded_lp(rng)
        out = solver.solve(LinearProgram(c=c, sense=sense, G=G, g=g, E=np.zeros((0, c.size)), e=[]))
        expected = vertex_enumeration_optimum(c, sense, G, g)
        assert out.optimal
        assert out.value == pytest.approx(expected, abs=1e-6)
        assert np.all(G @ out.z <= g + 1e-7)
        assert out.value == pytest.approx(float(c @ out.z), abs=1e-9)


def test_solver_matches_vertex_enumeration_with_equalities():
    rng = np.random.default_rng(7)
    for _ in range(40):
        c, sense, G, g = random_bounded_lp(rng, n_max=5)
        n = c.size
        if n < 2:
            continue
        E = rng.normal(size=(1, n))
        # pass the equality through the box midpoint
        mid = 0.5 * (g[-2 * n:-n] - g[-n:])
        e = E @ mid
        out = solve(LinearProgram(c=c, sense=sense, G=G, g=g, E=E, e=e))
        expected = vertex_enumeration_optimum(c, sense, G, g, E, e)
        if expected is None:
            continue
        assert out.optimal and out.value == pytest.approx(expected, abs=1e-6)
        assert np.all(np.abs(E @ out.z - e) <= 1e-7)


def test_solver_is_deterministic():
    rng = np.random.default_rng(3)
    c, sense, G, g = random_bounded_lp(rng)
    lp = LinearProgram(c=c, sense=sense, G=G, g=g, E=np.zeros((0, c.size)), e=[])
    a, b = solve(lp), solve(lp)
    assert a.status == b.status and a.value == b.value and np.array_equal(a.z, b.z)


def test_degenerate_program_terminates():
    # Many redundant constraints through the optimum (classic cycling bait).
    G = np.array([[1, 1], [1, 2], [2, 1], [1, 0], [0, 1], [-1, 0], [0, -1], [3, 3]], float)
    g = np.array([2, 3, 3, 1, 1, 0, 0, 6], float)
    out = solve(LinearProgram(c=[1, 1], sense="max", G=G, g=g, E=np.zeros((0, 2)), e=[]))
    assert out.optimal and out.value == pytest.approx(2.0)


def test_tolerance_override_from_environment(monkeypatch):
    monkeypatch.setenv("BPREACH_FEAS_TOL", "1e-5")
    monkeypatch.setenv("BPREACH_PIVOT_TOL", "1e-8")
    s = default_solver()
    assert s.feas_tol == 1e-5 and s.pivot_tol == 1e-8


# ---------------------------------------------------------------- builders

def integrator(u_lb=(-1, -1), u_ub=(1, 1)):
    return LtiSystem(np.eye(2), np.eye(2), None, u_lb, u_ub)


TARGET = HyperRectangle([4, -0.25], [5, 0.25])


def box_from(builder):
    lo, hi = [], []
    for axis in range(2):
        lo.append(solve(builder(axis, "min")).value)
        hi.append(solve(builder(axis, "max")).value)
    return np.array(lo), np.array(hi)


def test_control_set_backstep_is_minkowski_difference():
    sys = integrator()
    lo, hi = box_from(lambda a, s: build_control_set_backstep(sys, to_polytope(TARGET), a, s))
    assert np.allclose(lo, [3, -1.25], atol=1e-9) and np.allclose(hi, [6, 1.25], atol=1e-9)


def test_control_set_backstep_without_authority():
    sys = integrator((0, 0), (0, 0))
    lo, hi = box_from(lambda a, s: build_control_set_backstep(sys, to_polytope(TARGET), a, s))
    assert np.allclose(lo, TARGET.lower, atol=1e-9) and np.allclose(hi, TARGET.upper, atol=1e-9)


def test_control_set_backstep_infeasible_target():
    sys = integrator()
    empty_target = HPolytope([[1.0, 0.0], [-1.0, 0.0]], [0.0, -1.0])  # x <= 0 and x >= 1
    for axis in range(2):
        for sense in ("min", "max"):
            assert solve(build_control_set_backstep(sys, empty_target, axis, sense)).status is LpStatus.INFEASIBLE


@pytest.mark.parametrize("seed", range(4))
def test_control_set_backstep_signed_permutation(seed):
    rng = np.random.default_rng(seed)
    P = np.eye(2)[rng.permutation(2)] * rng.choice([-1.0, 1.0], size=2)
    d = rng.uniform(0.5, 2.0, 2)
    u_lb, u_ub = -rng.uniform(0.1, 1, 2), rng.uniform(0.1, 1, 2)
    sys = LtiSystem(P, np.diag(d), None, u_lb, u_ub)
    lo, hi = box_from(lambda a, s: build_control_set_backstep(sys, to_polytope(TARGET), a, s))
    # x = P^{-1}(t - D u): interval arithmetic is exact for these structures.
    t_lo = TARGET.lower - d * u_ub
    t_hi = TARGET.upper - d * u_lb
    P_inv = P.T
    exp_lo = np.minimum(P_inv @ t_lo, P_inv @ t_hi)
    exp_hi = np.maximum(P_inv @ t_lo, P_inv @ t_hi)
    assert np.allclose(lo, exp_lo, atol=1e-9) and np.allclose(hi, exp_hi, atol=1e-9)


def test_nn_backstep_zero_policy_recovers_target():
    sys = integrator()
    cell = HyperRectangle([3, -1.25], [6, 1.25])
    rel = crown_relax(fixtures.zero_policy(), cell)
    lo, hi = box_from(lambda a, s: build_nn_constrained_backstep(sys, to_polytope(TARGET), cell, rel, a, s))
    assert np.allclose(lo, TARGET.lower, atol=1e-9) and np.allclose(hi, TARGET.upper, atol=1e-9)


def test_nn_backstep_contradictory_policy_is_infeasible():
    sys = integrator()
    cell = HyperRectangle([3, -1.25], [6, 1.25])
    rel = crown_relax(fixtures.constant_policy([2.0, 0.0]), cell)
    lp = build_nn_constrained_backstep(sys, to_polytope(TARGET), cell, rel, 0, "max")
    assert solve(lp).status is LpStatus.INFEASIBLE


def test_nn_backstep_requires_covering_domain():
    sys = integrator()
    rel = crown_relax(fixtures.zero_policy(), HyperRectangle([0, 0], [1, 1]))
    with pytest.raises(ValueError):
        build_nn_constrained_backstep(sys, to_polytope(TARGET), HyperRectangle([0, 0], [2, 1]), rel, 0, "max")
    with pytest.raises(ValueError):
        build_nn_constrained_backstep(sys, to_polytope(HyperRectangle([0], [1])), HyperRectangle([0, 0], [1, 1]), rel, 0, "max")


def test_nn_backstep_contains_monte_carlo_preimage():
    sys = integrator()
    K = -0.5 * np.eye(2)
    net = make_clip_network(K, [-1, -1], [1, 1])
    target = HyperRectangle([1, -0.5], [2, 0.5])
    cell = HyperRectangle([0, -2.5], [4, 2.5])
    rel = crown_relax(net, cell)
    lo, hi = box_from(lambda a, s: build_nn_constrained_backstep(sys, to_polytope(target), cell, rel, a, s))
    xs = np.random.default_rng(0).uniform(cell.lower, cell.upper, size=(100_000, 2))
    nxt = xs + np.clip(xs @ K.T, -1, 1)
    hit = np.all((nxt >= target.lower) & (nxt <= target.upper), axis=1)
    assert hit.any()
    assert np.all(xs[hit] >= lo - 1e-9) and np.all(xs[hit] <= hi + 1e-9)


def test_refinement_chain_of_one_matches_backstep(double_integrator_case):
    sys, net, target = double_integrator_case
    poly = to_polytope(target)
    cell = HyperRectangle([3.5, 0.0], [5.0, 1.5])
    rel = crown_relax(net, cell)
    for axis in range(2):
        for sense in ("min", "max"):
            a = solve(build_nn_constrained_backstep(sys, poly, cell, rel, axis, sense))
            b = solve(build_refinement_lp(sys, [(cell, rel)], poly, axis, sense))
            assert a.status == b.status
            if a.optimal:
                assert a.value == pytest.approx(b.value, abs=1e-7)


def test_refinement_lp_errors():
    sys = integrator()
    with pytest.raises(ValueError):
        build_refinement_lp(sys, [], to_polytope(TARGET), 0, "max")


def test_forward_step_examples():
    sys = integrator()
    x0 = HyperRectangle([0, 0], [1, 1])
    rel = crown_relax(fixtures.zero_policy(), x0)
    lo, hi = box_from(lambda a, s: build_forward_step(sys, x0, rel, a, s))
    assert np.allclose(lo, [0, 0]) and np.allclose(hi, [1, 1])
    rel = crown_relax(fixtures.constant_policy([1.0, 0.0]), x0)
    lo, hi = box_from(lambda a, s: build_forward_step(sys, x0, rel, a, s))
    assert np.allclose(lo, [1, 0]) and np.allclose(hi, [2, 1])


def test_forward_step_offset_enters_objective():
    sys = LtiSystem(np.eye(2), np.eye(2), [0.5, -0.5], (-1, -1), (1, 1))
    x0 = HyperRectangle([0, 0], [1, 1])
    rel = crown_relax(fixtures.zero_policy(), x0)
    out = solve(build_forward_step(sys, x0, rel, 0, "max"))
    assert out.value == pytest.approx(1.5)


def test_forward_step_contains_simulated_images(double_integrator_case):
    sys, net, _ = double_integrator_case
    x0 = HyperRectangle([-2, -1], [2, 1])
    rel = crown_relax(net, x0)
    lo, hi = box_from(lambda a, s: build_forward_step(sys, x0, rel, a, s))
    xs = np.random.default_rng(1).uniform(x0.lower, x0.upper, size=(10_000, 2))
    u = np.clip(xs @ fixtures.DOUBLE_INTEGRATOR_GAIN.T, -1, 1)
    nxt = xs @ sys.A.T + u @ sys.B.T
    assert np.all(nxt >= lo - 1e-9) and np.all(nxt <= hi + 1e-9)


def test_counting_solver_tallies_tags():
    sys = integrator()
    counter = CountingSolver()
    counter.solve(build_control_set_backstep(sys, to_polytope(TARGET), 0, "max"))
    counter.solve(build_control_set_backstep(sys, to_polytope(TARGET), 1, "max"))
    assert counter.calls == {"control_set": 2} and counter.total == 2

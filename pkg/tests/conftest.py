import itertools

import numpy as np
import pytest

from bpreach import fixtures
from bpreach.geometry import HyperRectangle


def vertex_enumeration_optimum(c, sense, G, g, E=None, e=None, tol=1e-9):
    """Brute-force LP optimum over all basic solutions (bounded feasible sets only).

    Every vertex of ``{Gz <= g, Ez = e}`` is the solution of ``n`` linearly
    independent active constraints; enumerate them all and keep the best
    feasible one. Returns ``None`` when no vertex is feasible.
    """
    c = np.asarray(c, float)
    n = c.size
    G = np.asarray(G, float).reshape(-1, n)
    g = np.asarray(g, float)
    E = np.zeros((0, n)) if E is None else np.asarray(E, float).reshape(-1, n)
    e = np.zeros(0) if e is None else np.asarray(e, float)
    n_free = n - E.shape[0]
    best = None
    for rows in itertools.combinations(range(G.shape[0]), n_free):
        M = np.vstack([E, G[list(rows)]])
        rhs = np.concatenate([e, g[list(rows)]])
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        z = np.linalg.solve(M, rhs)
        if np.all(G @ z <= g + 1e-8) and np.all(np.abs(E @ z - e) <= 1e-8):
            val = float(c @ z)
            if best is None or (val > best if sense == "max" else val < best):
                best = val
    return best


def random_bounded_lp(rng, n_max=6):
    """Random LP with a box (so bounded) and a feasible interior point."""
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(0, 6))
    center = rng.uniform(-1, 1, n)
    G_extra = rng.normal(size=(m, n))
    g_extra = G_extra @ center + rng.uniform(0.1, 2.0, m)
    lo = center - rng.uniform(0.5, 3.0, n)
    hi = center + rng.uniform(0.5, 3.0, n)
    G = np.vstack([G_extra, np.eye(n), -np.eye(n)])
    g = np.concatenate([g_extra, hi, -lo])
    c = rng.normal(size=n)
    sense = "max" if rng.random() < 0.5 else "min"
    return c, sense, G, g


def monte_carlo_bp_hits(sys, controller, target: HyperRectangle, region: HyperRectangle,
                        steps: int, n: int, seed: int):
    """Independent rollout: returns initial states and a (n, steps) hit mask.

    Uses its own loop and a plain-numpy controller, not bpreach.verify.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(region.lower, region.upper, size=(n, sys.n_x))
    x0 = x.copy()
    hits = np.zeros((n, steps), dtype=bool)
    for k in range(steps):
        u = np.clip(controller(x), sys.u_lb, sys.u_ub)
        x = x @ sys.A.T + u @ sys.B.T + sys.c
        hits[:, k] = np.all((x >= target.lower) & (x <= target.upper), axis=1)
    return x0, hits


def di_controller(x):
    return np.clip(x @ fixtures.DOUBLE_INTEGRATOR_GAIN.T, -1.0, 1.0)


@pytest.fixture
def double_integrator_case():
    return fixtures.double_integrator(), fixtures.double_integrator_policy(), fixtures.double_integrator_target()


@pytest.fixture
def ground_robot_case():
    return fixtures.ground_robot(), fixtures.avoidance_policy(), fixtures.obstacle()


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.SUMMARY_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.SUMMARY_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

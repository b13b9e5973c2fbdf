"""Safety verdicts, closed-loop simulation and the Monte-Carlo backprojection oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import HyperRectangle, bounding_box_of_union, contains_points, intersects
from .network import MlpNetwork, evaluate
from .reach import BpRun, ForwardRun
from .systems import LtiSystem

SAFE = "safe"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class Witness:
    step: int
    estimate: HyperRectangle
    other: HyperRectangle


@dataclass(frozen=True)
class Verdict:
    status: str
    mode: str
    witness: Optional[Witness] = None

    @property
    def safe(self) -> bool:
        return self.status == SAFE


@dataclass(frozen=True)
class OracleReport:
    samples: int
    seed: int
    region: HyperRectangle
    hits: list
    violations: int
    violations_per_step: list
    true_volume: list
    estimate_volume: list
    ratio: list

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "seed": self.seed,
            "region": {"lower": self.region.lower.tolist(), "upper": self.region.upper.tolist()},
            "hits": list(self.hits),
            "violations": self.violations,
            "violations_per_step": list(self.violations_per_step),
            "true_volume": list(self.true_volume),
            "estimate_volume": list(self.estimate_volume),
            "ratio": list(self.ratio),
        }


def closed_loop_controls(sys: LtiSystem, net: MlpNetwork, xs: np.ndarray) -> np.ndarray:
    """Network output saturated to the control set."""
    return np.clip(evaluate(net, xs), sys.u_lb, sys.u_ub)


def simulate_batch(sys: LtiSystem, net: MlpNetwork, x0s, steps: int, controller=None) -> np.ndarray:
    """Roll out every row of ``x0s``; returns shape ``(N, steps + 1, n_x)``.

    ``controller`` overrides the network (it receives a batch of states and must
    return unsaturated controls); saturation to the control set always applies.
    """
    xs = np.atleast_2d(np.asarray(x0s, dtype=float))
    if xs.shape[1] != sys.n_x:
        raise ValueError(f"states have dimension {xs.shape[1]}, system has {sys.n_x}")
    traj = np.empty((xs.shape[0], steps + 1, sys.n_x))
    traj[:, 0] = xs
    for t in range(steps):
        raw = controller(xs) if controller is not None else evaluate(net, xs)
        u = np.clip(raw, sys.u_lb, sys.u_ub)
        xs = sys.step(xs, u)
        if not np.all(np.isfinite(xs)):
            raise FloatingPointError(f"state diverged at step {t + 1}")
        traj[:, t + 1] = xs
    return traj


def simulate(sys: LtiSystem, net: MlpNetwork, x0, steps: int, controller=None) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial state must be finite")
    return simulate_batch(sys, net, x0[None, :], steps, controller)[0]


def certify_backward(run: BpRun, x0: HyperRectangle) -> Verdict:
    """Safe when no backprojection estimate touches the initial set."""
    for k, est in enumerate(run.estimates, start=1):
        if intersects(est, x0):
            return Verdict(UNKNOWN, "backward", Witness(k, est, x0))
    return Verdict(SAFE, "backward")


def certify_forward(run: ForwardRun, obstacle: HyperRectangle) -> Verdict:
    """Safe when no reachable-set estimate touches the obstacle."""
    for k, est in enumerate(run.estimates, start=1):
        if intersects(est, obstacle):
            return Verdict(UNKNOWN, "forward", Witness(k, est, obstacle))
    return Verdict(SAFE, "forward")


def default_sampling_region(run: BpRun, target: HyperRectangle, inflate: float = 0.1) -> HyperRectangle:
    """Bounding box of all estimates, grown by ``inflate`` of its width per side."""
    box = bounding_box_of_union(list(run.estimates) + [HyperRectangle.empty(target.dim)])
    if box.is_empty:
        box = target
    widths = np.where(box.widths > 0, box.widths, 1.0)
    return HyperRectangle(box.lower - inflate * widths, box.upper + inflate * widths)


def oracle_bp(sys: LtiSystem, net: MlpNetwork, target: HyperRectangle, run: BpRun,
              sampling_region: Optional[HyperRectangle] = None, n: int = 100_000,
              seed: int = 0) -> OracleReport:
    """Brute-force check of a backprojection run.

    Samples ``n`` initial states uniformly in ``sampling_region``, simulates each
    for the run's horizon and counts, per step ``k``, the samples whose state at
    step ``k`` lies in ``target``. Such a sample is a violation if it is not in
    the ``k``-step estimate (steps past an early Empty count as Empty).
    """
    if n < 1:
        raise ValueError("sample count must be at least 1")
    if sampling_region is None:
        sampling_region = default_sampling_region(run, target)
    if sampling_region.is_empty:
        raise ValueError("sampling region must be nonempty")
    for est in run.estimates:
        if est.is_empty:
            continue
        if np.any(est.lower < sampling_region.lower) or np.any(est.upper > sampling_region.upper):
            raise ValueError("sampling region must contain every estimate")

    tau = run.horizon
    rng = np.random.default_rng(seed)
    x0s = rng.uniform(sampling_region.lower, sampling_region.upper, size=(n, sys.n_x))
    traj = simulate_batch(sys, net, x0s, tau)

    region_vol = sampling_region.volume()
    hits, viol, true_vol, est_vol, ratio = [], [], [], [], []
    for k in range(1, tau + 1):
        est = run.estimates[k - 1] if k <= len(run.estimates) else HyperRectangle.empty(sys.n_x)
        hit = contains_points(target, traj[:, k])
        inside = contains_points(est, x0s)
        hits.append(int(hit.sum()))
        viol.append(int(np.sum(hit & ~inside)))
        tv = hits[-1] / n * region_vol
        ev = est.volume()
        true_vol.append(tv)
        est_vol.append(ev)
        ratio.append(ev / tv if tv > 0 else None)
    return OracleReport(
        samples=n,
        seed=seed,
        region=sampling_region,
        hits=hits,
        violations=int(sum(viol)),
        violations_per_step=viol,
        true_volume=true_vol,
        estimate_volume=est_vol,
        ratio=ratio,
    )

"""Scenario files, pipeline execution and result documents.

Scenario, network and result files are JSON with a ``version`` field. Matrices
are nested row-major lists and floats are written with shortest round-trip
precision, so write -> read -> write is byte-identical.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .geometry import HyperRectangle
from .lp import LpSolver, default_solver
from .network import MlpNetwork, load_network
from .reach import breach_lp, reach_lp_forward, rebreach_lp, volume_reduction
from .systems import LtiSystem
from .verify import Verdict, certify_backward, certify_forward, oracle_bp

SCENARIO_VERSION = 1
RESULT_VERSION = 1
MODES = ("breach", "rebreach", "forward")


class ScenarioError(ValueError):
    """Raised for unreadable, malformed or inconsistent scenario files."""


@dataclass(frozen=True)
class Scenario:
    system: LtiSystem
    network_path: str
    target: HyperRectangle
    initial_set: HyperRectangle
    horizon: int
    partition: tuple
    mode: str = "breach"
    obstacle: Optional[HyperRectangle] = None
    seed: int = 0
    oracle_samples: int = 0
    name: str = ""
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ScenarioError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.horizon < 1:
            raise ScenarioError("horizon must be at least 1")
        if any(int(v) < 1 for v in self.partition):
            raise ScenarioError("partition entries must be at least 1")
        n_x = self.system.n_x
        sets = [("target", self.target), ("initial_set", self.initial_set)]
        if self.obstacle is not None:
            sets.append(("obstacle", self.obstacle))
        for name, box in sets:
            if box.dim != n_x:
                raise ScenarioError(f"{name} has dimension {box.dim}, system state has {n_x}")
        if len(self.partition) != n_x:
            raise ScenarioError(f"partition has {len(self.partition)} entries, expected {n_x}")
        if self.oracle_samples < 0:
            raise ScenarioError("oracle_samples must be nonnegative")

    @property
    def avoid_set(self) -> HyperRectangle:
        return self.obstacle if self.obstacle is not None else self.target

    def load_network(self) -> MlpNetwork:
        path = Path(self.network_path)
        if not path.is_absolute():
            path = self.base_dir / path
        try:
            net = load_network(path)
        except (ValueError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"{path}: {exc}") from exc
        if net.input_dim != self.system.n_x or net.output_dim != self.system.n_u:
            raise ScenarioError(
                f"network maps {net.input_dim}->{net.output_dim}, "
                f"system needs {self.system.n_x}->{self.system.n_u}"
            )
        return net


def box_to_dict(box: HyperRectangle) -> dict:
    if box.is_empty:
        return {"empty": True, "dim": box.dim}
    return {"lower": box.lower.tolist(), "upper": box.upper.tolist()}


def box_from_dict(doc) -> HyperRectangle:
    if not isinstance(doc, dict):
        raise ScenarioError(f"expected a box object, got {type(doc).__name__}")
    if doc.get("empty"):
        return HyperRectangle.empty(int(doc["dim"]))
    try:
        return HyperRectangle(doc["lower"], doc["upper"])
    except KeyError as exc:
        raise ScenarioError(f"box is missing {exc}") from exc
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def scenario_to_dict(sc: Scenario) -> dict:
    s = sc.system
    return {
        "version": SCENARIO_VERSION,
        "name": sc.name,
        "system": {
            "A": s.A.tolist(),
            "B": s.B.tolist(),
            "c": s.c.tolist(),
            "u_lb": s.u_lb.tolist(),
            "u_ub": s.u_ub.tolist(),
            "t_s": s.t_s,
        },
        "network": sc.network_path,
        "target": box_to_dict(sc.target),
        "initial_set": box_to_dict(sc.initial_set),
        "obstacle": None if sc.obstacle is None else box_to_dict(sc.obstacle),
        "horizon": sc.horizon,
        "partition": list(sc.partition),
        "mode": sc.mode,
        "seed": sc.seed,
        "oracle_samples": sc.oracle_samples,
    }


def scenario_from_dict(doc: dict, base_dir: Path = Path(".")) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be an object")
    if doc.get("version") != SCENARIO_VERSION:
        raise ScenarioError(f"unsupported scenario version {doc.get('version')!r}")
    try:
        sd = doc["system"]
        system = LtiSystem(
            A=sd["A"], B=sd["B"], c=sd.get("c"), u_lb=sd["u_lb"], u_ub=sd["u_ub"],
            t_s=sd.get("t_s", 1.0),
        )
        obstacle = doc.get("obstacle")
        return Scenario(
            system=system,
            network_path=str(doc["network"]),
            target=box_from_dict(doc["target"]),
            initial_set=box_from_dict(doc["initial_set"]),
            horizon=int(doc["horizon"]),
            partition=tuple(int(v) for v in doc["partition"]),
            mode=doc.get("mode", "breach"),
            obstacle=None if obstacle is None else box_from_dict(obstacle),
            seed=int(doc.get("seed", 0)),
            oracle_samples=int(doc.get("oracle_samples", 0)),
            name=str(doc.get("name", "")),
            base_dir=Path(base_dir),
        )
    except KeyError as exc:
        raise ScenarioError(f"scenario is missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc)) from exc


def dumps_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def dumps_scenario(sc: Scenario) -> str:
    return dumps_json(scenario_to_dict(sc))


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return scenario_from_dict(doc, base_dir=path.parent)


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(sc))


# ---------------------------------------------------------------- execution

def verdict_to_dict(v: Verdict) -> dict:
    out = {"status": v.status, "mode": v.mode, "witness": None}
    if v.witness is not None:
        out["witness"] = {
            "step": v.witness.step,
            "estimate": box_to_dict(v.witness.estimate),
            "other": box_to_dict(v.witness.other),
        }
    return out


@dataclass
class Execution:
    """A finished pipeline run: the deterministic document plus wall times."""

    document: dict
    verdict: Verdict
    step_times: list
    run: object = None

    @property
    def total_time(self) -> float:
        return float(sum(self.step_times))

    def timing_document(self) -> dict:
        return {
            "version": RESULT_VERSION,
            "mode": self.document["mode"],
            "step_times": list(self.step_times),
            "total_time": self.total_time,
        }


def execute(sc: Scenario, mode: Optional[str] = None, oracle_samples: Optional[int] = None,
            solver: Optional[LpSolver] = None, net: Optional[MlpNetwork] = None) -> Execution:
    mode = mode or sc.mode
    if mode not in MODES:
        raise ScenarioError(f"mode must be one of {MODES}, got {mode!r}")
    n_oracle = sc.oracle_samples if oracle_samples is None else oracle_samples
    net = net if net is not None else sc.load_network()
    solver = solver or default_solver()
    sys = sc.system

    if mode == "forward":
        run = reach_lp_forward(sys, net, sc.initial_set, sc.horizon, sc.partition, solver)
        verdict = certify_forward(run, sc.avoid_set)
    elif mode == "breach":
        run = breach_lp(sys, net, sc.target, sc.horizon, sc.partition, solver)
        verdict = certify_backward(run, sc.initial_set)
    else:
        run = rebreach_lp(sys, net, sc.target, sc.horizon, sc.partition, solver)
        verdict = certify_backward(run, sc.initial_set)

    doc = {
        "version": RESULT_VERSION,
        "scenario": sc.name,
        "mode": mode,
        "verdict": verdict_to_dict(verdict),
        "horizon": sc.horizon,
        "partition": list(sc.partition),
        "target": box_to_dict(sc.target),
        "initial_set": box_to_dict(sc.initial_set),
        "obstacle": None if sc.obstacle is None else box_to_dict(sc.obstacle),
        "sets": [
            {"step": k, **box_to_dict(est)} for k, est in enumerate(run.estimates, start=1)
        ],
        "oracle": None,
    }
    if n_oracle and mode != "forward":
        report = oracle_bp(sys, net, sc.target, run, n=n_oracle, seed=sc.seed)
        doc["oracle"] = report.to_dict()
    return Execution(doc, verdict, list(run.step_times), run)


def compare(sc: Scenario, solver: Optional[LpSolver] = None) -> dict:
    """Run forward, BReach-LP and ReBReach-LP on one scenario and summarise."""
    net = sc.load_network()
    solver = solver or default_solver()
    results = {}
    for mode in ("forward", "breach", "rebreach"):
        t0 = time.perf_counter()
        ex = execute(sc, mode=mode, oracle_samples=0, solver=solver, net=net)
        results[mode] = (ex, time.perf_counter() - t0)
    breach_sets = results["breach"][0].run.estimates
    rebreach_sets = results["rebreach"][0].run.estimates
    report = {
        "version": RESULT_VERSION,
        "scenario": sc.name,
        "horizon": sc.horizon,
        "partition": list(sc.partition),
    }
    for mode, (ex, wall) in results.items():
        report[mode] = {
            "verdict": ex.verdict.status,
            "witness_step": None if ex.verdict.witness is None else ex.verdict.witness.step,
            "step_times": ex.step_times,
            "total_time": ex.total_time,
            "wall_time": wall,
        }
    report["volume_reduction_percent"] = volume_reduction(breach_sets, rebreach_sets)
    return report


def with_mode(sc: Scenario, mode: str) -> Scenario:
    return replace(sc, mode=mode)


def result_sets(doc: dict) -> list[HyperRectangle]:
    return [box_from_dict(s) for s in doc["sets"]]


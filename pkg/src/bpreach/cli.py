"""Command-line front end.

    bpreach run <scenario> [--mode breach|rebreach|forward] [--oracle N] [--out PATH]
    bpreach plot <result> --format svg|csv [--axes i,j] [--out PATH]
    bpreach compare <scenario> [--out PATH]
    bpreach examples <directory>

``run`` exits 0 when the verdict is safe, 2 when it is unknown and 1 on any
error. LP tolerances can be overridden with ``BPREACH_FEAS_TOL`` and
``BPREACH_PIVOT_TOL``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import fixtures
from .geometry import HyperRectangle
from .network import save_network
from .plot import PlotError, render_csv, render_svg
from .scenario import (
    MODES,
    Scenario,
    compare,
    dumps_json,
    execute,
    load_scenario,
    save_scenario,
)

EXIT_SAFE = 0
EXIT_ERROR = 1
EXIT_UNKNOWN = 2


def _timing_path(out: Path) -> Path:
    return out.with_name(out.stem + ".timing.json")


def _write(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    ex = execute(sc, mode=args.mode, oracle_samples=args.oracle)
    _write(dumps_json(ex.document), args.out)
    if args.out is not None:
        _timing_path(Path(args.out)).write_text(dumps_json(ex.timing_document()))
    print(
        f"mode={ex.document['mode']} verdict={ex.verdict.status} "
        f"steps={len(ex.document['sets'])} total_time={ex.total_time:.3f}s",
        file=sys.stderr,
    )
    return EXIT_SAFE if ex.verdict.safe else EXIT_UNKNOWN


def _parse_axes(text):
    if text is None:
        return None
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise PlotError(f"--axes expects 'i,j', got {text!r}")


def cmd_plot(args) -> int:
    doc = json.loads(Path(args.result).read_text())
    if args.format == "svg":
        text = render_svg(doc, _parse_axes(args.axes))
    else:
        text = render_csv(doc)
    out = args.out
    if out is None:
        out = Path(args.result).with_suffix("." + args.format)
    _write(text, out)
    return 0


def cmd_compare(args) -> int:
    sc = load_scenario(args.scenario)
    report = compare(sc)
    _write(dumps_json(report), args.out)
    return 0


def cmd_examples(args) -> int:
    """Write the reference scenarios and their networks into a directory."""
    root = Path(args.directory)
    root.mkdir(parents=True, exist_ok=True)
    save_network(fixtures.avoidance_policy(), root / "avoidance_policy.json")
    save_network(fixtures.double_integrator_policy(), root / "double_integrator_policy.json")
    robot = fixtures.ground_robot()
    for variant in ("bifurcating", "nominal"):
        save_scenario(Scenario(
            system=robot,
            network_path="avoidance_policy.json",
            target=fixtures.obstacle(),
            initial_set=fixtures.initial_set(variant),
            obstacle=fixtures.obstacle(),
            horizon=9,
            partition=(4, 4),
            mode="breach",
            seed=42,
            name=f"ground_robot_{variant}",
        ), root / f"ground_robot_{variant}.json")
    save_scenario(Scenario(
        system=fixtures.double_integrator(),
        network_path="double_integrator_policy.json",
        target=fixtures.double_integrator_target(),
        initial_set=HyperRectangle([-1.0, -1.0], [1.0, 1.0]),
        horizon=5,
        partition=(4, 4),
        mode="rebreach",
        seed=42,
        oracle_samples=100_000,
        name="double_integrator",
    ), root / "double_integrator.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpreach", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one verification pipeline on a scenario")
    p.add_argument("scenario")
    p.add_argument("--mode", choices=MODES, default=None, help="override the scenario's mode")
    p.add_argument("--oracle", type=int, default=None, metavar="N",
                   help="Monte-Carlo samples for the soundness oracle (backward modes)")
    p.add_argument("--out", default=None, help="result file (default: stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="render a result document")
    p.add_argument("result")
    p.add_argument("--format", choices=("svg", "csv"), required=True)
    p.add_argument("--axes", default=None, help="projection axes 'i,j'")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("compare", help="forward vs backward on the same scenario")
    p.add_argument("scenario")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("examples", help="write the reference scenarios to a directory")
    p.add_argument("directory")
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, TypeError, RuntimeError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"bpreach: error: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

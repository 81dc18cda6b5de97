"""Command-line interface.

Subcommands: validate (parse only), run (full pipeline), scan
(full-scan oracle scoring), emit (re-emit files from a saved
detection_report.json). Exit codes: 0 success, 1 validation error,
2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .runner import EMIT_SELECTIONS, RunnerError, emit, run
from .scenario import ScenarioError, load_scenario
from .topology import TopologyError, build_topology

_FORMAT_SELECTIONS = {
    "csv": ("summary", "envelope", "layers", "edges"),
    "json": ("report",),
    "all": EMIT_SELECTIONS,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lgtbids",
        description="Layer-wise graph-theory intrusion detection simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="parse and validate a scenario file")
    p_validate.add_argument("--scenario", required=True, type=Path)

    for name, help_text in (
        ("run", "run the scenario and emit results"),
        ("scan", "run with full-scan oracle scoring (every node, no screening)"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--trials", type=int, default=None, help="override scenario trials")
        p.add_argument("--seed", type=int, default=None, help="override scenario seed")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--format", choices=sorted(_FORMAT_SELECTIONS), default="all")
        p.add_argument(
            "--only",
            default=None,
            help="comma-separated subset of outputs: " + ",".join(EMIT_SELECTIONS),
        )

    p_emit = sub.add_parser("emit", help="re-emit files from a saved report document")
    p_emit.add_argument("--report", required=True, type=Path)
    p_emit.add_argument("--out", required=True, type=Path)
    p_emit.add_argument("--format", choices=sorted(_FORMAT_SELECTIONS), default="all")
    p_emit.add_argument("--only", default=None)
    return parser


def _selection(args) -> tuple[str, ...]:
    if args.only:
        return tuple(token.strip() for token in args.only.split(",") if token.strip())
    return tuple(_FORMAT_SELECTIONS[args.format])


def _cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    build_topology(scenario.nodes, scenario.edges)
    print(
        f"OK: {len(scenario.nodes)} nodes, {len(scenario.edges)} edges, "
        f"{scenario.trials} trials, seed {scenario.seed}"
    )
    return 0


def _cmd_run(args, mode: str) -> int:
    scenario = load_scenario(args.scenario)
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        scenario = dataclasses.replace(scenario, **overrides)
    artifacts = run(scenario, threads=args.threads, mode=mode)
    written = emit(artifacts, args.out, selection=_selection(args))
    overall = artifacts.summary.overall
    def fmt(v):
        return "n/a" if v is None else f"{100 * v:.2f}%"
    print(
        f"{scenario.trials} trials done: accuracy {fmt(overall.accuracy)}, "
        f"detection rate {fmt(overall.detection_rate)}, far {fmt(overall.far)}; "
        f"mean detection time {artifacts.summary.mean_detection_seconds * 1e3:.3f} ms"
    )
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_emit(args) -> int:
    doc = json.loads(args.report.read_text(encoding="utf-8"))
    for path in emit(doc, args.out, selection=_selection(args)):
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "run":
            return _cmd_run(args, "screen")
        if args.command == "scan":
            return _cmd_run(args, "scan")
        if args.command == "emit":
            return _cmd_emit(args)
        raise AssertionError(f"unhandled command {args.command}")
    except (ScenarioError, TopologyError) as exc:
        print(f"validation error:\n{exc}", file=sys.stderr)
        return 1
    except (RunnerError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()

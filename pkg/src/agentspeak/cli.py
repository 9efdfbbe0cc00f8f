"""Command-line front end: ``agentspeak check | run | trace-diff``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .agent import InvariantViolation, SuspensionMonitor
from .syntax import ParseError, parse_agent
from .system import ConfigError, RunResult, load_scenario, run

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNMET = 2


@dataclass
class RunReport:
    cycles_executed: int
    stop_reason: str
    snapshots: dict[str, list[str]] = field(default_factory=dict)
    trace_path: str | None = None

    @classmethod
    def from_result(cls, result: RunResult, trace_path: str | None = None) -> RunReport:
        snaps = {name: result.state.agents[name].beliefs.snapshot() for name in sorted(result.state.agents)}
        return cls(result.cycles, result.stop_reason, snaps, trace_path)

    def snapshot_text(self) -> str:
        out = []
        for name, lines in self.snapshots.items():
            out.append(f"# {name}")
            out.extend(lines)
        return "\n".join(out) + "\n"

    def summary(self) -> str:
        return f"cycles={self.cycles_executed} stop_reason={self.stop_reason}"


def bundled_scenario(name: str) -> Path | None:
    """Path of a scenario shipped with the package, by bare name (e.g. ``firefighter``)."""
    candidate = resources.files("agentspeak") / "programs" / f"{name}.yaml"
    return Path(str(candidate)) if candidate.is_file() else None


def cmd_check(path: str) -> int:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"{path}: {exc.strerror}", file=sys.stderr)
        return EXIT_ERROR
    try:
        prog = parse_agent(text, Path(path).stem)
    except ParseError as exc:
        print(f"{path}:{exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"{path}: ok ({len(prog.beliefs)} beliefs, {len(prog.plans)} plans)")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    path = Path(args.scenario)
    if not path.exists():
        path = bundled_scenario(args.scenario) or path
    try:
        scenario = load_scenario(path)
    except (OSError, ConfigError) as exc:
        print(f"{args.scenario}: {exc}", file=sys.stderr)
        return EXIT_ERROR

    state = scenario.state
    if args.seed is not None:
        state = replace(state, seed=args.seed)
    cycles = args.cycles if args.cycles is not None else (scenario.max_cycles or 1000)
    monitor = SuspensionMonitor() if args.check_invariants else None
    try:
        result = run(state, cycles, scenario.stop_condition(), scheduler=args.scheduler,
                     monitor=monitor, stop_on_quiescence=args.stop_on_quiescence)
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_ERROR

    trace = "".join(line + "\n" for line in result.trace)
    if args.trace:
        Path(args.trace).write_text(trace, encoding="utf-8")
    else:
        sys.stdout.write(trace)
    report = RunReport.from_result(result, args.trace)
    if args.snapshot:
        Path(args.snapshot).write_text(report.snapshot_text(), encoding="utf-8")
    print(report.summary(), file=sys.stderr)
    if scenario.stop_when and result.stop_reason != "condition_met":
        return EXIT_UNMET
    return EXIT_OK


def first_divergence(a: list[str], b: list[str]) -> int | None:
    """Index of the first differing line, or None if the traces are equal."""
    for k, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return k
    return None if len(a) == len(b) else min(len(a), len(b))


def cmd_trace_diff(path_a: str, path_b: str) -> int:
    try:
        a = Path(path_a).read_text(encoding="utf-8").splitlines()
        b = Path(path_b).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        print(f"{exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_ERROR
    k = first_divergence(a, b)
    if k is None:
        print("equal")
        return EXIT_OK
    print(f"first divergence at line {k + 1}")
    print(f"- {a[k] if k < len(a) else '<end of trace>'}")
    print(f"+ {b[k] if k < len(b) else '<end of trace>'}")
    return EXIT_UNMET


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agentspeak", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="parse an agent program and report errors")
    check.add_argument("program")

    r = sub.add_parser("run", help="run a scenario file (or a bundled scenario by name)")
    r.add_argument("scenario")
    r.add_argument("--cycles", type=int, default=None, help="maximum number of system cycles")
    r.add_argument("--seed", type=int, default=None, help="seed for the random scheduler")
    r.add_argument("--scheduler", choices=("lex", "random"), default="lex")
    r.add_argument("--trace", metavar="PATH", help="write the rule trace here instead of stdout")
    r.add_argument("--snapshot", metavar="PATH", help="write final belief bases here")
    r.add_argument("--stop-on-quiescence", action="store_true")
    r.add_argument("--check-invariants", action="store_true",
                   help="verify suspension and resumption invariants on every step")

    d = sub.add_parser("trace-diff", help="compare two trace files line by line")
    d.add_argument("trace_a")
    d.add_argument("trace_b")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "check":
        return cmd_check(args.program)
    if args.command == "run":
        if args.cycles is not None and args.cycles < 0:
            print("--cycles must be non-negative", file=sys.stderr)
            return EXIT_ERROR
        return cmd_run(args)
    return cmd_trace_diff(args.trace_a, args.trace_b)


if __name__ == "__main__":
    sys.exit(main())

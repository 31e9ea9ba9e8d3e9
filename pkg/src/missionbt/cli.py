"""Command line: run, bench, validate, replay."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from missionbt.bench import dataset_root, playbook_path, run_bench
from missionbt.engine import load_trace, replay, run_mission
from missionbt.missionspec import MissionError, load_mission_file
from missionbt.orchestrator import LiveProvider, ProviderError, ScriptedProvider


def _fail(message: str, code: int = 2) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_run(args: argparse.Namespace) -> int:
    try:
        spec = load_mission_file(args.mission)
    except FileNotFoundError:
        return _fail(f"mission file not found: {args.mission}")
    except MissionError as exc:
        return _fail(f"invalid mission: {exc}")
    template = not args.no_template
    if args.provider == "live":
        provider = LiveProvider()
    else:
        path = Path(args.playbook) if args.playbook else playbook_path(args.mission, spec.mission_id, template)
        try:
            provider = ScriptedProvider.from_file(path)
        except FileNotFoundError:
            return _fail(f"playbook not found: {path}")
        except (ProviderError, ValueError) as exc:
            return _fail(f"invalid playbook {path}: {exc}")
    config = spec.sim
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.max_ticks is not None:
        config = replace(config, max_ticks=args.max_ticks)
    report = run_mission(spec, provider, config, use_template=template,
                         price_in=args.price_in, price_out=args.price_out)
    out_dir = Path(args.out) if args.out else Path("runs") / spec.mission_id
    paths = report.write(out_dir)
    if args.plot:
        from missionbt.plots import plot_trace

        plot_trace(report.trace, out_dir)
    print(
        f"{spec.mission_id}: {report.reason.value} after {report.ticks} ticks "
        f"({report.sim_time:.1f} s simulated), tokens in/out {report.usage.input_tokens}/"
        f"{report.usage.output_tokens}, errors {report.usage.errors}"
    )
    print(f"artifacts in {paths['report'].parent}")
    if not report.success:
        print(f"mission failed: {report.reason.value}: {report.detail}", file=sys.stderr)
        return 1
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    modes = (True, False) if args.both_template_modes else (not args.no_template,)
    result = run_bench(args.dataset, args.repeats, template_modes=modes, provider=args.provider,
                       price_in=args.price_in, price_out=args.price_out)
    print(result.render())
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(result.to_json())
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        spec = load_mission_file(args.mission)
    except FileNotFoundError:
        return _fail(f"mission file not found: {args.mission}")
    except MissionError as exc:
        for d in exc.diagnostics or [str(exc)]:
            print(d)
        return 1
    print(f"{spec.mission_id}: ok ({len(spec.world.robots)} robots, {len(spec.world.objects)} objects, "
          f"{len(spec.world.regions)} regions)")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        trace = load_trace(args.trace)
    except FileNotFoundError:
        return _fail(f"trace not found: {args.trace}")
    except json.JSONDecodeError as exc:
        return _fail(f"trace is not line-delimited JSON: {exc}")
    verdict = replay(trace, args.digest)
    if verdict.match:
        print(f"match: {verdict.ticks} ticks, digest {verdict.digest}")
        return 0
    print(f"mismatch at tick {verdict.first_divergent_tick}: {verdict.detail}")
    return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="missionbt", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def prices(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--price-in", type=float, default=0.0, help="cost per input token")
        sp.add_argument("--price-out", type=float, default=0.0, help="cost per output token")

    run = sub.add_parser("run", help="execute one mission")
    run.add_argument("mission")
    run.add_argument("--provider", choices=("mock", "live"), default="mock")
    run.add_argument("--playbook", help="scripted responses (default: ../playbooks/<id>[.raw].yaml)")
    run.add_argument("--no-template", action="store_true", help="skip standardization, analyze the raw text")
    run.add_argument("--seed", type=int)
    run.add_argument("--max-ticks", type=int)
    run.add_argument("--plot", action="store_true", help="write trajectory and coverage figures")
    run.add_argument("--out", help="output directory (default: runs/<id>)")
    prices(run)
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="run the dataset and print the summary table")
    bench.add_argument("dataset", nargs="?", default=str(dataset_root()))
    bench.add_argument("--repeats", type=int, default=5)
    bench.add_argument("--provider", choices=("mock", "live"), default="mock")
    bench.add_argument("--both-template-modes", action="store_true")
    bench.add_argument("--no-template", action="store_true")
    bench.add_argument("--out", help="write the JSON report here")
    prices(bench)
    bench.set_defaults(func=cmd_bench)

    val = sub.add_parser("validate", help="check a mission file")
    val.add_argument("mission")
    val.set_defaults(func=cmd_validate)

    rep = sub.add_parser("replay", help="re-execute a trace and compare")
    rep.add_argument("trace")
    rep.add_argument("--digest", help="expected trace digest")
    rep.set_defaults(func=cmd_replay)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

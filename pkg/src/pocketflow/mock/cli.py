"""Command line front end for the bundled mock services.

``pocketflow-mock serve`` starts a workflow repository and an execution
service on loopback and prints one line per service with its base URI, so a
parent process (or a shell) can capture the addresses:

    repo: http://127.0.0.1:41234
    exec: http://127.0.0.1:41235

``pocketflow-mock write-fixtures DIR`` dumps the built-in workflow corpus in
the directory layout ``serve --repo-fixtures`` loads, as a starting point for
a custom corpus.
"""

from __future__ import annotations

import argparse
import sys
import time
from datetime import timedelta
from pathlib import Path

from pocketflow.durations import parse_duration
from pocketflow.errors import BindFailed, UnsupportedSchema
from pocketflow.httpd import FaultPolicy, split_bind
from pocketflow.mock.exec_server import ExecutionScript, MockExecServer
from pocketflow.mock.fixtures import load_fixture_dir, standard_fixtures, write_fixture_dir
from pocketflow.mock.repo_server import MockRepoServer


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pocketflow-mock",
        description="Run local stand-ins for the workflow repository and execution service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="start both services and block until interrupted")
    serve.add_argument(
        "--bind",
        default="127.0.0.1:0",
        help="HOST:PORT; port 0 picks free ports, a fixed port P uses P and P+1",
    )
    serve.add_argument(
        "--repo-fixtures",
        metavar="DIR",
        help="serve workflows from this directory instead of the built-in corpus",
    )
    serve.add_argument(
        "--retention",
        default="24h",
        help="how long finished runs stay retrievable (default 24h)",
    )
    serve.add_argument(
        "--latency", default="0ms", help="added latency before every response"
    )
    serve.add_argument(
        "--fail-rate",
        type=float,
        default=0.0,
        help="probability in [0,1] that a request is answered 503",
    )
    serve.add_argument("--seed", type=int, default=0, help="seed for fault injection")
    serve.add_argument(
        "--script-duration",
        default="0ms",
        help="how long a started run stays Running before it settles",
    )
    serve.add_argument(
        "--script-outcome",
        default="Complete",
        help='"Complete", "Fail", or "Fail:reason text"',
    )
    serve.add_argument(
        "--max-upload",
        type=int,
        default=8 * 1024 * 1024,
        help="input file size limit in bytes",
    )
    serve.set_defaults(func=cmd_serve)

    dump = sub.add_parser("write-fixtures", help="write the built-in corpus to a directory")
    dump.add_argument("dir", metavar="DIR")
    dump.set_defaults(func=cmd_write_fixtures)
    return parser


def _parse_outcome(text: str) -> ExecutionScript:
    outcome, _, reason = text.partition(":")
    if outcome not in ("Complete", "Fail"):
        raise ValueError(f'script outcome must be "Complete" or "Fail[:reason]", got {text!r}')
    if outcome == "Fail":
        return ExecutionScript(outcome="Fail", reason=reason or "scripted failure")
    return ExecutionScript()


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        host, port = split_bind(args.bind)
        retention = timedelta(seconds=parse_duration(args.retention))
        latency = parse_duration(args.latency)
        if not 0.0 <= args.fail_rate <= 1.0:
            raise ValueError("--fail-rate must be within [0, 1]")
        script = _parse_outcome(args.script_outcome)
        script = ExecutionScript(
            duration=parse_duration(args.script_duration),
            outcome=script.outcome,
            reason=script.reason,
        )
        fixtures = (
            load_fixture_dir(Path(args.repo_fixtures))
            if args.repo_fixtures
            else standard_fixtures()
        )
        if args.repo_fixtures and not len(fixtures):
            raise ValueError(f"no fixtures found under {args.repo_fixtures}")
    except (ValueError, OSError, UnsupportedSchema) as err:
        print(f"pocketflow-mock: {err}", file=sys.stderr)
        return 1

    # separate seeds so one service's draw sequence never shifts the other's
    def fault(seed_offset: int) -> FaultPolicy | None:
        if latency <= 0 and args.fail_rate <= 0:
            return None
        return FaultPolicy(
            added_latency=latency, failure_rate=args.fail_rate, seed=args.seed + seed_offset
        )

    try:
        repo = MockRepoServer(fixtures=fixtures, host=host, port=port, fault_policy=fault(0))
    except BindFailed as err:
        print(f"pocketflow-mock: {err}", file=sys.stderr)
        return 1
    try:
        exec_server = MockExecServer(
            host=host,
            port=port + 1 if port else 0,
            retention=retention,
            fault_policy=fault(1),
            script=script,
            max_upload=args.max_upload,
        )
    except BindFailed as err:
        repo.close()
        print(f"pocketflow-mock: {err}", file=sys.stderr)
        return 1

    print(f"repo: {repo.start()}", flush=True)
    print(f"exec: {exec_server.start()}", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        exec_server.close()
        repo.close()
    return 0


def cmd_write_fixtures(args: argparse.Namespace) -> int:
    root = Path(args.dir)
    root.mkdir(parents=True, exist_ok=True)
    fixtures = standard_fixtures()
    write_fixture_dir(fixtures, root)
    print(f"wrote {len(fixtures)} workflow versions under {root}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()

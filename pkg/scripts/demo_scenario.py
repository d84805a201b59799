#!/usr/bin/env python3
"""Walk the headline scenario against in-process mock services.

Find a workflow, run it with one input, watch it finish, download the
outputs, then rerun it from remembered inputs. Every CLI invocation is
echoed before it runs, so the output doubles as usage documentation.

    python3 scripts/demo_scenario.py
"""

import shlex
import sys
import tempfile

from pocketflow.cli import main as cli_main
from pocketflow.mock.exec_server import MockExecServer
from pocketflow.mock.repo_server import MockRepoServer


def main() -> int:
    repo = MockRepoServer()
    execs = MockExecServer()
    repo.start()
    execs.start()
    data_root = tempfile.mkdtemp(prefix="pocketflow-demo-")
    base = ["--repo", repo.base_uri, "--exec", execs.base_uri, "--data-root", data_root]

    def cli(*args: str) -> int:
        print(f"\n$ pocketflow {shlex.join(args)}")
        return cli_main(base + list(args))

    try:
        steps = [
            ("search", "kegg"),
            ("show", "2659@5"),
            ("fav", "add", "2659@5"),
            ("run", "2659@5", "--input", "gi=84579909", "--wait"),
            ("rerun", "2659@5"),
            ("history",),
            ("fav", "list"),
        ]
        for step in steps:
            code = cli(*step)
            if code != 0:
                print(f"step failed with exit code {code}", file=sys.stderr)
                return code
    finally:
        execs.close()
        repo.close()
    print(f"\nlocal state kept in {data_root}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

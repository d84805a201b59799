#!/usr/bin/env python3
"""Run the whole stack locally: mock repository, mock execution service,
and the gateway wired to them.

    python3 scripts/serve_all.py [--port 7711] [--data-root DIR]

The repository listens on --port, the execution service on the next port,
and the gateway UI on the one after that. Ctrl-C stops everything.
"""

import argparse
import sys
import tempfile
import time
from pathlib import Path

from pocketflow.config import Config
from pocketflow.gateway import Gateway, find_static_dir
from pocketflow.mock.exec_server import MockExecServer
from pocketflow.mock.repo_server import MockRepoServer


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--port", type=int, default=7711, help="repository port (default 7711)")
    parser.add_argument("--data-root", type=Path, default=None,
                        help="where to keep history and favourites (default: a temp dir)")
    args = parser.parse_args(argv)

    data_root = args.data_root or Path(tempfile.mkdtemp(prefix="pocketflow-"))
    repo = MockRepoServer(port=args.port)
    execs = MockExecServer(port=args.port + 1)
    repo.start()
    execs.start()
    gateway = Gateway(
        Config(repo_base=repo.base_uri, exec_base=execs.base_uri, data_root=data_root),
        bind=f"127.0.0.1:{args.port + 2}",
        static_dir=find_static_dir(),
    )
    ui = gateway.start()

    print(f"repo: {repo.base_uri}")
    print(f"exec: {execs.base_uri}")
    print(f"ui:   {ui}/")
    print(f"data: {data_root}", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        gateway.close()
        execs.close()
        repo.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Regenerate the frozen wire transcript in tests/golden/.

Run this only after a deliberate wire protocol change, then review the diff:
the conformance suite treats the frozen copy as the contract.

    python3 scripts/record_golden.py
"""

import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "tests"))

import wiredrive  # noqa: E402


def main() -> int:
    target = REPO_ROOT / "tests" / "golden" / "wire_transcript.txt"
    transcript = wiredrive.run_tour()
    before = target.read_text(encoding="utf-8") if target.exists() else None
    target.write_text(transcript, encoding="utf-8")
    if before is None:
        print(f"wrote {target} ({len(transcript)} bytes)")
    elif before == transcript:
        print(f"unchanged {target}")
    else:
        print(f"UPDATED {target} — review the diff before committing")
    return 0


if __name__ == "__main__":
    sys.exit(main())

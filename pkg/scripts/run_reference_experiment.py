#!/usr/bin/env python3
"""Reproduce the full reference experiment: three schemes, six seeds, one sweep.

Equivalent to

    dinl run --out results
    dinl sweep --out results

but kept as a script so the whole study is one command.  Everything is
seeded; rerunning writes byte-identical CSVs.
"""

from __future__ import annotations

import sys

from dinl.cli import main


def run() -> int:
    out = sys.argv[1] if len(sys.argv) > 1 else "results"
    code = main(["run", "--out", out])
    if code != 0:
        return code
    return main(["sweep", "--out", out])


if __name__ == "__main__":
    raise SystemExit(run())

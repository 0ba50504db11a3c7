#!/usr/bin/env python3
"""Run the full reproduction suite and print the report.

Equivalent to ``qcsym verify-paper``; kept as a script so the suite can be
launched without installing the console entry point.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from qcsym.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main(["verify-paper", *sys.argv[1:]]))

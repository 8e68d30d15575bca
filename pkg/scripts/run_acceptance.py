#!/usr/bin/env python
"""
Run the acceptance criteria without the CLI plumbing.

Usage:
    python scripts/run_acceptance.py
    python scripts/run_acceptance.py --only onshell_law,bulk_law --threads 4
"""

import argparse
import logging
import sys
from pathlib import Path

# Add parent directory to path so we can import app
sys.path.insert(0, str(Path(__file__).parent.parent))

from app.errors import LabError
from app.services.acceptance import CRITERIA, run_all
from utils.config import thread_cap


def main():
    parser = argparse.ArgumentParser(
        description="Run the Bergman density acceptance criteria"
    )
    parser.add_argument(
        "--only",
        help=f"comma separated subset of: {', '.join(CRITERIA)}",
        required=False
    )
    parser.add_argument(
        "--threads",
        type=int,
        help="parallel criteria (default BERGMAN_THREADS)",
        required=False
    )
    parser.add_argument("-v", "--verbose", action="store_true")

    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    names = [n.strip() for n in args.only.split(",")] if args.only else None
    try:
        report = run_all(names, threads=thread_cap(args.threads))
    except LabError as exc:
        print(f"❌ {exc.detail}")
        return False

    for criterion in report.criteria:
        mark = "✅" if criterion.passed else "❌"
        print(f"{mark} {criterion.name}: {criterion.detail}")
    print(f"{'✅ all criteria passed' if report.passed else '❌ some criteria failed'}")
    return report.passed


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)

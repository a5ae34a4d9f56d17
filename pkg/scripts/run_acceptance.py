#!/usr/bin/env python3
"""Run the acceptance suite and print one line per criterion.

Equivalent to `pytest tests/test_acceptance.py -q -s`, packaged as a plain
script so the criterion lines land on stdout without pytest in front.
"""

import subprocess
import sys
from pathlib import Path

if __name__ == "__main__":
    root = Path(__file__).resolve().parent.parent
    raise SystemExit(subprocess.call(
        [sys.executable, "-m", "pytest", "tests/test_acceptance.py",
         "-q", "-s", "--no-header"], cwd=root))

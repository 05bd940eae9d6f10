"""
main.py

This script serves as the entry point for auditing secret-key distillation codes.
It is equivalent to `python -m skaudit`.

Functionality:
    - source-info: prints H(X|Z), sigma^2 and rho of a source.
    - sweep: evaluates codes over (n, M, seed) and writes CSV files and a run manifest.
    - delta: prints the optimal distance to a uniform key and its M-curve.
    - bounds: prints the single-shot, Gaussian and partition bounds for one b.
    - verify: runs the inequality suite and exits 1 on any violation.
    - plot: renders sweep CSV files as SVG plots.
"""

import sys

from skaudit.cli import main


if __name__ == "__main__":
    sys.exit(main())

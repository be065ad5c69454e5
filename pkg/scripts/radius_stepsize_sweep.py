#!/usr/bin/env python3
"""Grid the ball radius against the step size and record the final loss.

Thin wrapper over the sweep subcommand with defaults tuned for the bumpy
one-dimensional test landscape; pass --task mlp (plus a data directory)
to grid validation accuracy of the network benchmark instead.
"""
import sys
from pathlib import Path

from rollball.cli import main as cli_main

DEFAULTS = [
    "sweep",
    "--landscape", "affine_bump",
    "--theta0", "0.0",
    "--rho-min", "0.1", "--rho-max", "10.0", "--rho-count", "7",
    "--eta-scale-min", "0.01", "--eta-scale-max", "10.0", "--eta-count", "7",
    "--steps", "100",
    "--seed", "0",
    "--out", "results/radius_stepsize_sweep.csv",
]


def main() -> int:
    # user flags append after the defaults; argparse keeps the last occurrence
    args = DEFAULTS + sys.argv[1:]
    out = args[len(args) - 1 - args[::-1].index("--out") + 1]
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    return cli_main(args)


if __name__ == "__main__":
    raise SystemExit(main())

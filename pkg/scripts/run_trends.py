"""Sweep the drop-rate trend families and tabulate theta per stage.

One sweep per family (buffer cap, SU count, channel count, arrival rate,
mode), each writing ``<out>/<param>/sweep.csv`` ready for the trend plots.
"""

import argparse
from pathlib import Path

from jamauction.harness import ExperimentConfig, sweep

FAMILIES = (
    ("buffer_cap", [1, 2, 3]),
    ("n_sus", [2, 3, 4]),
    ("n_channels", [2, 3]),
    ("mean_arrivals", [0.25, 0.5, 1.0]),
    ("mode", ["pd", "pc"]),
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("results/trends"))
    parser.add_argument("--steps", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--reps", type=int, default=20)
    args = parser.parse_args(argv)

    config = ExperimentConfig(horizon=args.steps, seed=args.seed, reps=args.reps)
    for param, values in FAMILIES:
        path = sweep(config, param, values, args.out / param)
        print(f"swept {param} over {values}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

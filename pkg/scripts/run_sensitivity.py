"""Sweep the learning parameters and tabulate stages-to-criterion.

Writes ``<out>/epsilon/sweep.csv`` and ``<out>/beta/sweep.csv``; the
stages_to_criterion column, averaged over replications, is the convergence
speed diagnostic the sensitivity plots show.
"""

import argparse
from pathlib import Path

from jamauction.harness import ExperimentConfig, sweep

GRIDS = (
    ("epsilon", [0.5, 1.0, 2.0]),
    ("beta", [0.1, 0.5, 1.0]),
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("results/sensitivity"))
    parser.add_argument("--steps", type=int, default=50_000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--reps", type=int, default=10)
    args = parser.parse_args(argv)

    config = ExperimentConfig(horizon=args.steps, seed=args.seed, reps=args.reps)
    for param, values in GRIDS:
        path = sweep(config, param, values, args.out / param)
        print(f"swept {param} over {values}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

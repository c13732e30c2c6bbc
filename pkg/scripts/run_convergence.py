"""Run the convergence experiments: one long PD run per channel count.

Each run is emitted under ``<out>/M=<channels>/`` so the figure tool can
plot the normalized cumulative value curves side by side.
"""

import argparse
from pathlib import Path

from jamauction.harness import (
    ExperimentConfig,
    emit,
    meets_convergence_criterion,
    run_replications,
    stages_to_criterion,
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("results/convergence"))
    parser.add_argument("--steps", type=int, default=50_000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--channels", type=int, nargs="+", default=[2, 3])
    parser.add_argument("--mode", choices=("pc", "pd"), default="pd")
    args = parser.parse_args(argv)

    for m in args.channels:
        config = ExperimentConfig(
            n_channels=m, horizon=args.steps, seed=args.seed, mode=args.mode
        )
        records = run_replications(config)
        emit(records, args.out / f"M={m}", config)
        record = records[0]
        print(
            f"M={m}: stages_to_criterion={stages_to_criterion(record.cum_value)} "
            f"meets={meets_convergence_criterion(record.cum_value)} "
            f"theta_per_stage={record.theta_per_stage:.4f}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

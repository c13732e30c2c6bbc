"""Command line front end: simulate, sweep and verify."""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import matgame, oracles
from .auction import max_weight_allocation, pivot_payment
from .envsim import OccupancyModel, buffer_transition_pmf, step_occupancy
from .harness import ExperimentConfig, emit, run_replications, sweep


def _load_config(path: Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return ExperimentConfig.from_json(Path(path).read_text())


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    overrides = {}
    if args.mode is not None:
        overrides["mode"] = args.mode
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.steps is not None:
        overrides["horizon"] = args.steps
    if getattr(args, "reps", None) is not None:
        overrides["reps"] = args.reps
    if overrides:
        config = replace(config, **overrides)
    problems = config.validate()
    if problems:
        raise SystemExit("invalid config: " + "; ".join(problems))
    return config


def _cmd_simulate(args) -> int:
    config = _apply_overrides(_load_config(args.config), args)
    records = run_replications(config)
    paths = emit(records, args.out, config)
    theta = np.mean([r.theta_per_stage for r in records])
    print(f"wrote {len(paths['runs'])} run file(s) under {args.out}")
    print(f"mode={config.mode} seed={config.seed} horizon={config.horizon} "
          f"theta_per_stage={theta:.6f}")
    return 0


def _parse_values(param: str, raw: str) -> list:
    spec = {f.name: f for f in fields(ExperimentConfig)}
    if param not in spec:
        raise SystemExit(f"unknown config field {param!r}")
    out = []
    for token in raw.split(","):
        token = token.strip()
        try:
            value = int(token)
        except ValueError:
            try:
                value = float(token)
            except ValueError:
                value = token
        out.append(value)
    return out


def _cmd_sweep(args) -> int:
    config = _apply_overrides(_load_config(args.config), args)
    values = _parse_values(args.param, args.values)
    path = sweep(config, args.param, values, args.out)
    print(f"swept {args.param} over {values}; wrote {path}")
    return 0


def _check(name: str, ok: bool, detail: str, failures: list) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    if not ok:
        failures.append(name)


def _cmd_verify(args) -> int:
    """Run the oracle suites against the production implementations."""
    rng = np.random.default_rng(20240817)
    failures: list[str] = []
    n_games = 50 if args.quick else 200
    n_reduce = 30 if args.quick else 100
    n_alloc = 50 if args.quick else 200
    mc_samples = 20_000 if args.quick else 100_000

    start = time.perf_counter()
    worst = 0.0
    for _ in range(n_games):
        shape = (int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        payoff = rng.uniform(0.1, 10.0, size=shape)
        got = matgame.solve(payoff)
        want = oracles.support_enumeration_value(payoff)
        worst = max(worst, abs(got.value - want), got.duality_gap(payoff))
    _check(
        "zero-sum solver vs support enumeration",
        worst < 1e-6,
        f"{n_games} random games, worst residual {worst:.2e} ({time.perf_counter()-start:.1f}s)",
        failures,
    )

    worst = 0.0
    worst_rows = 0
    for _ in range(n_reduce):
        l1 = int(rng.integers(5, 21))
        l2 = int(rng.integers(2, 5))
        payoff = rng.uniform(0.1, 10.0, size=(l1, l2))
        reduced, report = matgame.reduce_rows(payoff)
        worst_rows = max(worst_rows, reduced.shape[0] - l2)
        delta = abs(matgame.solve(payoff).value - matgame.solve(reduced).value)
        worst = max(worst, delta)
    _check(
        "row reduction preserves value",
        worst < 1e-6 and worst_rows <= 0,
        f"{n_reduce} random games, worst |dv| {worst:.2e}, rows never exceed columns",
        failures,
    )

    bad = 0
    for _ in range(n_alloc):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        bids = rng.uniform(0.0, 5.0, size=(n, m))
        idle = tuple(range(10, 10 + m))
        sus = tuple(range(n))
        alloc, welfare = max_weight_allocation(bids, idle, sus)
        pairs, want = oracles.brute_force_allocation(bids, idle, sus)
        if abs(welfare - want) > 1e-9 or alloc.pairs != pairs:
            bad += 1
    _check(
        "matching vs brute-force enumeration",
        bad == 0,
        f"{n_alloc} random instances, {bad} mismatches",
        failures,
    )

    bad = 0
    for _ in range(n_alloc):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        bids = rng.uniform(0.0, 5.0, size=(n, m))
        idle = tuple(range(m))
        sus = tuple(range(n))
        alloc, _ = max_weight_allocation(bids, idle, sus)
        got = pivot_payment(bids, alloc, idle, sus)
        want = oracles.brute_force_payment(bids, alloc.pairs, idle, sus)
        if np.max(np.abs(got - want)) > 1e-9:
            bad += 1
    _check(
        "pivot payments vs brute force",
        bad == 0,
        f"{n_alloc} random instances, {bad} mismatches",
        failures,
    )

    pmf = buffer_transition_pmf(0, 0, 0.5, 2)
    mc = oracles.monte_carlo_buffer_pmf(0, 0, 0.5, 2, mc_samples, rng)
    l1 = float(np.abs(pmf - mc).sum())
    _check(
        "buffer transition pmf vs Monte Carlo",
        l1 < 0.02,
        f"L1 distance {l1:.4f} at {mc_samples} samples",
        failures,
    )

    model = OccupancyModel(busy_to_idle=np.full(100, 0.3), idle_to_busy=np.full(100, 0.4))
    state = np.zeros(100, dtype=np.int64)
    steps = 2_000 if args.quick else 12_000
    burn = steps // 6
    idle_time = 0
    total = 0
    for t in range(steps):
        state = step_occupancy(state, model, rng)
        if t >= burn:
            idle_time += int(state.sum())
            total += state.shape[0]
    frac = idle_time / total
    _check(
        "occupancy stationary idle fraction",
        abs(frac - 3.0 / 7.0) < 0.01,
        f"measured {frac:.4f}, expected {3.0/7.0:.4f}",
        failures,
    )

    if failures:
        print(f"{len(failures)} check(s) failed: {', '.join(failures)}")
        return 1
    print("all checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jamauction",
        description="Seeded anti-jamming spectrum auction simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one experiment and emit CSV")
    sim.add_argument("--config", type=Path, default=None, help="JSON config file")
    sim.add_argument("--mode", choices=("pc", "pd"), default=None)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--steps", type=int, default=None, help="horizon override")
    sim.add_argument("--reps", type=int, default=None)
    sim.add_argument("--out", type=Path, required=True)
    sim.set_defaults(func=_cmd_simulate)

    sw = sub.add_parser("sweep", help="rerun the experiment over one field")
    sw.add_argument("--config", type=Path, default=None)
    sw.add_argument("--param", required=True)
    sw.add_argument("--values", required=True, help="comma separated values")
    sw.add_argument("--mode", choices=("pc", "pd"), default=None)
    sw.add_argument("--seed", type=int, default=None)
    sw.add_argument("--steps", type=int, default=None)
    sw.add_argument("--reps", type=int, default=None)
    sw.add_argument("--out", type=Path, required=True)
    sw.set_defaults(func=_cmd_sweep)

    ver = sub.add_parser("verify", help="run the oracle self-checks")
    ver.add_argument("--quick", action="store_true", help="smaller sample sizes")
    ver.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

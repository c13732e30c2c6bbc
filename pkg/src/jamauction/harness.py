"""Experiment configuration, seeded simulation runs and CSV emission.

``run_experiment`` advances the environment stage by stage and lets either
the centralized coordinator (mode "pc") or the decentralized learners (mode
"pd") allocate the idle channels each stage.  A run is a pure function of
(config, replication): the base seed plus the replication index feeds a
``SeedSequence`` that is split into named substreams (environment, jammer,
coordinator, learners, deviation), so changing e.g. the jammer kind never
perturbs the environment draws.

Emitted CSV rows follow the fixed header
``run,seed,mode,t,su,channel,jam,utility,payment,theta_cum,norm_cum_value``
with one row per (stage, SU); reruns are bit-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import pcgame
from .auction import Allocation, pivot_payment
from .envsim import (
    OccupancyModel,
    RateParams,
    SnrModel,
    TrafficModel,
    step_occupancy,
    step_snr,
    transmission_rate,
)
from .pdgame import JammerEstimate, Learner, LearnerParams, pd_stage

__all__ = [
    "BASELINE_SNR_LEVELS",
    "BASELINE_SNR_TRANSITION",
    "CSV_HEADER",
    "ExperimentConfig",
    "RunRecord",
    "run_experiment",
    "run_replications",
    "compute_theta",
    "normalized_running_mean",
    "stages_to_criterion",
    "meets_convergence_criterion",
    "emit",
    "sweep",
]

BASELINE_SNR_LEVELS = (10.0, 30.0, 50.0)
BASELINE_SNR_TRANSITION = (
    (0.4, 0.3, 0.3),
    (0.3, 0.4, 0.3),
    (0.3, 0.3, 0.4),
)

CSV_HEADER = "run,seed,mode,t,su,channel,jam,utility,payment,theta_cum,norm_cum_value"

_MODES = ("pc", "pd")
_JAMMERS = ("minimax", "uniform", "adaptive")
_DEVIATIONS = ("scale_half", "scale_double", "noise")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment; JSON round-trips field for field."""

    n_sus: int = 3
    n_channels: int = 2
    snr_levels: tuple = BASELINE_SNR_LEVELS
    snr_transition: tuple = BASELINE_SNR_TRANSITION
    busy_to_idle: float | tuple = 0.3
    idle_to_busy: float | tuple = 0.4
    buffer_cap: int = 2
    mean_arrivals: float | tuple = 0.5
    ber_target: float = 1e-5
    slot_bandwidth: float = 1.0
    epsilon: float = 1.0
    beta: float = 0.5
    jammer: str = "minimax"
    mode: str = "pd"
    horizon: int = 10_000
    seed: int = 1
    reps: int = 1
    conditioning: str = "local"
    deviation_su: int | None = None
    deviation_kind: str | None = None

    # -- construction / serialization ------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        cleaned = {k: _freeze(v) for k, v in data.items()}
        config = cls(**cleaned)
        problems = config.validate()
        if problems:
            raise ValueError("invalid config: " + "; ".join(problems))
        return config

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    # -- validation -------------------------------------------------------

    def validate(self) -> list[str]:
        """Return every violated invariant (empty list when valid)."""
        problems: list[str] = []
        if self.n_sus < 1:
            problems.append("n_sus must be >= 1")
        if self.n_channels < 1:
            problems.append("n_channels must be >= 1")
        if self.horizon < 0:
            problems.append("horizon must be >= 0")
        if self.reps < 1:
            problems.append("reps must be >= 1")
        if self.seed < 0:
            problems.append("seed must be >= 0")
        if self.mode not in _MODES:
            problems.append(f"mode must be one of {_MODES}")
        if self.jammer not in _JAMMERS:
            problems.append(f"jammer must be one of {_JAMMERS}")
        if self.epsilon <= 0:
            problems.append("epsilon must be > 0")
        if self.beta < 0:
            problems.append("beta must be >= 0")
        if self.conditioning not in ("local", "global"):
            problems.append("conditioning must be 'local' or 'global'")
        if (self.deviation_su is None) != (self.deviation_kind is None):
            problems.append("deviation_su and deviation_kind must be set together")
        if self.deviation_kind is not None and self.deviation_kind not in _DEVIATIONS:
            problems.append(f"deviation_kind must be one of {_DEVIATIONS}")
        if self.deviation_su is not None and not 0 <= self.deviation_su < max(self.n_sus, 1):
            problems.append("deviation_su must index an SU")
        try:
            self.models()
        except ValueError as err:
            problems.extend(str(err).split("; "))
        return problems

    # -- model construction ------------------------------------------------

    def models(self) -> tuple[OccupancyModel, SnrModel, TrafficModel, RateParams]:
        occupancy = OccupancyModel(
            busy_to_idle=_broadcast(self.busy_to_idle, self.n_channels),
            idle_to_busy=_broadcast(self.idle_to_busy, self.n_channels),
        )
        snr = SnrModel(
            levels=np.asarray(self.snr_levels, dtype=float),
            transition=np.asarray(self.snr_transition, dtype=float),
        )
        traffic = TrafficModel(
            mean_arrivals=_broadcast(self.mean_arrivals, self.n_sus),
            buffer_cap=self.buffer_cap,
        )
        params = RateParams(slot_bandwidth=self.slot_bandwidth, ber_target=self.ber_target)
        return occupancy, snr, traffic, params


def _freeze(value):
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    return value


def _broadcast(value, size: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.shape == (1,):
        return np.full(size, float(arr[0]))
    return arr


@dataclass
class RunRecord:
    """All per-stage outcomes of one replication."""

    config_hash: str
    run: int
    seed: int
    mode: str
    jam: np.ndarray  # (T,), -1 when no idle channel
    channel: np.ndarray  # (T, N), -1 when unassigned
    utility: np.ndarray  # (T, N), <= 0
    payment: np.ndarray  # (T, N)
    profit: np.ndarray  # (T, N): true effective bid minus payment
    theta_cum: np.ndarray  # (T,)
    cum_value: np.ndarray  # (T,): running sum of all utilities
    norm_cum_value: np.ndarray  # (T,): cum_value / |cum_value[-1]|

    @property
    def horizon(self) -> int:
        return self.jam.shape[0]

    @property
    def n_sus(self) -> int:
        return self.channel.shape[1]

    @property
    def theta_total(self) -> float:
        return float(self.theta_cum[-1]) if self.horizon else 0.0

    @property
    def theta_per_stage(self) -> float:
        return self.theta_total / self.horizon if self.horizon else 0.0

    def rows(self):
        """Yield CSV rows, stage-major then SU."""
        for t in range(self.horizon):
            theta = repr(float(self.theta_cum[t]))
            ncv = repr(float(self.norm_cum_value[t]))
            jam = int(self.jam[t])
            for i in range(self.n_sus):
                yield (
                    f"{self.run},{self.seed},{self.mode},{t},{i},"
                    f"{int(self.channel[t, i])},{jam},{int(self.utility[t, i])},"
                    f"{repr(float(self.payment[t, i]))},{theta},{ncv}"
                )


class _StageGameCache:
    """Memoized stage-game solutions keyed by (idle set, bid cube bytes)."""

    def __init__(self, sus: tuple[int, ...], max_entries: int = 50_000):
        self.sus = sus
        self.max_entries = max_entries
        self._solutions: dict = {}
        self._payments: dict = {}

    def solve(self, cube: np.ndarray, idle: tuple[int, ...]) -> pcgame.StageSolution:
        key = (idle, cube.tobytes())
        found = self._solutions.get(key)
        if found is None:
            if len(self._solutions) >= self.max_entries:
                self._solutions.clear()
            found = pcgame.solve_stage(cube, idle, self.sus, mode="reduced")
            self._solutions[key] = found
        return found

    def payments(
        self, cube: np.ndarray, idle: tuple[int, ...], alloc: Allocation
    ) -> tuple[np.ndarray, np.ndarray]:
        """Pivot payments and effective bids for a realized allocation."""
        key = (idle, cube.tobytes(), alloc.pairs)
        found = self._payments.get(key)
        if found is None:
            if len(self._payments) >= self.max_entries:
                self._payments.clear()
            solution = self.solve(cube, idle)
            effective = cube @ solution.jammer.probs
            pays = pivot_payment(effective, alloc, idle, self.sus)
            found = (pays, effective)
            self._payments[key] = found
        return found


def _make_jam_select(kind: str, cache: _StageGameCache, jam_rng: np.random.Generator, adaptive_counts: dict):
    if kind == "minimax":

        def select(cube, idle):
            solution = cache.solve(cube, idle)
            return pcgame.sample_jam(solution.jammer, jam_rng)

    elif kind == "uniform":

        def select(cube, idle):
            return idle[int(jam_rng.integers(len(idle)))]

    else:  # adaptive: hit the channel allocated most often under this pattern

        def select(cube, idle):
            seen = adaptive_counts.get(idle, {})
            return max(idle, key=lambda c: (seen.get(c, 0), -c))

    return select


def _make_bid_transform(config: ExperimentConfig, dev_rng: np.random.Generator):
    if config.deviation_su is None:
        return None
    target = int(config.deviation_su)
    kind = config.deviation_kind

    def transform(su: int, cube_row: np.ndarray) -> np.ndarray:
        if su != target:
            return cube_row
        if kind == "scale_half":
            return cube_row * 0.5
        if kind == "scale_double":
            return cube_row * 2.0
        noise = dev_rng.uniform(-1.0, 1.0, size=cube_row.shape[0])
        out = np.maximum(cube_row + noise[:, None], 0.0)
        np.fill_diagonal(out, 0.0)
        return out

    return transform


def run_experiment(config: ExperimentConfig, rep: int = 0) -> RunRecord:
    """Simulate one replication; deterministic in (config, rep)."""
    problems = config.validate()
    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))
    occupancy_model, snr_model, traffic, rate_params = config.models()

    n = config.n_sus
    m = config.n_channels
    horizon = config.horizon
    cap = traffic.buffer_cap
    sus = tuple(range(n))
    seed = config.seed + rep

    streams = np.random.SeedSequence(seed).spawn(5)
    env_rng = np.random.default_rng(streams[0])
    jam_rng = np.random.default_rng(streams[1])
    coord_rng = np.random.default_rng(streams[2])
    learn_rng = np.random.default_rng(streams[3])
    dev_rng = np.random.default_rng(streams[4])

    rate_lookup = np.array(
        [transmission_rate(level, 0, None, rate_params) for level in snr_model.levels],
        dtype=np.int64,
    )

    occupancy = (env_rng.random(m) < occupancy_model.stationary_idle_fraction()).astype(np.int64)
    snr_idx = env_rng.integers(0, snr_model.n_levels, size=(n, m))
    buffers = np.zeros(n, dtype=np.int64)

    params = LearnerParams(
        epsilon=config.epsilon, beta=config.beta, conditioning=config.conditioning
    )
    learners = [Learner(i, params) for i in range(n)]
    estimates = [JammerEstimate() for _ in range(n)]
    cache = _StageGameCache(sus)
    adaptive_counts: dict = {}
    jam_select = _make_jam_select(config.jammer, cache, jam_rng, adaptive_counts)
    bid_transform = _make_bid_transform(config, dev_rng)

    jam_rec = np.full(horizon, -1, dtype=np.int64)
    channel_rec = np.full((horizon, n), -1, dtype=np.int64)
    utility_rec = np.zeros((horizon, n), dtype=np.int64)
    payment_rec = np.zeros((horizon, n))
    profit_rec = np.zeros((horizon, n))
    theta_cum = np.zeros(horizon)
    cum_value = np.zeros(horizon)

    theta_acc = 0.0
    value_acc = 0.0
    arrivals_mean = traffic.mean_arrivals

    for t in range(horizon):
        idle = tuple(int(j) for j in np.flatnonzero(occupancy == 1))
        g = np.zeros(n, dtype=np.int64)
        jam = -1

        if idle:
            idle_arr = np.array(idle, dtype=np.int64)
            rates_idle = rate_lookup[snr_idx[:, idle_arr]]
            if config.mode == "pd":
                occ_key = tuple(int(x) for x in occupancy)
                state_keys = [
                    learners[i].state_key(occupancy, snr_idx, buffers) for i in range(n)
                ]
                outcome = pd_stage(
                    idle,
                    sus,
                    buffers,
                    rates_idle,
                    state_keys,
                    occ_key,
                    learners,
                    estimates,
                    jam_select,
                    learn_rng,
                    bid_transform=bid_transform,
                )
                allocation = outcome.allocation
                jam = outcome.jam
                payment_rec[t] = outcome.payments
                profit_rec[t] = outcome.profits
            else:
                values = np.minimum(buffers[:, None], rates_idle).astype(float)
                true_cube = np.repeat(values[:, :, None], len(idle), axis=2)
                diag = np.arange(len(idle))
                true_cube[:, diag, diag] = 0.0
                cube = true_cube
                if bid_transform is not None:
                    cube = true_cube.copy()
                    for i in range(n):
                        cube[i] = bid_transform(i, cube[i])
                solution = cache.solve(cube, idle)
                allocation = pcgame.sample_allocation(solution.coordinator, coord_rng)
                jam = jam_select(true_cube, idle)
                pays, effective = cache.payments(cube, idle, allocation)
                payment_rec[t] = pays
                if bid_transform is not None:
                    # a misreporter's profit is scored at true value, under
                    # the jammer mixture of the game the jammer actually plays
                    effective = true_cube @ cache.solve(true_cube, idle).jammer.probs
                ch_pos = {c: j for j, c in enumerate(idle)}
                for i in range(n):
                    c = allocation.channel_of(i)
                    if c is not None:
                        profit_rec[t, i] = effective[i, ch_pos[c]] - pays[i]

            jam_rec[t] = jam
            for s, c in allocation.pairs:
                channel_rec[t, s] = c
                if c != jam:
                    g[s] = rate_lookup[snr_idx[s, c]]
            if config.jammer == "adaptive":
                seen = adaptive_counts.setdefault(idle, {})
                for _, c in allocation.pairs:
                    seen[c] = seen.get(c, 0) + 1

        arrivals = env_rng.poisson(arrivals_mean)
        drops = np.maximum(buffers - g - cap + arrivals, 0)
        utility_rec[t] = -drops
        buffers = np.minimum(np.maximum(buffers - g, 0) + arrivals, cap)

        theta_acc += float(drops.sum()) / n
        value_acc -= float(drops.sum())
        theta_cum[t] = theta_acc
        cum_value[t] = value_acc

        occupancy = step_occupancy(occupancy, occupancy_model, env_rng)
        snr_idx = step_snr(snr_idx, snr_model, env_rng)

    final = abs(cum_value[-1]) if horizon else 0.0
    norm_cum_value = cum_value / final if final > 0 else np.zeros(horizon)

    return RunRecord(
        config_hash=config.config_hash(),
        run=rep,
        seed=seed,
        mode=config.mode,
        jam=jam_rec,
        channel=channel_rec,
        utility=utility_rec,
        payment=payment_rec,
        profit=profit_rec,
        theta_cum=theta_cum,
        cum_value=cum_value,
        norm_cum_value=norm_cum_value,
    )


def run_replications(config: ExperimentConfig) -> list[RunRecord]:
    return [run_experiment(config, rep) for rep in range(config.reps)]


# -- metrics ---------------------------------------------------------------


def compute_theta(record: RunRecord) -> tuple[float, float]:
    """(cumulative theta, per-stage mean theta) from the stored utilities."""
    drops = -record.utility.sum(axis=1) / record.n_sus
    total = float(drops.sum())
    return total, total / record.horizon


def normalized_running_mean(cum_value: np.ndarray) -> np.ndarray:
    """Per-stage mean of the cumulative value, scaled by its final magnitude.

    This is the convergence diagnostic: the raw cumulative value keeps
    growing once the per-stage utility has stabilized, so the Cauchy check
    is applied to the running mean, normalized to end at +-1.
    """
    cum_value = np.asarray(cum_value, dtype=float)
    t = np.arange(1, cum_value.shape[0] + 1, dtype=float)
    mean = cum_value / t
    final = abs(mean[-1]) if mean.size else 0.0
    if final == 0.0:
        return np.zeros_like(mean)
    return mean / final


def stages_to_criterion(cum_value: np.ndarray, rel_tol: float = 0.01) -> int:
    """First stage from which the normalized running mean stays within
    ``rel_tol`` of its final value (1-based)."""
    curve = normalized_running_mean(cum_value)
    if curve.size == 0:
        return 0
    dev = np.abs(curve - curve[-1])
    tail_max = np.maximum.accumulate(dev[::-1])[::-1]
    hits = np.flatnonzero(tail_max < rel_tol)
    if hits.size == 0:
        return curve.shape[0]
    return int(hits[0]) + 1


def meets_convergence_criterion(
    cum_value: np.ndarray, rel_tol: float = 0.01, tail_frac: float = 0.1
) -> bool:
    """True when the last ``tail_frac`` of the run moved less than
    ``rel_tol`` of the final value."""
    horizon = len(cum_value)
    window_start = int(math.floor((1.0 - tail_frac) * horizon))
    return stages_to_criterion(cum_value, rel_tol) <= max(window_start, 1)


# -- emission ----------------------------------------------------------------


def emit(records: list[RunRecord], outdir, config: ExperimentConfig) -> dict:
    """Write one CSV per replication, a config sidecar and summary.csv."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {"runs": [], "config": outdir / "config.json", "summary": outdir / "summary.csv"}

    for record in records:
        path = outdir / f"run_{record.run:03d}.csv"
        with open(path, "w", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for row in record.rows():
                fh.write(row + "\n")
        paths["runs"].append(path)

    sidecar = {"config": config.to_dict(), "config_hash": config.config_hash()}
    with open(paths["config"], "w", newline="\n") as fh:
        fh.write(json.dumps(sidecar, sort_keys=True, indent=2) + "\n")

    with open(paths["summary"], "w", newline="\n") as fh:
        fh.write(
            "config_hash,mode,horizon,reps,theta_per_stage_mean,theta_per_stage_std,"
            "stages_to_criterion_mean,stages_to_criterion_std\n"
        )
        if records:
            theta = np.array([r.theta_per_stage for r in records])
            stages = np.array([stages_to_criterion(r.cum_value) for r in records], dtype=float)
            theta_std = float(theta.std(ddof=1)) if len(records) > 1 else 0.0
            stages_std = float(stages.std(ddof=1)) if len(records) > 1 else 0.0
            fh.write(
                f"{config.config_hash()},{config.mode},{config.horizon},{len(records)},"
                f"{repr(float(theta.mean()))},{repr(theta_std)},"
                f"{repr(float(stages.mean()))},{repr(stages_std)}\n"
            )
    return paths


def sweep(config: ExperimentConfig, param: str, values: list, outdir) -> Path:
    """Rerun the experiment for each value of one config field.

    Writes each value's full emission into ``<param>=<value>/`` and a
    flat ``sweep.csv`` with one row per replication.
    """
    if param not in {f.name for f in fields(ExperimentConfig)}:
        raise ValueError(f"unknown config field {param!r}")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for value in values:
        sub = replace(config, **{param: value})
        problems = sub.validate()
        if problems:
            raise ValueError(f"invalid config at {param}={value}: " + "; ".join(problems))
        records = run_replications(sub)
        emit(records, outdir / f"{param}={value}", sub)
        for record in records:
            rows.append(
                f"{param},{value},{record.run},{record.seed},{record.mode},"
                f"{repr(record.theta_per_stage)},{stages_to_criterion(record.cum_value)}"
            )
    path = outdir / "sweep.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write("param,value,run,seed,mode,theta_per_stage,stages_to_criterion\n")
        for row in rows:
            fh.write(row + "\n")
    return path

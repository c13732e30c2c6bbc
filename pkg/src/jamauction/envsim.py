"""Channel, traffic and utility dynamics for the spectrum-sharing environment.

The environment is a set of M primary-user channels and N secondary users
(SUs).  Each channel alternates between busy (0) and idle (1) according to a
two-state Markov chain.  Each (SU, channel) pair carries a discrete SNR
Markov chain.  SUs accumulate Poisson packet arrivals in finite buffers and
drain them at the Shannon-style rate of the channel they are granted, unless
the jammer sits on the same channel.  The per-stage utility of an SU is the
negative of its dropped traffic.

All functions are pure; randomness enters only through an explicit
``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "OccupancyModel",
    "SnrModel",
    "TrafficModel",
    "RateParams",
    "GlobalState",
    "step_occupancy",
    "step_snr",
    "transmission_rate",
    "buffer_next",
    "stage_utility",
    "buffer_transition_pmf",
]

_ROW_SUM_TOL = 1e-12


def _check_stochastic_rows(matrix: np.ndarray, what: str, problems: list[str]) -> None:
    if np.any(matrix < 0.0) or np.any(matrix > 1.0):
        problems.append(f"{what}: entries must lie in [0, 1]")
    row_sums = matrix.sum(axis=-1)
    if np.any(np.abs(row_sums - 1.0) > _ROW_SUM_TOL):
        problems.append(f"{what}: rows must sum to 1 within {_ROW_SUM_TOL}")


def _raise_if(problems: list[str]) -> None:
    if problems:
        raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class OccupancyModel:
    """Per-channel two-state occupancy chains.

    ``busy_to_idle[j]`` is the probability that channel j releases (busy -> idle)
    and ``idle_to_busy[j]`` that the primary user returns (idle -> busy).
    State convention: 1 = idle (usable by SUs), 0 = busy.
    """

    busy_to_idle: np.ndarray
    idle_to_busy: np.ndarray

    def __post_init__(self) -> None:
        b2i = np.atleast_1d(np.asarray(self.busy_to_idle, dtype=float))
        i2b = np.atleast_1d(np.asarray(self.idle_to_busy, dtype=float))
        problems: list[str] = []
        if b2i.shape != i2b.shape or b2i.ndim != 1:
            problems.append("occupancy: transition vectors must be 1-d and equal length")
        if np.any(b2i < 0) or np.any(b2i > 1) or np.any(i2b < 0) or np.any(i2b > 1):
            problems.append("occupancy: probabilities must lie in [0, 1]")
        _raise_if(problems)
        object.__setattr__(self, "busy_to_idle", b2i)
        object.__setattr__(self, "idle_to_busy", i2b)

    @property
    def n_channels(self) -> int:
        return self.busy_to_idle.shape[0]

    def stationary_idle_fraction(self) -> np.ndarray:
        """Long-run fraction of time each channel spends idle."""
        denom = self.busy_to_idle + self.idle_to_busy
        out = np.where(denom > 0, self.busy_to_idle / np.where(denom > 0, denom, 1.0), 0.5)
        return out


@dataclass(frozen=True)
class SnrModel:
    """Discrete SNR levels with a Markov transition matrix.

    ``levels`` must be strictly increasing and positive.  ``transition`` is a
    single K x K row-stochastic matrix shared by every (SU, channel) pair, or
    an (N, M, K, K) stack of per-pair matrices.
    """

    levels: np.ndarray
    transition: np.ndarray

    def __post_init__(self) -> None:
        levels = np.atleast_1d(np.asarray(self.levels, dtype=float))
        trans = np.asarray(self.transition, dtype=float)
        problems: list[str] = []
        if levels.ndim != 1 or levels.size == 0:
            problems.append("snr: levels must be a non-empty 1-d array")
        if np.any(levels <= 0):
            problems.append("snr: levels must be positive")
        if np.any(np.diff(levels) <= 0):
            problems.append("snr: levels must be strictly increasing")
        k = levels.shape[0]
        if trans.ndim not in (2, 4) or trans.shape[-2:] != (k, k):
            problems.append("snr: transition must be (K, K) or (N, M, K, K)")
        else:
            _check_stochastic_rows(trans, "snr transition", problems)
        _raise_if(problems)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "transition", trans)

    @property
    def n_levels(self) -> int:
        return self.levels.shape[0]

    def matrix_for(self, su: int, channel: int) -> np.ndarray:
        if self.transition.ndim == 2:
            return self.transition
        return self.transition[su, channel]


@dataclass(frozen=True)
class TrafficModel:
    """Poisson packet arrivals and a shared finite buffer size.

    ``mean_arrivals[i]`` is SU i's mean arrivals per stage; ``buffer_cap`` is
    the buffer size B in packets (0 allowed: every arrival beyond service is
    dropped immediately).
    """

    mean_arrivals: np.ndarray
    buffer_cap: int

    def __post_init__(self) -> None:
        rates = np.atleast_1d(np.asarray(self.mean_arrivals, dtype=float))
        problems: list[str] = []
        if rates.ndim != 1 or rates.size == 0:
            problems.append("traffic: mean_arrivals must be a non-empty 1-d array")
        if np.any(rates < 0):
            problems.append("traffic: mean arrival rates must be >= 0")
        if int(self.buffer_cap) != self.buffer_cap or self.buffer_cap < 0:
            problems.append("traffic: buffer_cap must be an integer >= 0")
        _raise_if(problems)
        object.__setattr__(self, "mean_arrivals", rates)
        object.__setattr__(self, "buffer_cap", int(self.buffer_cap))


@dataclass(frozen=True)
class RateParams:
    """Rate-formula constants: slot bandwidth product and target bit error rate.

    ``ber_target`` must lie in (0, 0.2): at 0.2 the SNR gap ln(0.2/BER)
    degenerates to zero and the rate formula is undefined.
    """

    slot_bandwidth: float = 1.0
    ber_target: float = 1e-5

    def __post_init__(self) -> None:
        problems: list[str] = []
        if not self.slot_bandwidth > 0:
            problems.append("rate: slot_bandwidth must be > 0")
        if not 0.0 < self.ber_target < 0.2:
            problems.append("rate: ber_target must lie in (0, 0.2)")
        _raise_if(problems)

    @property
    def snr_gap(self) -> float:
        return math.log(0.2 / self.ber_target)


@dataclass
class GlobalState:
    """Joint environment state at the start of a stage.

    ``occupancy[j]`` in {0, 1} with 1 = idle; ``snr_idx[i, j]`` indexes into
    ``SnrModel.levels``; ``buffers[i]`` is SU i's queued packets.
    """

    occupancy: np.ndarray
    snr_idx: np.ndarray
    buffers: np.ndarray

    def __post_init__(self) -> None:
        self.occupancy = np.atleast_1d(np.asarray(self.occupancy, dtype=np.int64))
        self.snr_idx = np.atleast_2d(np.asarray(self.snr_idx, dtype=np.int64))
        self.buffers = np.atleast_1d(np.asarray(self.buffers, dtype=np.int64))
        problems: list[str] = []
        if not np.isin(self.occupancy, (0, 1)).all():
            problems.append("state: occupancy entries must be 0 or 1")
        if np.any(self.snr_idx < 0):
            problems.append("state: snr_idx entries must be >= 0")
        if np.any(self.buffers < 0):
            problems.append("state: buffers must be >= 0")
        if self.snr_idx.shape[1] != self.occupancy.shape[0]:
            problems.append("state: snr_idx must have one column per channel")
        if self.buffers.shape[0] != self.snr_idx.shape[0]:
            problems.append("state: buffers must have one entry per SU")
        _raise_if(problems)

    @property
    def idle_channels(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.occupancy == 1))


def step_occupancy(occupancy: np.ndarray, model: OccupancyModel, rng: np.random.Generator) -> np.ndarray:
    """Advance every channel's busy/idle chain by one stage."""
    occupancy = np.asarray(occupancy, dtype=np.int64)
    u = rng.random(occupancy.shape[0])
    flip_prob = np.where(occupancy == 1, model.idle_to_busy, model.busy_to_idle)
    return np.where(u < flip_prob, 1 - occupancy, occupancy).astype(np.int64)


def step_snr(snr_idx: np.ndarray, model: SnrModel, rng: np.random.Generator) -> np.ndarray:
    """Advance every (SU, channel) SNR chain by one stage."""
    snr_idx = np.asarray(snr_idx, dtype=np.int64)
    n, m = snr_idx.shape
    if model.transition.ndim == 2:
        rows = model.transition[snr_idx.ravel()]
    else:
        rows = model.transition.reshape(n * m, model.n_levels, model.n_levels)[
            np.arange(n * m), snr_idx.ravel()
        ]
    cum = np.cumsum(rows, axis=1)
    u = rng.random(n * m)
    nxt = (u[:, None] >= cum).sum(axis=1)
    # guard against cumulative rounding putting u just past the final edge
    np.clip(nxt, 0, model.n_levels - 1, out=nxt)
    return nxt.reshape(n, m).astype(np.int64)


def transmission_rate(snr: float, own_channel: int, jam_channel: int | None, params: RateParams) -> int:
    """Packets served in one stage on ``own_channel`` given the jammer's choice.

    Zero whenever the jammer sits on the same channel; otherwise
    floor(T_s W log2(1 + 1.5 snr / ln(0.2 / BER_tar))).
    """
    if snr <= 0:
        raise ValueError("rate: snr must be positive")
    if jam_channel is not None and own_channel == jam_channel:
        return 0
    spectral = math.log2(1.0 + 1.5 * snr / params.snr_gap)
    return int(math.floor(params.slot_bandwidth * spectral))


def buffer_next(buffer: int, served: int, arrivals: int, buffer_cap: int) -> int:
    """Queue update: drain ``served``, add ``arrivals``, clip at capacity."""
    if buffer < 0 or served < 0 or arrivals < 0 or buffer_cap < 0:
        raise ValueError("buffer: all arguments must be >= 0")
    return min(max(buffer - served, 0) + arrivals, buffer_cap)


def stage_utility(buffer: int, served: int, arrivals: int, buffer_cap: int) -> int:
    """Negative dropped traffic for one stage: -(b - g - B + f)^+.

    Always <= 0, and exactly 0 whenever the post-service queue plus arrivals
    fits in the buffer.
    """
    if buffer < 0 or served < 0 or arrivals < 0 or buffer_cap < 0:
        raise ValueError("utility: all arguments must be >= 0")
    return -max(buffer - served - buffer_cap + arrivals, 0)


def buffer_transition_pmf(buffer: int, served: int, mean_arrivals: float, buffer_cap: int) -> np.ndarray:
    """Distribution of the next buffer level over {0, ..., buffer_cap}.

    The post-service level (b - g)^+ gains Poisson(mean_arrivals) arrivals;
    all probability mass beyond the capacity is lumped at buffer_cap.
    """
    if mean_arrivals < 0:
        raise ValueError("pmf: mean_arrivals must be >= 0")
    if buffer < 0 or served < 0 or buffer_cap < 0:
        raise ValueError("pmf: all arguments must be >= 0")
    base = max(buffer - served, 0)
    pmf = np.zeros(buffer_cap + 1, dtype=float)
    if base >= buffer_cap:
        pmf[buffer_cap] = 1.0
        return pmf
    acc = 0.0
    for level in range(base, buffer_cap):
        k = level - base
        p = math.exp(-mean_arrivals) * mean_arrivals**k / math.factorial(k)
        pmf[level] = p
        acc += p
    pmf[buffer_cap] = max(1.0 - acc, 0.0)
    return pmf

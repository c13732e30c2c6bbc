"""Decentralized two-level preference auctions with Boltzmann-Gibbs learning.

Each SU keeps, per observed conditioning state, a preference distribution
``q`` over the idle channels and a payoff estimate ``u`` per channel.  A
stage runs the protocol:

1. every SU samples a first preference from the Boltzmann-Gibbs softening of
   (q, u) and submits it with its effective bid;
2. each named channel goes to its highest bidder, who pays the runner-up
   bid (the pivot payment of this round);
3. losers sample a second preference over the leftover channels (same q,
   restricted and renormalized) and a second round runs identically;
4. the jammer blocks one idle channel; SUs observe it and update a smoothed
   estimate of the jam distribution;
5. every SU updates its payoff estimate at the preference it played with
   the realized profit, then relaxes q toward the Boltzmann-Gibbs strategy.

Step sizes decay per conditioning state: with T visits, the payoff estimate
moves at 1/T and the distribution at 1/T^(1+beta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .auction import Allocation, first_preference_allocation, preference_payments, second_auction

__all__ = [
    "PROB_FLOOR",
    "LearnerParams",
    "TableEntry",
    "Learner",
    "JammerEstimate",
    "StageOutcome",
    "boltzmann_gibbs",
    "update_distribution",
    "update_payoff_estimate",
    "construct_bids",
    "pd_stage",
]

PROB_FLOOR = 1e-4


def boltzmann_gibbs(q, u_est, epsilon: float) -> np.ndarray:
    """sigma(j) proportional to q(j) exp(u(j)/epsilon), guarded against overflow."""
    q = np.asarray(q, dtype=float)
    u_est = np.asarray(u_est, dtype=float)
    if epsilon <= 0:
        raise ValueError("temperature epsilon must be > 0")
    if q.shape != u_est.shape or q.ndim != 1:
        raise ValueError("q and u must be 1-d and parallel")
    if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError("q must be a probability vector")
    scaled = u_est / epsilon
    weights = q * np.exp(scaled - scaled.max())
    return weights / weights.sum()


def update_distribution(q, sigma, lam: float, floor: float = 0.0) -> np.ndarray:
    """Relax q toward sigma at rate lam; a positive floor mixes in uniform
    weight floor*M' afterwards so every entry stays explorable."""
    q = np.asarray(q, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    out = (1.0 - lam) * q + lam * sigma
    mix = floor * out.shape[0]
    out = (1.0 - mix) * out + mix / out.shape[0]
    return out / out.sum()


def update_payoff_estimate(u_est, played: int, realized: float, q_played: float, mu: float, floor: float = PROB_FLOOR) -> np.ndarray:
    """Move the played component toward the realized payoff, importance-weighted.

    ``q_played`` is the probability mass the learner placed on the action it
    played; values below the floor would blow the 1/q weight up, so they are
    rejected.
    """
    if q_played < floor:
        raise ValueError(f"q({played}) = {q_played} below floor {floor}; estimate would explode")
    if not 0.0 <= mu <= 1.0:
        raise ValueError("mu must lie in [0, 1]")
    out = np.asarray(u_est, dtype=float).copy()
    out[played] += (mu / q_played) * (realized - out[played])
    return out


def construct_bids(buffer: int, rates, q2) -> tuple[np.ndarray, np.ndarray]:
    """Truthful bid row a[j][k] = min(buffer, rate_j) unless jammed, plus
    its expectation against the jam estimate q2.

    ``rates[j]`` is what the SU could drain on idle channel j when not
    jammed.  The bid under jam hypothesis k is the traffic actually cleared:
    zero on the jammed channel, capped by the queued packets elsewhere.
    """
    rates = np.asarray(rates, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    if buffer < 0:
        raise ValueError("buffer must be >= 0")
    if rates.ndim != 1 or rates.shape != q2.shape:
        raise ValueError("rates and q2 must be 1-d and parallel")
    if np.any(rates < 0):
        raise ValueError("rates must be >= 0")
    if np.any(q2 < 0) or abs(q2.sum() - 1.0) > 1e-9:
        raise ValueError("q2 must be a probability vector")
    value = np.minimum(float(buffer), rates)
    cube_row = np.repeat(value[:, None], rates.shape[0], axis=1)
    np.fill_diagonal(cube_row, 0.0)
    effective = value * (1.0 - q2)
    return cube_row, effective


@dataclass(frozen=True)
class LearnerParams:
    epsilon: float = 1.0
    beta: float = 0.5
    floor: float = PROB_FLOOR
    conditioning: str = "local"  # "local" | "global"

    def __post_init__(self) -> None:
        problems = []
        if self.epsilon <= 0:
            problems.append("epsilon must be > 0")
        if self.beta < 0:
            problems.append("beta must be >= 0")
        if not 0 < self.floor < 0.5:
            problems.append("floor must lie in (0, 0.5)")
        if self.conditioning not in ("local", "global"):
            problems.append("conditioning must be 'local' or 'global'")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass
class TableEntry:
    """Per-conditioning-state learning state over that state's idle channels."""

    idle: tuple[int, ...]
    q: np.ndarray
    u: np.ndarray
    visits: int = 0


class Learner:
    """One SU's preference-learning tables, keyed by conditioning state."""

    def __init__(self, su: int, params: LearnerParams):
        self.su = su
        self.params = params
        self.tables: dict[tuple, TableEntry] = {}

    def entry(self, key: tuple, idle: tuple[int, ...]) -> TableEntry:
        entry = self.tables.get(key)
        if entry is None:
            m = len(idle)
            entry = TableEntry(idle, np.full(m, 1.0 / m), np.zeros(m))
            self.tables[key] = entry
        return entry

    def state_key(self, occupancy, snr_idx, buffers) -> tuple:
        """Conditioning key: own observables by default, full state if configured."""
        if self.params.conditioning == "local":
            return (
                tuple(int(x) for x in occupancy),
                tuple(int(x) for x in snr_idx[self.su]),
                int(buffers[self.su]),
            )
        return (
            tuple(int(x) for x in occupancy),
            tuple(int(x) for x in np.asarray(snr_idx).ravel()),
            tuple(int(x) for x in buffers),
        )


class JammerEstimate:
    """Add-one-smoothed jam frequencies, tracked per occupancy pattern."""

    def __init__(self) -> None:
        self.counts: dict[tuple, dict[int, int]] = {}

    def observe_jam(self, occupancy_key: tuple, jam_channel: int) -> None:
        self.counts.setdefault(occupancy_key, {})
        self.counts[occupancy_key][jam_channel] = (
            self.counts[occupancy_key].get(jam_channel, 0) + 1
        )

    def q2(self, occupancy_key: tuple, idle: tuple[int, ...]) -> np.ndarray:
        seen = self.counts.get(occupancy_key, {})
        counts = np.array([seen.get(j, 0) for j in idle], dtype=float)
        return (counts + 1.0) / (counts.sum() + len(idle))


@dataclass(frozen=True)
class StageOutcome:
    allocation: Allocation
    first_prefs: tuple[int, ...]
    payments: np.ndarray
    profits: np.ndarray
    bid_cube: np.ndarray
    effective: np.ndarray
    jam: int


def _sample_from(probs: np.ndarray, rng: np.random.Generator) -> int:
    u = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return len(probs) - 1


def pd_stage(
    idle: tuple[int, ...],
    sus: tuple[int, ...],
    buffers,
    rates,
    state_keys: list[tuple],
    occupancy_key: tuple,
    learners: list[Learner],
    estimates: list[JammerEstimate],
    jam_select,
    rng: np.random.Generator,
    bid_transform=None,
) -> StageOutcome:
    """Run one decentralized stage; mutates learners and estimates.

    ``rates[i][jpos]`` is sus[i]'s unjammed rate on idle[jpos].
    ``jam_select(value_cube, idle)`` picks the jammed channel; it is given
    the true-value cube, never the submitted bids — the attacker observes
    the spectrum, not the auction's control traffic.  ``bid_transform(su,
    cube_row) -> cube_row`` lets an SU misreport its submitted bid rows
    (effective bids are recomputed from the transformed row); true values
    still drive its profit accounting.
    """
    m = len(idle)
    n = len(sus)
    ch_pos = {c: j for j, c in enumerate(idle)}

    entries = []
    sigmas = []
    first_prefs = []
    for i, su in enumerate(sus):
        entry = learners[i].entry(state_keys[i], idle)
        sigma = boltzmann_gibbs(entry.q, entry.u, learners[i].params.epsilon)
        pos = _sample_from(sigma, rng)
        entries.append(entry)
        sigmas.append(sigma)
        first_prefs.append(idle[pos])

    true_cube = np.zeros((n, m, m))
    true_eff = np.zeros((n, m))
    sub_cube = np.zeros((n, m, m))
    sub_eff = np.zeros((n, m))
    for i, su in enumerate(sus):
        q2 = estimates[i].q2(occupancy_key, idle)
        cube_row, eff = construct_bids(int(buffers[i]), rates[i], q2)
        true_cube[i] = cube_row
        true_eff[i] = eff
        if bid_transform is not None:
            cube_row = bid_transform(su, cube_row)
            eff = cube_row @ q2
        sub_cube[i] = cube_row
        sub_eff[i] = eff

    level1_bids = tuple(float(sub_eff[i, ch_pos[first_prefs[i]]]) for i in range(n))
    alloc1 = first_preference_allocation(sus, tuple(first_prefs), level1_bids, idle)
    pay1 = preference_payments(sus, tuple(first_prefs), level1_bids, alloc1)

    taken = set(alloc1.assigned_channels)
    losers = [i for i, su in enumerate(sus) if alloc1.channel_of(su) is None]
    left = tuple(c for c in idle if c not in taken)
    alloc2 = Allocation(())
    pay2 = np.zeros(0)
    second_sus: list[int] = []
    second_prefs: list[int] = []
    second_bids: list[float] = []
    if losers and left:
        left_pos = [ch_pos[c] for c in left]
        for i in losers:
            weights = sigmas[i][left_pos]
            total = weights.sum()
            if total <= 0.0:
                weights = np.full(len(left_pos), 1.0 / len(left_pos))
            else:
                weights = weights / total
            pos = _sample_from(weights, rng)
            second_sus.append(sus[i])
            second_prefs.append(left[pos])
            second_bids.append(float(sub_eff[i, ch_pos[left[pos]]]))
        alloc2 = second_auction(
            tuple(second_sus), left, tuple(second_prefs), tuple(second_bids)
        )
        pay2 = preference_payments(
            tuple(second_sus), tuple(second_prefs), tuple(second_bids), alloc2
        )

    jam = int(jam_select(true_cube, idle))
    if jam not in ch_pos:
        raise ValueError(f"jam channel {jam} is not idle")

    pairs = alloc1.pairs + alloc2.pairs
    allocation = Allocation(pairs)
    payments = np.zeros(n)
    profits = np.zeros(n)
    su_index = {su: i for i, su in enumerate(sus)}
    for pos, su in enumerate(sus):
        if alloc1.channel_of(su) is not None:
            payments[pos] = pay1[pos]
    for pos2, su in enumerate(second_sus):
        if alloc2.channel_of(su) is not None:
            payments[su_index[su]] = pay2[pos2]
    for i, su in enumerate(sus):
        c = allocation.channel_of(su)
        if c is not None:
            profits[i] = true_eff[i, ch_pos[c]] - payments[i]

    for i, su in enumerate(sus):
        entry = entries[i]
        entry.visits += 1
        mu = 1.0 / entry.visits
        lam = 1.0 / entry.visits ** (1.0 + learners[i].params.beta)
        played = ch_pos[first_prefs[i]]
        entry.u = update_payoff_estimate(
            entry.u, played, float(profits[i]), float(entry.q[played]), mu,
            floor=learners[i].params.floor,
        )
        entry.q = update_distribution(entry.q, sigmas[i], lam, floor=learners[i].params.floor)
        estimates[i].observe_jam(occupancy_key, jam)

    return StageOutcome(
        allocation=allocation,
        first_prefs=tuple(first_prefs),
        payments=payments,
        profits=profits,
        bid_cube=sub_cube,
        effective=sub_eff,
        jam=jam,
    )

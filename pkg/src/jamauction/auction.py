"""Channel allocation rules and pivot payments.

Bids live in a cube ``a[i][j][k]``: what SU ``i`` offers for channel ``j``
under the hypothesis that the jammer blocks channel ``k``.  Weighting the
jam axis by a distribution gives the effective per-channel bids ``a'[i][j]``
used by the allocation rules:

- ``max_weight_allocation``: welfare-maximizing assignment of idle channels
  to SUs (each channel to at most one SU, each SU at most one channel),
  computed by an augmenting-path matching and post-processed so ties always
  resolve to the lexicographically smallest (SU, channel) pairing.
- ``first_preference_allocation`` / ``second_auction``: the decentralized
  rule; every channel goes to the highest bidder that named it.
- ``pivot_payment``: winner pays the welfare others lose by its presence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Allocation",
    "effective_bids",
    "max_weight_allocation",
    "first_preference_allocation",
    "second_auction",
    "pivot_payment",
    "preference_payments",
]

_TIE_TOL = 1e-9


@dataclass(frozen=True)
class Allocation:
    """Assignment of channels to SUs as sorted (su, channel) pairs."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple(sorted((int(s), int(c)) for s, c in self.pairs)))
        sus = [s for s, _ in self.pairs]
        chans = [c for _, c in self.pairs]
        if len(set(sus)) != len(sus) or len(set(chans)) != len(chans):
            raise ValueError("allocation: each SU and each channel may appear at most once")

    def channel_of(self, su: int) -> int | None:
        for s, c in self.pairs:
            if s == su:
                return c
        return None

    def su_of(self, channel: int) -> int | None:
        for s, c in self.pairs:
            if c == channel:
                return s
        return None

    @property
    def assigned_channels(self) -> tuple[int, ...]:
        return tuple(sorted(c for _, c in self.pairs))

    @property
    def assigned_sus(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.pairs)


def effective_bids(bid_cube: np.ndarray, jam_dist: np.ndarray) -> np.ndarray:
    """Collapse the jam axis: a'[i][j] = sum_k jam_dist[k] a[i][j][k]."""
    cube = np.asarray(bid_cube, dtype=float)
    dist = np.asarray(jam_dist, dtype=float)
    if cube.ndim != 3:
        raise ValueError("bid cube must have shape (n_sus, n_idle, n_idle)")
    if dist.shape != (cube.shape[2],) or np.any(dist < 0) or abs(dist.sum() - 1.0) > 1e-9:
        raise ValueError("jam distribution must be a probability vector over idle channels")
    if np.any(cube < 0):
        raise ValueError("bids must be >= 0")
    return cube @ dist


def _hungarian_max(weights: np.ndarray) -> float:
    """Maximum total weight of a perfect matching on a square matrix.

    Classical augmenting-path assignment with row/column potentials,
    O(n^3), deterministic.
    """
    n = weights.shape[0]
    if n == 0:
        return 0.0
    cost = -weights  # minimize
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=np.int64)  # match[j] = row assigned to column j
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    total = 0.0
    for j in range(1, n + 1):
        total += weights[match[j] - 1, j - 1]
    return float(total)


def _best_welfare(bids: np.ndarray) -> float:
    """Best achievable welfare assigning each column to at most one row."""
    rows, cols = bids.shape
    n = max(rows, cols)
    if n == 0:
        return 0.0
    padded = np.zeros((n, n))
    padded[:rows, :cols] = bids
    return _hungarian_max(padded)


def max_weight_allocation(
    bids: np.ndarray, idle: tuple[int, ...], sus: tuple[int, ...]
) -> tuple[Allocation, float]:
    """Welfare-maximizing assignment of ``idle`` channels to ``sus``.

    ``bids[i][j]`` is the effective bid of sus[i] for idle[j]; all bids must
    be >= 0.  Every idle channel is assigned while unassigned SUs remain
    (zero-bid assignments included); leftover channels stay idle.  Among
    welfare ties the lexicographically smallest (su, channel) pairing wins.
    """
    bids = np.atleast_2d(np.asarray(bids, dtype=float))
    idle = tuple(int(j) for j in idle)
    sus = tuple(int(i) for i in sus)
    if not idle or not sus:
        return Allocation(()), 0.0
    if bids.shape != (len(sus), len(idle)):
        raise ValueError("bids must have shape (len(sus), len(idle))")
    if np.any(bids < 0):
        raise ValueError("bids must be >= 0")

    total = _best_welfare(bids)
    n_assign = min(len(sus), len(idle))

    # peel off assignments in lexicographic order, keeping optimality:
    # fix the smallest (su, channel) pair that still allows the remaining
    # subproblem to reach the optimum
    pairs: list[tuple[int, int]] = []
    row_ids = list(range(len(sus)))
    col_ids = list(range(len(idle)))
    remaining = total
    while len(pairs) < n_assign:
        fixed = False
        for ri in row_ids:
            ri_pos = row_ids.index(ri)
            for ci in col_ids:
                ci_pos = col_ids.index(ci)
                sub = np.delete(np.delete(bids[np.ix_(row_ids, col_ids)], ri_pos, 0), ci_pos, 1)
                rest = _best_welfare(sub) if sub.size else 0.0
                if bids[ri, ci] + rest >= remaining - _TIE_TOL * max(1.0, abs(total)):
                    pairs.append((sus[ri], idle[ci]))
                    remaining -= bids[ri, ci]
                    row_ids.remove(ri)
                    col_ids.remove(ci)
                    fixed = True
                    break
            if fixed:
                break
        if not fixed:  # numerically impossible, but never loop forever
            raise RuntimeError("allocation extraction failed to reproduce the optimum")
    return Allocation(tuple(pairs)), total


def first_preference_allocation(
    sus: tuple[int, ...],
    prefs: tuple[int, ...],
    bids: tuple[float, ...],
    idle: tuple[int, ...],
) -> Allocation:
    """Each named channel goes to its highest bidder; ties to the lowest SU id.

    ``prefs[i]`` is the channel named by sus[i] and must be idle; ``bids[i]``
    its scalar bid.  Channels nobody named stay unassigned.
    """
    idle_set = set(int(j) for j in idle)
    if len(sus) != len(prefs) or len(sus) != len(bids):
        raise ValueError("sus, prefs and bids must be parallel")
    for pref, bid in zip(prefs, bids):
        if int(pref) not in idle_set:
            raise ValueError(f"preference {pref} is not an idle channel")
        if bid < 0:
            raise ValueError("bids must be >= 0")
    pairs = []
    for channel in sorted(idle_set):
        contenders = [
            (float(bid), int(su))
            for su, pref, bid in zip(sus, prefs, bids)
            if int(pref) == channel
        ]
        if contenders:
            top = max(bid for bid, _ in contenders)
            winner = min(su for bid, su in contenders if bid == top)
            pairs.append((winner, channel))
    return Allocation(tuple(pairs))


def second_auction(
    remaining_sus: tuple[int, ...],
    remaining_channels: tuple[int, ...],
    prefs: tuple[int, ...],
    bids: tuple[float, ...],
) -> Allocation:
    """Second round over leftover SUs and channels, same highest-bidder rule."""
    return first_preference_allocation(remaining_sus, prefs, bids, remaining_channels)


def pivot_payment(
    bids: np.ndarray,
    allocation: Allocation,
    idle: tuple[int, ...],
    sus: tuple[int, ...],
) -> np.ndarray:
    """Per-SU pivot payment: (best others-only welfare) - (others' welfare now).

    ``bids`` are effective bids shaped (len(sus), len(idle)).  Payments are
    always >= 0; an SU that wins nothing affects nothing and pays 0.  When
    ``allocation`` maximizes welfare for ``bids``, payments also never exceed
    the winner's own bid.
    """
    bids = np.atleast_2d(np.asarray(bids, dtype=float))
    idle = tuple(int(j) for j in idle)
    sus = tuple(int(i) for i in sus)
    if bids.shape != (len(sus), len(idle)):
        raise ValueError("bids must have shape (len(sus), len(idle))")
    col_of = {j: pos for pos, j in enumerate(idle)}
    payments = np.zeros(len(sus))
    alloc_welfare = 0.0
    own = np.zeros(len(sus))
    for pos, su in enumerate(sus):
        channel = allocation.channel_of(su)
        if channel is not None:
            own[pos] = bids[pos, col_of[channel]]
            alloc_welfare += own[pos]
    for pos, su in enumerate(sus):
        if allocation.channel_of(su) is None:
            continue
        without = bids.copy()
        without[pos, :] = 0.0
        best_without = _best_welfare(without)
        payments[pos] = max(best_without - (alloc_welfare - own[pos]), 0.0)
    return payments


def preference_payments(
    sus: tuple[int, ...],
    prefs: tuple[int, ...],
    bids: tuple[float, ...],
    allocation: Allocation,
) -> np.ndarray:
    """Pivot payments specialized to one preference round.

    With each SU bidding on a single named channel, re-optimizing without
    the winner just promotes the runner-up on that channel, so the winner
    pays the second-highest rival bid (0 when unopposed).
    """
    payments = np.zeros(len(sus))
    for pos, su in enumerate(sus):
        channel = allocation.channel_of(int(su))
        if channel is None:
            continue
        runner_up = 0.0
        for other_pos, other in enumerate(sus):
            if other_pos != pos and int(prefs[other_pos]) == channel:
                runner_up = max(runner_up, float(bids[other_pos]))
        payments[pos] = runner_up
    return payments

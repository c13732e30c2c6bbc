"""Centralized stage game: coordinator picks an allocation, jammer picks a channel.

Given the submitted bid cube over the currently idle channels, the
coordinator's pure actions are the injective allocations of idle channels to
SUs and the jammer's are the idle channels.  The zero-sum payoff of
allocation ``l`` against jam ``k`` is the total bid value the allocation
collects under that jam hypothesis.

The full action set grows factorially, but the coordinator's optimal
mixture only ever needs as many allocations as there are idle channels, and
each of those is itself the outcome of a welfare-maximizing auction against
some jam mixture.  ``candidate_allocations`` therefore collects allocations
by running auctions: one per pure jam hypothesis to seed, then one against
the jammer's optimal mixture of the restricted game, repeated until no
auction improves on the restricted value.  ``solve_stage(mode="exact")``
enumerates the whole set and reduces it row by row instead, reporting any
affine degeneracy among payoff rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import matgame
from .auction import Allocation, max_weight_allocation

__all__ = [
    "AllocationActionSet",
    "CoordinatorPolicy",
    "JammerPolicy",
    "StageSolution",
    "build_full_game",
    "candidate_allocations",
    "solve_stage",
    "sample_allocation",
    "sample_jam",
]

MAX_FULL_ACTIONS = 100_000


@dataclass(frozen=True)
class AllocationActionSet:
    """Coordinator actions with their payoff rows against each jam column."""

    allocations: tuple[Allocation, ...]
    payoff: np.ndarray  # shape (n_allocations, n_idle)
    idle: tuple[int, ...]
    sus: tuple[int, ...]


@dataclass(frozen=True)
class CoordinatorPolicy:
    """Mixed strategy over allocations."""

    allocations: tuple[Allocation, ...]
    probs: np.ndarray

    def marginals(self, sus: tuple[int, ...], idle: tuple[int, ...]) -> np.ndarray:
        """P(su i holds channel j), shaped (len(sus), len(idle))."""
        out = np.zeros((len(sus), len(idle)))
        su_pos = {s: i for i, s in enumerate(sus)}
        ch_pos = {c: j for j, c in enumerate(idle)}
        for alloc, p in zip(self.allocations, self.probs):
            for s, c in alloc.pairs:
                out[su_pos[s], ch_pos[c]] += p
        return out


@dataclass(frozen=True)
class JammerPolicy:
    """Jam-channel distribution; ``kind`` records how it was derived."""

    kind: str  # "minimax" | "uniform" | "adaptive"
    idle: tuple[int, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (len(self.idle),) or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("jammer policy must be a probability vector over idle channels")
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class StageSolution:
    coordinator: CoordinatorPolicy
    jammer: JammerPolicy
    value: float
    action_set: AllocationActionSet
    report: matgame.ReductionReport | None = None


def _check_cube(bid_cube, idle, sus) -> tuple[np.ndarray, tuple[int, ...], tuple[int, ...]]:
    cube = np.asarray(bid_cube, dtype=float)
    idle = tuple(int(j) for j in idle)
    sus = tuple(int(i) for i in sus)
    if not idle:
        raise ValueError("stage game needs at least one idle channel")
    if not sus:
        raise ValueError("stage game needs at least one SU")
    if cube.shape != (len(sus), len(idle), len(idle)):
        raise ValueError("bid cube must have shape (n_sus, n_idle, n_idle)")
    if np.any(cube < 0) or not np.isfinite(cube).all():
        raise ValueError("bids must be finite and >= 0")
    return cube, idle, sus


def _enumerate_allocations(idle: tuple[int, ...], sus: tuple[int, ...]):
    """All maximal injective assignments of idle channels to SUs."""
    if len(sus) >= len(idle):
        for chosen in permutations(range(len(sus)), len(idle)):
            yield tuple((sus[chosen[jpos]], idle[jpos]) for jpos in range(len(idle)))
    else:
        for chosen in permutations(range(len(idle)), len(sus)):
            yield tuple((sus[ipos], idle[chosen[ipos]]) for ipos in range(len(sus)))


def _payoff_rows(cube: np.ndarray, idle, sus, allocations) -> np.ndarray:
    su_pos = {s: i for i, s in enumerate(sus)}
    ch_pos = {c: j for j, c in enumerate(idle)}
    payoff = np.zeros((len(allocations), len(idle)))
    for row, alloc in enumerate(allocations):
        for s, c in alloc.pairs:
            payoff[row] += cube[su_pos[s], ch_pos[c], :]
    return payoff


def build_full_game(bid_cube, idle, sus, max_actions: int = MAX_FULL_ACTIONS) -> AllocationActionSet:
    """Enumerate every coordinator action; refuses factorially large sets."""
    cube, idle, sus = _check_cube(bid_cube, idle, sus)
    count = 1
    big, small = max(len(sus), len(idle)), min(len(sus), len(idle))
    for i in range(small):
        count *= big - i
        if count > max_actions:
            raise ValueError(
                f"full action set exceeds {max_actions} allocations; use candidate_allocations"
            )
    allocations = tuple(Allocation(pairs) for pairs in _enumerate_allocations(idle, sus))
    return AllocationActionSet(allocations, _payoff_rows(cube, idle, sus, allocations), idle, sus)


def candidate_allocations(bid_cube, idle, sus, tol: float = 1e-9) -> AllocationActionSet:
    """Small action set with the full game's value, found by auction alone.

    Seeds with the welfare-maximizing allocation per jam hypothesis, then
    alternates: solve the restricted game, run one more auction against the
    jammer's current mixture, and add the winner if it beats the restricted
    value.  When no auction improves, the restricted value equals the full
    game's (the jammer mixture caps every allocation, the coordinator
    mixture is feasible in the full game).  A final row elimination prunes
    the set to at most one allocation per idle channel.
    """
    cube, idle, sus = _check_cube(bid_cube, idle, sus)
    allocations: list[Allocation] = []
    seen = set()

    def _add(alloc: Allocation) -> bool:
        if alloc.pairs in seen:
            return False
        seen.add(alloc.pairs)
        allocations.append(alloc)
        return True

    for k in range(len(idle)):
        alloc, _ = max_weight_allocation(cube[:, :, k], idle, sus)
        _add(alloc)

    while True:
        payoff = _payoff_rows(cube, idle, sus, tuple(allocations))
        solution = matgame.solve(payoff)
        effective = cube @ solution.col_strategy
        best, welfare = max_weight_allocation(effective, idle, sus)
        gap = welfare - solution.value
        if gap <= tol * max(1.0, abs(solution.value)) or not _add(best):
            break

    payoff = _payoff_rows(cube, idle, sus, tuple(allocations))
    if len(allocations) > len(idle):
        _, report = matgame.reduce_rows(payoff, tol=tol)
        allocations = [allocations[i] for i in report.kept]
        payoff = payoff[list(report.kept)]
    allocations = tuple(allocations)
    return AllocationActionSet(allocations, payoff, idle, sus)


def solve_stage(bid_cube, idle, sus, mode: str = "reduced", tol: float = 1e-9) -> StageSolution:
    """Solve the stage game over either the reduced or the full action set.

    ``mode="reduced"`` plays only per-hypothesis best responses.
    ``mode="exact"`` enumerates everything, eliminates redundant rows first
    and keeps the elimination report (group-I events flag affine ties).
    """
    if mode not in ("reduced", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "reduced":
        action_set = candidate_allocations(bid_cube, idle, sus)
        payoff = action_set.payoff
        report = None
        kept = range(len(action_set.allocations))
    else:
        action_set = build_full_game(bid_cube, idle, sus)
        payoff, report = matgame.reduce_rows(action_set.payoff, tol=tol)
        kept = report.kept
    solution = matgame.solve(payoff)
    allocations = tuple(action_set.allocations[i] for i in kept)
    coordinator = CoordinatorPolicy(allocations, solution.row_strategy)
    jammer = JammerPolicy("minimax", action_set.idle, solution.col_strategy)
    return StageSolution(coordinator, jammer, solution.value, action_set, report)


def sample_allocation(policy: CoordinatorPolicy, rng: np.random.Generator) -> Allocation:
    """Draw one allocation from the coordinator's mixed strategy."""
    return policy.allocations[_sample_index(policy.probs, rng)]


def sample_jam(policy: JammerPolicy, rng: np.random.Generator) -> int:
    """Draw the jammed channel id from the jammer's distribution."""
    return policy.idle[_sample_index(policy.probs, rng)]


def _sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    u = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return len(probs) - 1

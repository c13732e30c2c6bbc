"""Independent reference implementations used to cross-check the fast paths.

Everything here deliberately avoids the production algorithms: the game
value comes from support enumeration instead of the simplex, allocations
from explicit enumeration instead of augmenting paths, and distributions
from Monte Carlo instead of closed forms.  The ``verify`` CLI subcommand
and the test suite both run these against the real implementations.
"""

from __future__ import annotations

from itertools import combinations, permutations

import numpy as np

__all__ = [
    "support_enumeration_value",
    "brute_force_allocation",
    "brute_force_payment",
    "monte_carlo_buffer_pmf",
]

_TOL = 1e-9


def support_enumeration_value(matrix) -> float:
    """Game value by enumerating equal-size support pairs.

    For each candidate support pair solve the indifference equations and
    keep the first pair whose strategies are valid and unimprovable.
    """
    payoff = np.asarray(matrix, dtype=float)
    n_rows, n_cols = payoff.shape
    for size in range(1, min(n_rows, n_cols) + 1):
        for rows in combinations(range(n_rows), size):
            for cols in combinations(range(n_cols), size):
                value = _try_support(payoff, rows, cols)
                if value is not None:
                    return value
    raise RuntimeError("support enumeration found no equilibrium (numerical trouble)")


def _try_support(payoff: np.ndarray, rows, cols):
    size = len(rows)
    # row strategy p over `rows`: equal payoff v on every column in `cols`
    a = np.zeros((size + 1, size + 1))
    a[:size, :size] = payoff[np.ix_(rows, cols)].T
    a[:size, size] = -1.0
    a[size, :size] = 1.0
    b = np.zeros(size + 1)
    b[size] = 1.0
    try:
        sol_row = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return None
    p = sol_row[:size]
    value = sol_row[size]
    # column strategy q over `cols`: equal payoff v on every row in `rows`
    a2 = np.zeros((size + 1, size + 1))
    a2[:size, :size] = payoff[np.ix_(rows, cols)]
    a2[:size, size] = -1.0
    a2[size, :size] = 1.0
    try:
        sol_col = np.linalg.solve(a2, b)
    except np.linalg.LinAlgError:
        return None
    q = sol_col[:size]
    value_col = sol_col[size]
    if abs(value - value_col) > 1e-7:
        return None
    if np.any(p < -_TOL) or np.any(q < -_TOL):
        return None
    p_full = np.zeros(payoff.shape[0])
    p_full[list(rows)] = np.clip(p, 0.0, None)
    q_full = np.zeros(payoff.shape[1])
    q_full[list(cols)] = np.clip(q, 0.0, None)
    p_full /= p_full.sum()
    q_full /= q_full.sum()
    # optimality: no column pays the row player less than v, no row earns more
    if np.min(p_full @ payoff) < value - 1e-7:
        return None
    if np.max(payoff @ q_full) > value + 1e-7:
        return None
    return float(value)


def brute_force_allocation(bids, idle, sus) -> tuple[tuple[tuple[int, int], ...], float]:
    """Enumerate every maximal injective assignment; return the welfare
    optimum with ties broken toward the lexicographically smallest pairing."""
    bids = np.atleast_2d(np.asarray(bids, dtype=float))
    idle = tuple(int(j) for j in idle)
    sus = tuple(int(i) for i in sus)
    if not idle or not sus:
        return (), 0.0
    if len(sus) >= len(idle):
        options = (
            tuple((sus[pick[jpos]], idle[jpos]) for jpos in range(len(idle)))
            for pick in permutations(range(len(sus)), len(idle))
        )
    else:
        options = (
            tuple((sus[ipos], idle[pick[ipos]]) for ipos in range(len(sus)))
            for pick in permutations(range(len(idle)), len(sus))
        )
    su_pos = {s: i for i, s in enumerate(sus)}
    ch_pos = {c: j for j, c in enumerate(idle)}
    scored = [
        (sum(bids[su_pos[s], ch_pos[c]] for s, c in pairs), tuple(sorted(pairs)))
        for pairs in options
    ]
    best_welfare = max(w for w, _ in scored)
    tol = _TOL * max(1.0, abs(best_welfare))
    best_pairs = min(key for w, key in scored if w >= best_welfare - tol)
    return best_pairs, float(best_welfare)


def brute_force_payment(bids, pairs, idle, sus) -> np.ndarray:
    """Pivot payments straight from the definition via brute-force optima."""
    bids = np.atleast_2d(np.asarray(bids, dtype=float))
    idle = tuple(int(j) for j in idle)
    sus = tuple(int(i) for i in sus)
    ch_pos = {c: j for j, c in enumerate(idle)}
    assigned = dict(pairs)
    total = sum(bids[i, ch_pos[assigned[s]]] for i, s in enumerate(sus) if s in assigned)
    payments = np.zeros(len(sus))
    for i, s in enumerate(sus):
        if s not in assigned:
            continue
        without = bids.copy()
        without[i, :] = 0.0
        _, best_without = brute_force_allocation(without, idle, sus)
        others_now = total - bids[i, ch_pos[assigned[s]]]
        payments[i] = max(best_without - others_now, 0.0)
    return payments


def monte_carlo_buffer_pmf(
    buffer: int, served: int, mean_arrivals: float, buffer_cap: int,
    samples: int, rng: np.random.Generator,
) -> np.ndarray:
    """Empirical next-buffer distribution from raw Poisson draws."""
    arrivals = rng.poisson(mean_arrivals, size=samples)
    nxt = np.minimum(max(buffer - served, 0) + arrivals, buffer_cap)
    counts = np.bincount(nxt, minlength=buffer_cap + 1)
    return counts / samples

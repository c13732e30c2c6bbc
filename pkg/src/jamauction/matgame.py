"""Exact solving and row reduction of two-player zero-sum matrix games.

``solve`` computes a mixed-strategy saddle point of a finite payoff matrix
via the classical normalization LP (shift entries positive, scale so the
value is the reciprocal of the simplex objective).  The simplex uses Bland's
anti-cycling rule, so results are deterministic for identical inputs.

``reduce_rows`` shrinks the row player's action set without changing the
game value.  A removal is only ever executed under a certificate that the
value survives: the row carries zero mass in a basic optimal strategy of
the current game (a basic solution never needs more rows than there are
columns), with an explicit re-solve comparison as fallback.  Each removed
row is then classified by its affine decomposition over a basis of the
kept rows:

- coefficient sum = 1: the row is an affine mix of kept rows (group I,
  the knife-edge tie that genericity rules out);
- coefficient sum < 1: the row sits below the kept rows' affine span
  (group II);
- coefficient sum > 1: the row sits above it (group III); the kept row
  with the largest positive coefficient is recorded as the basis-swap
  partner.

Each pass removes exactly one row and re-derives the basis, so the loop
terminates with at most ``n_cols`` mutually independent rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MatGameError",
    "GameSolution",
    "RowRemoval",
    "ReductionReport",
    "solve",
    "affine_decompose",
    "reduce_rows",
]

_PIVOT_TOL = 1e-9
_RESIDUAL_TOL = 1e-7


class MatGameError(RuntimeError):
    """Raised when the LP cannot be solved reliably."""


@dataclass(frozen=True)
class GameSolution:
    """Saddle point of a zero-sum game: maximizing row strategy, minimizing
    column strategy, and the game value."""

    row_strategy: np.ndarray
    col_strategy: np.ndarray
    value: float

    def duality_gap(self, matrix) -> float:
        """|best response gap| of the two strategies against ``matrix``."""
        payoff = _as_matrix(matrix)
        floor_gain = float(np.min(self.row_strategy @ payoff))
        ceil_loss = float(np.max(payoff @ self.col_strategy))
        return ceil_loss - floor_gain


@dataclass(frozen=True)
class RowRemoval:
    """One elimination step: which original row went, under which group.

    ``coeffs`` maps kept-row indices to the affine coefficients expressing
    the removed row over them at the time of removal.  For group III the
    kept row with the largest positive coefficient is recorded in
    ``swapped_for`` (the basis-swap partner)."""

    row: int
    group: str  # "I", "II" or "III-swap"
    coeff_sum: float
    coeffs: dict[int, float]
    swapped_for: int | None = None


@dataclass(frozen=True)
class ReductionReport:
    kept: tuple[int, ...]
    removed: tuple[RowRemoval, ...]
    degeneracies: tuple[str, ...] = ()

    @property
    def degenerate(self) -> bool:
        """True when any removal hinged on an exact affine tie (sum ~= 1)."""
        return bool(self.degeneracies) or any(r.group == "I" for r in self.removed)


def _as_matrix(matrix) -> np.ndarray:
    out = np.asarray(matrix, dtype=float)
    if out.ndim != 2 or out.shape[0] < 1 or out.shape[1] < 1:
        raise ValueError("payoff matrix must be 2-d with at least one row and column")
    if not np.isfinite(out).all():
        raise ValueError("payoff matrix must be finite")
    return out


def _simplex_max(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Maximize 1'y subject to a y <= 1, y >= 0 for a strictly positive a.

    Returns (y, duals, objective).  Bland's rule: entering variable is the
    lowest-index column with positive reduced cost, leaving row breaks ratio
    ties by lowest basis variable index.
    """
    m, n = a.shape
    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = a
    tableau[:m, n : n + m] = np.eye(m)
    tableau[:m, -1] = 1.0
    tableau[m, :n] = 1.0
    basis = list(range(n, n + m))
    for _ in range(50000):
        reduced = tableau[m, :-1]
        entering = -1
        for j in range(n + m):
            if reduced[j] > _PIVOT_TOL:
                entering = j
                break
        if entering < 0:
            break
        col = tableau[:m, entering]
        best_ratio = np.inf
        leave = -1
        for i in range(m):
            if col[i] > _PIVOT_TOL:
                ratio = tableau[i, -1] / col[i]
                if ratio < best_ratio - 1e-12 or (
                    abs(ratio - best_ratio) <= 1e-12 and (leave < 0 or basis[i] < basis[leave])
                ):
                    best_ratio = ratio
                    leave = i
        if leave < 0:
            raise MatGameError("LP unbounded; payoff matrix was not positive")
        pivot = tableau[leave, entering]
        tableau[leave] /= pivot
        for i in range(m + 1):
            if i != leave and tableau[i, entering] != 0.0:
                tableau[i] -= tableau[i, entering] * tableau[leave]
        basis[leave] = entering
    else:
        raise MatGameError("LP failed to converge (pivot limit reached)")
    y = np.zeros(n)
    for i, var in enumerate(basis):
        if var < n:
            y[var] = tableau[i, -1]
    duals = -tableau[m, n : n + m]
    objective = -tableau[m, -1]
    return y, duals, objective


def solve(matrix) -> GameSolution:
    """Solve the zero-sum game where the row player maximizes ``matrix``."""
    payoff = _as_matrix(matrix)
    shift = 0.0
    low = float(payoff.min())
    if low <= 0.0:
        shift = 1.0 - low
    positive = payoff + shift

    y, duals, objective = _simplex_max(positive)
    if objective <= 0.0:
        raise MatGameError("LP returned a non-positive objective")
    col_strategy = np.clip(y, 0.0, None)
    col_strategy /= col_strategy.sum()
    row_strategy = np.clip(duals, 0.0, None)
    row_strategy /= row_strategy.sum()
    value = 1.0 / objective - shift

    floor_gain = float(np.min(row_strategy @ payoff))
    ceil_loss = float(np.max(payoff @ col_strategy))
    if ceil_loss - floor_gain > _RESIDUAL_TOL:
        raise MatGameError(
            f"saddle point residual {ceil_loss - floor_gain:.3e} exceeds {_RESIDUAL_TOL}"
        )
    return GameSolution(row_strategy, col_strategy, value)


def affine_decompose(target: np.ndarray, basis: np.ndarray, tol: float = 1e-9):
    """Express ``target`` over the rows of ``basis`` by least squares.

    Returns (coefficients, residual).  A residual above ``tol`` (relative to
    the target's scale) means the target is independent of the basis.
    """
    target = np.asarray(target, dtype=float)
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    coeffs, _, _, _ = np.linalg.lstsq(basis.T, target, rcond=None)
    residual = float(np.linalg.norm(basis.T @ coeffs - target))
    return coeffs, residual


def _greedy_basis(rows: np.ndarray, order: list[int]) -> list[int]:
    """Lowest-index maximal independent subset, Gram-Schmidt with a fixed
    pivot threshold."""
    basis: list[int] = []
    ortho: list[np.ndarray] = []
    for idx in order:
        v = rows[idx].astype(float).copy()
        for q in ortho:
            v -= (q @ rows[idx]) * q
        norm = np.linalg.norm(v)
        if norm > _PIVOT_TOL * max(1.0, np.linalg.norm(rows[idx])):
            basis.append(idx)
            ortho.append(v / norm)
    return basis


_MASS_TOL = 1e-10


def reduce_rows(matrix, tol: float = 1e-9) -> tuple[np.ndarray, ReductionReport]:
    """Drop value-preserving redundant rows; see module docstring.

    Whenever more rows than columns remain, a basic optimal strategy leaves
    some row with zero mass, and removing a zero-mass row cannot change the
    value (the strategy stays feasible and the column player only loses
    options).  The lowest-index such row goes each pass; if mass alone is
    inconclusive the removal is certified by re-solving without the row.
    """
    payoff = _as_matrix(matrix)
    active = list(range(payoff.shape[0]))
    removed: list[RowRemoval] = []
    degeneracies: list[str] = []

    while True:
        basis = _greedy_basis(payoff, active)
        if len(basis) == len(active):
            break
        solution = solve(payoff[active])
        victim = -1
        for pos, idx in enumerate(active):
            if solution.row_strategy[pos] <= _MASS_TOL:
                victim = idx
                break
        if victim < 0:
            for idx in active:
                rest = [r for r in active if r != idx]
                try:
                    trial = solve(payoff[rest])
                except MatGameError:
                    continue
                if abs(trial.value - solution.value) <= 1e-9 * max(1.0, abs(solution.value)):
                    victim = idx
                    break
        if victim < 0:
            degeneracies.append(
                f"rows {active} are dependent but no single removal preserves the value"
            )
            break

        kept = [r for r in active if r != victim]
        kept_basis = _greedy_basis(payoff, kept)
        coeffs, residual = affine_decompose(payoff[victim], payoff[kept_basis])
        scale = max(1.0, float(np.linalg.norm(payoff[victim])))
        if residual > 1e-6 * scale:
            degeneracies.append(
                f"row {victim}: decomposition residual {residual:.3e} over basis {kept_basis}"
            )
        coeff_sum = float(coeffs.sum())
        coeff_map = {b: float(c) for b, c in zip(kept_basis, coeffs)}
        if abs(coeff_sum - 1.0) <= tol:
            removed.append(RowRemoval(victim, "I", coeff_sum, coeff_map))
        elif coeff_sum < 1.0:
            removed.append(RowRemoval(victim, "II", coeff_sum, coeff_map))
        else:
            positive = [(c, b) for b, c in coeff_map.items() if c > tol]
            swap = max(positive, key=lambda cb: (cb[0], -cb[1]))[1] if positive else None
            removed.append(RowRemoval(victim, "III-swap", coeff_sum, coeff_map, swapped_for=swap))
        active.remove(victim)

    report = ReductionReport(
        kept=tuple(active), removed=tuple(removed), degeneracies=tuple(degeneracies)
    )
    return payoff[active], report

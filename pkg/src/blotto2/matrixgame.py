"""Zero-sum matrix games over the simplex core.

Entries are the column player's gain: the row player minimizes, the column
player maximizes. The solve goes straight to the low-level simplex (one value
variable split into a positive pair, one probability per column) and reads the
row player's mixed strategy off the inequality duals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import simplex_solve
from .model import BattlefieldSpec


@dataclass(frozen=True)
class MatrixGameSolution:
    value: float
    strategy1: np.ndarray
    strategy2: np.ndarray


def _clean_dist(p: np.ndarray) -> np.ndarray:
    q = np.maximum(np.asarray(p, dtype=np.float64), 0.0)
    s = q.sum()
    if s <= 0:
        return np.full(len(q), 1.0 / len(q))
    return q / s


def solve_matrix_game(M) -> MatrixGameSolution:
    """Value and a pair of optimal mixed strategies of a payoff matrix.

    The game value v* solves max over column mixtures of the worst row,
    which is one LP: probabilities q plus a free value v (split v = vp - vm),
    maximize v subject to (M q)_i - v >= 0 for every row and sum(q) = 1.
    The row mixture is the vector of inequality duals.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise ValueError(f"need a nonempty 2-d payoff matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("payoff matrix has nonfinite entries")
    a1, a2 = M.shape
    A = np.zeros((a1 + 1, a2 + 2))
    A[:a1, :a2] = M
    A[:a1, a2] = -1.0
    A[:a1, a2 + 1] = 1.0
    A[a1, :a2] = 1.0
    senses = np.concatenate([np.ones(a1, dtype=np.int64), np.zeros(1, dtype=np.int64)])
    b = np.zeros(a1 + 1)
    b[a1] = 1.0
    c = np.zeros(a2 + 2)
    c[a2] = -1.0
    c[a2 + 1] = 1.0
    status, value_min, x, y = simplex_solve(A, senses, b, c)
    if status != "optimal":
        raise RuntimeError(f"matrix game solve came back {status}")
    return MatrixGameSolution(float(-value_min), _clean_dist(y[:a1]), _clean_dist(x[:a2]))


def subgame_at(spec: BattlefieldSpec, sigma: float) -> MatrixGameSolution:
    """Solve one battlefield's action game at a fixed continuous allocation."""
    return solve_matrix_game(spec.payoff.value(sigma))

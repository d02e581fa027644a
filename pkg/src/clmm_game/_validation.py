"""Input checks shared by the solver front ends and the strategy evaluators."""

from __future__ import annotations

import numpy as np

from .game import GameSpec, validate_spec


def check_spec(spec) -> GameSpec:
    if not isinstance(spec, GameSpec):
        raise TypeError(f"expected a GameSpec, got {type(spec).__name__}")
    problems = validate_spec(spec)
    if problems:
        raise ValueError("; ".join(problems))
    return spec


def check_profile(spec: GameSpec, K) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.shape != (spec.N, spec.M):
        raise ValueError(f"profile has shape {K.shape}, expected {(spec.N, spec.M)}")
    if not np.all(np.isfinite(K)) or np.any(K < 0):
        raise ValueError("profile entries must be finite and non-negative")
    return K


def check_row(spec: GameSpec, n: int, row, feasible: bool = True) -> np.ndarray:
    """Validate an action row of player ``n``; optionally enforce its budget."""
    if not 0 <= n < spec.N:
        raise IndexError(f"player index {n} outside [0, {spec.N})")
    row = np.asarray(row, dtype=float)
    if row.shape != (spec.M,):
        raise ValueError(f"row has length {row.size}, expected {spec.M}")
    if not np.all(np.isfinite(row)) or np.any(row < 0):
        raise ValueError("row entries must be finite and non-negative")
    if feasible:
        used = float(row @ spec.eps)
        if used > spec.budgets[n] + spec.feasibility_slack(n):
            raise ValueError(f"row spends {used!r} over budget {spec.budgets[n]!r} of player {spec.player_ids[n]}")
    return row

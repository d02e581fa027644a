"""Original (general-range) and atomic liquidity provision games."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .amm import TickGrid, liquidity_price

# (i, j) -> liquidity on (t_i, t_j), 0 <= i < j <= M
GeneralAllocation = dict


def _frozen_array(values, ndim: int = 1) -> np.ndarray:
    arr = np.array(values, dtype=float, ndmin=ndim)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GameSpec:
    """Parameters of one atomic game instance.

    Construction only coerces types; call :func:`validate_spec` to check the
    invariants (the CLI and solver do).
    """

    grid: TickGrid
    alpha: float
    q0: float
    fees: np.ndarray
    taus: np.ndarray
    chis: np.ndarray
    budgets: np.ndarray
    player_ids: tuple = ()
    p_y0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "q0", float(self.q0))
        object.__setattr__(self, "p_y0", float(self.p_y0))
        for name in ("fees", "taus", "chis", "budgets"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        ids = tuple(str(p) for p in self.player_ids) or tuple(str(n) for n in range(len(self.budgets)))
        object.__setattr__(self, "player_ids", ids)

    @property
    def N(self) -> int:
        return len(self.budgets)

    @property
    def M(self) -> int:
        return self.grid.M

    @cached_property
    def eps(self) -> np.ndarray:
        """Dollar price of one liquidity unit on each atomic range at ``q0``."""
        return _frozen_array(liquidity_price(self.grid.lower, self.grid.upper, self.q0, self.p_y0))

    def replace(self, **changes) -> "GameSpec":
        kwargs = dict(
            grid=self.grid, alpha=self.alpha, q0=self.q0, fees=self.fees, taus=self.taus,
            chis=self.chis, budgets=self.budgets, player_ids=self.player_ids, p_y0=self.p_y0,
        )
        kwargs.update(changes)
        return GameSpec(**kwargs)

    def feasibility_slack(self, n: int) -> float:
        return 1e-9 * max(1.0, float(self.budgets[n]))


@dataclass(frozen=True)
class AtomicProfile:
    """Active liquidity ``K[n, m]`` of every player on every atomic range."""

    k: np.ndarray
    players: tuple = field(default=())

    def __post_init__(self):
        k = _frozen_array(self.k, ndim=2)
        object.__setattr__(self, "k", k)
        players = tuple(str(p) for p in self.players) or tuple(str(n) for n in range(k.shape[0]))
        if len(players) != k.shape[0]:
            raise ValueError("one player id per profile row is required")
        object.__setattr__(self, "players", players)

    def __array__(self, dtype=None, copy=None):
        return self.k if dtype is None else self.k.astype(dtype)


def validate_spec(spec: GameSpec) -> list[str]:
    """Return human-readable invariant violations; empty means valid."""
    problems = []
    M = spec.grid.M
    if not (0 < spec.alpha <= 1):
        problems.append(f"alpha out of range (0,1]: {spec.alpha}")
    if not (np.isfinite(spec.q0) and spec.q0 > 0):
        problems.append(f"q0 must be positive and finite: {spec.q0}")
    if not (np.isfinite(spec.p_y0) and spec.p_y0 > 0):
        problems.append(f"p_y0 must be positive and finite: {spec.p_y0}")
    for name in ("fees", "taus", "chis"):
        arr = getattr(spec, name)
        if arr.shape != (M,):
            problems.append(f"{name} has length {arr.size}, expected {M}")
        elif not np.all(np.isfinite(arr)) or np.any(arr < 0):
            problems.append(f"{name} must be finite and non-negative")
    if spec.budgets.ndim != 1 or spec.budgets.size == 0:
        problems.append("budgets must be a non-empty list")
    elif not np.all(np.isfinite(spec.budgets)) or np.any(spec.budgets <= 0):
        problems.append("budgets must be finite and positive")
    if len(spec.player_ids) != spec.budgets.size:
        problems.append("player_ids and budgets differ in length")
    elif len(set(spec.player_ids)) != len(spec.player_ids):
        problems.append("player_ids must be unique")
    if not problems and np.any(spec.eps <= 0):
        problems.append("liquidity price must be positive on every atomic range")
    return problems


def _check_key(key, M: int):
    i, j = key
    if not (0 <= i < j <= M):
        raise KeyError(f"range index pair {key!r} invalid for M={M}")


def theta(alloc: Mapping, grid: TickGrid) -> np.ndarray:
    """Active liquidity per atomic range implied by a general allocation."""
    M = grid.M
    out = np.zeros(M)
    for key, value in alloc.items():
        _check_key(key, M)
        i, j = key
        # direct slice sums keep single-range images bit-exact
        out[i:j] += value
    return out


def xi(k: Sequence[float], grid: TickGrid) -> GeneralAllocation:
    """Embed an atomic row as positions on the atomic ranges themselves."""
    k = np.asarray(k, dtype=float)
    if k.shape != (grid.M,):
        raise ValueError(f"expected a row of length {grid.M}")
    if np.any(k < 0):
        raise ValueError("liquidity must be non-negative")
    return {(m, m + 1): float(v) for m, v in enumerate(k) if v != 0}


def general_liquidity_prices(spec: GameSpec) -> dict:
    t = spec.grid.ticks
    return {
        (i, j): float(liquidity_price(t[i], t[j], spec.q0, spec.p_y0))
        for i, j in spec.grid.general_ranges()
    }


def budget_used(spec: GameSpec, row) -> float:
    """Dollars spent by an atomic row or a general allocation.

    A general range is priced as the sum of its atomic liquidity prices
    (the two agree since liquidity prices add over adjacent ranges), so an
    allocation and its theta image cost exactly the same.
    """
    if isinstance(row, Mapping):
        row = theta(row, spec.grid)
    return float(np.dot(np.asarray(row, dtype=float), spec.eps))


def fee_shares(spec: GameSpec, K) -> np.ndarray:
    """Fraction of each range's fee going to each player (0 where ``K`` is 0)."""
    K = np.asarray(K, dtype=float)
    W = np.where(K > 0, K ** spec.alpha, 0.0)
    nu = spec.chis + W.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(W > 0, W / nu, 0.0)


def atomic_utility(spec: GameSpec, K, n: int) -> float:
    K = np.asarray(K, dtype=float)
    share = fee_shares(spec, K)[n]
    return float(np.dot(spec.fees, share) - np.dot(spec.taus, K[n]))


def atomic_utilities(spec: GameSpec, K) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    return fee_shares(spec, K) @ spec.fees - K @ spec.taus


def original_utility(spec: GameSpec, allocs: Sequence[Mapping], taus_general: Mapping, n: int) -> float:
    """Utility of player ``n`` when every player holds general-range positions."""
    K = np.vstack([theta(a, spec.grid) for a in allocs])
    share = fee_shares(spec, K)[n]
    loss = 0.0
    for key, value in allocs[n].items():
        if value == 0:
            continue
        if key not in taus_general:
            raise KeyError(f"no expected loss rate for range {key!r}")
        loss += taus_general[key] * value
    return float(np.dot(spec.fees, share) - loss)


def is_feasible(spec: GameSpec, K) -> bool:
    K = np.asarray(K, dtype=float)
    if K.shape != (spec.N, spec.M) or np.any(K < 0):
        return False
    used = K @ spec.eps
    return all(used[n] <= spec.budgets[n] + spec.feasibility_slack(n) for n in range(spec.N))


def refine_rows(K, grid: TickGrid, fine: TickGrid) -> np.ndarray:
    """Re-express atomic rows on a finer grid whose ticks include ``grid``'s.

    Each fine range inherits the liquidity of the coarse range containing it
    (zero outside the coarse hull), so theta images and budgets are preserved.
    """
    K = np.asarray(K, dtype=float)
    coarse = grid.array
    fine_t = fine.array
    missing = np.setdiff1d(coarse, fine_t)
    if missing.size:
        raise ValueError(f"fine grid lacks ticks {missing.tolist()}")
    mids = 0.5 * (fine_t[:-1] + fine_t[1:])
    idx = np.searchsorted(coarse, mids) - 1
    inside = (idx >= 0) & (idx < grid.M)
    out = np.zeros(K.shape[:-1] + (fine.M,))
    out[..., inside] = K[..., idx[inside]]
    return out


def union_grid(*grids) -> TickGrid:
    return TickGrid(tuple(np.unique(np.concatenate([np.asarray(g.ticks if isinstance(g, TickGrid) else g, float) for g in grids]))))

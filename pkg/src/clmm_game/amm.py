"""Concentrated-liquidity pool mathematics.

Prices are quoted as units of token Y per unit of token X. All functions
broadcast over numpy arrays; scalar inputs give numpy scalars back.

Atomic ranges are indexed from 0 in code: range ``m`` spans
``(ticks[m], ticks[m + 1])``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

ArrayLike = Union[float, np.ndarray, Sequence[float]]

GAUSS_LEGENDRE_ORDER = 64
_GL_NODES, _GL_WEIGHTS = leggauss(GAUSS_LEGENDRE_ORDER)


@dataclass(frozen=True)
class TickGrid:
    """Strictly increasing, positive, finite price ticks ``t_0 < ... < t_M``."""

    ticks: tuple

    def __post_init__(self):
        ticks = tuple(float(t) for t in self.ticks)
        if len(ticks) < 2:
            raise ValueError("a tick grid needs at least two ticks")
        arr = np.asarray(ticks)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError("ticks must be finite and positive")
        if np.any(np.diff(arr) <= 0):
            raise ValueError("ticks must be strictly increasing")
        object.__setattr__(self, "ticks", ticks)

    @property
    def M(self) -> int:
        return len(self.ticks) - 1

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.asarray(self.ticks)
        arr.setflags(write=False)
        return arr

    @property
    def lower(self) -> np.ndarray:
        return self.array[:-1]

    @property
    def upper(self) -> np.ndarray:
        return self.array[1:]

    def atomic_range(self, m: int) -> tuple[float, float]:
        if not 0 <= m < self.M:
            raise IndexError(f"atomic range {m} outside [0, {self.M})")
        return self.ticks[m], self.ticks[m + 1]

    def general_ranges(self) -> list[tuple[int, int]]:
        """All index pairs ``(i, j)`` with ``i < j``, i.e. ranges ``(t_i, t_j)``."""
        return [(i, j) for i in range(self.M) for j in range(i + 1, self.M + 1)]

    def index_of(self, price: float) -> int:
        """Position of an exact tick value; raises if ``price`` is not a tick."""
        i = int(np.searchsorted(self.array, price))
        if i >= len(self.ticks) or self.ticks[i] != price:
            raise KeyError(f"{price!r} is not a tick of this grid")
        return i


@dataclass(frozen=True)
class PricePoint:
    """Pool price ``q`` together with dollar prices of X and Y."""

    q: float
    p_x: float
    p_y: float

    def __post_init__(self):
        for name in ("q", "p_x", "p_y"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def inconsistency(self) -> float:
        """Relative gap ``|p_x - q p_y| / p_x`` of raw market prices."""
        return abs(self.p_x - self.q * self.p_y) / self.p_x

    def shifted(self) -> "PricePoint":
        p_x, p_y = shift_prices(self.p_x, self.p_y, self.q)
        return PricePoint(self.q, float(p_x), float(p_y))


@dataclass(frozen=True)
class Position:
    liquidity: float
    lower: float
    upper: float

    def __post_init__(self):
        if not (0 < self.lower < self.upper):
            raise ValueError(f"invalid range ({self.lower}, {self.upper})")
        if self.liquidity < 0:
            raise ValueError("liquidity must be non-negative")


@dataclass(frozen=True)
class LiquidityHistogram:
    """Aggregate liquidity ``J_m`` covering each atomic range of ``grid``."""

    grid: TickGrid
    per_range: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.per_range)
        if len(vals) != self.grid.M:
            raise ValueError("histogram length must equal the number of atomic ranges")
        if any(v < 0 or not np.isfinite(v) for v in vals):
            raise ValueError("histogram entries must be finite and non-negative")
        object.__setattr__(self, "per_range", vals)


def _check_range(a, b):
    if np.any(np.asarray(a) <= 0) or np.any(np.asarray(a) >= np.asarray(b)):
        raise ValueError("price range must satisfy 0 < a < b")


def clamp_price(q: ArrayLike, a: ArrayLike, b: ArrayLike):
    _check_range(a, b)
    return np.maximum(a, np.minimum(b, q))


def position_amounts(pos: Position, q: ArrayLike):
    """Token amounts ``(dx, dy)`` held by ``pos`` at pool price ``q``."""
    qh = clamp_price(q, pos.lower, pos.upper)
    dx = pos.liquidity * (1.0 / np.sqrt(qh) - 1.0 / np.sqrt(pos.upper))
    dy = pos.liquidity * (np.sqrt(qh) - np.sqrt(pos.lower))
    return dx, dy


def liquidity_price(a: ArrayLike, b: ArrayLike, q: ArrayLike, p_y: ArrayLike = 1.0):
    """Dollar value of one unit of liquidity on ``(a, b)`` at pool price ``q``."""
    qh = clamp_price(q, a, b)
    sq = np.sqrt(qh)
    return p_y * (sq - np.sqrt(a) + q / sq - q / np.sqrt(b))


def _il_core(a, b, q, q_new):
    # sqrt(x) + q'/sqrt(x) evaluated at the old and new clamped prices
    qh = clamp_price(q, a, b)
    qh_new = clamp_price(q_new, a, b)
    s, s_new = np.sqrt(qh), np.sqrt(qh_new)
    return s + q_new / s - s_new - q_new / s_new


def il_rate(a, b, q, q_new, p_y=1.0, p_y_new=1.0):
    """Impermanent loss per unit of liquidity on ``(a, b)`` for a move ``q -> q_new``."""
    return (np.asarray(p_y_new) / p_y) * _il_core(a, b, q, q_new)


def il_fraction(a, b, q, q_new, p_y=1.0, p_y_new=1.0):
    """Impermanent loss as a fraction of the initial position value.

    ``il_fraction * liquidity_price`` is the loss per liquidity unit in new
    Y dollars, which is additive over adjacent ranges.
    """
    return np.asarray(p_y_new) * _il_core(a, b, q, q_new) / liquidity_price(a, b, q, p_y)


def il_rate_legacy(q, q_new, p_y=1.0, p_y_new=1.0):
    """Full-range (constant product) counterpart of :func:`il_rate`."""
    return (np.asarray(p_y_new) / p_y) * (np.sqrt(q) + q_new / np.sqrt(q) - 2.0 * np.sqrt(q_new))


@dataclass(frozen=True)
class DiscretePriceDistribution:
    """Finitely supported distribution of the end-of-period pool price."""

    prices: tuple
    weights: tuple

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if prices.shape != weights.shape or prices.size == 0:
            raise ValueError("prices and weights must be non-empty and equally long")
        if np.any(prices <= 0) or np.any(weights < 0):
            raise ValueError("prices must be positive and weights non-negative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {weights.sum()!r}, expected 1")
        object.__setattr__(self, "prices", tuple(prices))
        object.__setattr__(self, "weights", tuple(weights))

    @classmethod
    def point_mass(cls, price: float) -> "DiscretePriceDistribution":
        return cls((price,), (1.0,))


@dataclass(frozen=True)
class LogUniformFluctuation:
    """End price ``R q`` with ``log R ~ Unif(-log r, log r)``."""

    r: float

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r <= 1:
            raise ValueError(f"fluctuation parameter must exceed 1, got {self.r!r}")


PriceDistribution = Union[DiscretePriceDistribution, LogUniformFluctuation]


def _gauss_legendre(func, lo: float, hi: float) -> float:
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return float(half * np.dot(_GL_WEIGHTS, func(mid + half * _GL_NODES)))


def expected_il_rate(a: float, b: float, q: float, dist: PriceDistribution) -> float:
    """Expected impermanent loss rate of ``(a, b)`` from start price ``q``.

    The Y dollar price is held constant. For :class:`LogUniformFluctuation`
    the expectation is a Gauss-Legendre rule over ``log q'``, split at
    ``log a`` and ``log b`` where the integrand has kinks.
    """
    _check_range(a, b)
    if isinstance(dist, DiscretePriceDistribution):
        prices = np.asarray(dist.prices)
        return float(np.dot(dist.weights, _il_core(a, b, q, prices)))
    if isinstance(dist, LogUniformFluctuation):
        half_width = np.log(dist.r)
        lo, hi = np.log(q) - half_width, np.log(q) + half_width
        cuts = [lo] + [c for c in (np.log(a), np.log(b)) if lo < c < hi] + [hi]

        def integrand(u):
            return _il_core(a, b, q, np.exp(u))

        total = sum(_gauss_legendre(integrand, u0, u1) for u0, u1 in zip(cuts[:-1], cuts[1:]))
        return total / (2.0 * half_width)
    raise TypeError(f"unsupported price distribution {type(dist).__name__}")


class BondingCurve:
    """Piecewise-hyperbolic bonding curve ``y = phi(x)`` of a liquidity histogram.

    Ranges with zero liquidity collapse to a single point of the curve; the
    curve stays continuous there but the price (minus the slope) jumps.
    """

    def __init__(self, hist: LiquidityHistogram):
        J = np.asarray(hist.per_range, dtype=float)
        if not np.any(J > 0):
            raise ValueError("bonding curve needs at least one range with liquidity")
        t = hist.grid.array
        self.grid = hist.grid
        self.J = J
        inv_sqrt = 1.0 / np.sqrt(t)
        sqrt_t = np.sqrt(t)
        x_contrib = (inv_sqrt[:-1] - inv_sqrt[1:]) * J
        y_contrib = (sqrt_t[1:] - sqrt_t[:-1]) * J
        M = hist.grid.M
        # x_m = sum_{k > m} ..., y_m = sum_{k <= m} ...
        self.x = np.concatenate([np.cumsum(x_contrib[::-1])[::-1], [0.0]])
        self.y = np.concatenate([[0.0], np.cumsum(y_contrib)])
        assert self.x.shape == (M + 1,)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.x[-1]), float(self.x[0])

    def breakpoints(self) -> list[tuple[float, float, float]]:
        return [(float(x), float(y), float(t)) for x, y, t in zip(self.x, self.y, self.grid.ticks)]

    def _piece(self, x: float) -> int:
        lo, hi = self.domain
        if not lo <= x <= hi:
            raise ValueError(f"x={x!r} outside bonding curve domain [{lo}, {hi}]")
        # highest-index liquid range whose x-interval [x_{m+1}, x_m] holds x (left limit)
        for m in range(self.grid.M - 1, -1, -1):
            if self.J[m] > 0 and self.x[m + 1] <= x <= self.x[m]:
                return m
        raise AssertionError("no liquid piece contains x")  # unreachable for valid x

    def price(self, x: float) -> float:
        """Pool price at reserve ``x``, i.e. ``-phi'(x)``."""
        m = self._piece(x)
        s = (x - self.x[m + 1]) / self.J[m] + 1.0 / np.sqrt(self.grid.ticks[m + 1])
        return float(s ** -2)

    def eval(self, x: float) -> float:
        m = self._piece(x)
        Jm = self.J[m]
        t_lo, t_hi = self.grid.ticks[m], self.grid.ticks[m + 1]
        return float(Jm ** 2 / (x - self.x[m + 1] + Jm / np.sqrt(t_hi)) + self.y[m] - Jm * np.sqrt(t_lo))

    def slope(self, x: float) -> float:
        return -self.price(x)


def bonding_curve(hist: LiquidityHistogram) -> BondingCurve:
    return BondingCurve(hist)


def shift_prices(p_x: ArrayLike, p_y: ArrayLike, q: ArrayLike):
    """Dollar prices consistent with ``q`` that keep the product ``p_x p_y``."""
    prod = np.asarray(p_x) * p_y
    return np.sqrt(prod * q), np.sqrt(prod / q)


def empirical_il_rate(a: float, b: float, prev: PricePoint, cur: PricePoint) -> float:
    """Realised loss rate of ``(a, b)`` between two observed price points."""
    _, py_prev = shift_prices(prev.p_x, prev.p_y, prev.q)
    _, py_cur = shift_prices(cur.p_x, cur.p_y, cur.q)
    return float(il_rate(a, b, prev.q, cur.q, py_prev, py_cur))

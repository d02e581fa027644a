import numpy as np
import pytest

from clmm_game.amm import (
    DiscretePriceDistribution,
    LiquidityHistogram,
    LogUniformFluctuation,
    Position,
    PricePoint,
    TickGrid,
    bonding_curve,
    clamp_price,
    empirical_il_rate,
    expected_il_rate,
    il_fraction,
    il_rate,
    il_rate_legacy,
    liquidity_price,
    position_amounts,
    shift_prices,
)


def test_tick_grid_basics():
    g = TickGrid((1, 2, 4, 8))
    assert g.M == 3
    np.testing.assert_array_equal(g.lower, [1, 2, 4])
    np.testing.assert_array_equal(g.upper, [2, 4, 8])
    assert g.atomic_range(1) == (2.0, 4.0)
    assert len(g.general_ranges()) == 6
    assert g.index_of(4.0) == 2
    with pytest.raises(KeyError):
        g.index_of(3.0)


@pytest.mark.parametrize("ticks", [(1.0,), (2.0, 1.0), (1.0, 1.0, 2.0), (0.0, 1.0), (1.0, np.inf)])
def test_tick_grid_rejects_bad_ticks(ticks):
    with pytest.raises(ValueError):
        TickGrid(ticks)


def test_clamp_price():
    np.testing.assert_array_equal(clamp_price([0.5, 2.0, 9.0], 1.0, 4.0), [1.0, 2.0, 4.0])


def test_position_amounts_inside_range():
    x, y = position_amounts(Position(10.0, 1.0, 4.0), 2.0)
    assert x == pytest.approx(10 * (1 / np.sqrt(2) - 0.5))
    assert y == pytest.approx(10 * (np.sqrt(2) - 1))


def test_position_amounts_outside_range():
    assert position_amounts(Position(1.0, 1.0, 4.0), 0.5) == pytest.approx((0.5, 0.0))
    assert position_amounts(Position(1.0, 1.0, 4.0), 9.0) == pytest.approx((0.0, 1.0))


def test_position_validation():
    with pytest.raises(ValueError):
        Position(1.0, 4.0, 1.0)
    with pytest.raises(ValueError):
        Position(-1.0, 1.0, 4.0)


def test_liquidity_price_hand_values():
    assert liquidity_price(1, 4, 2.0) == pytest.approx(2 * np.sqrt(2) - 2)
    # below the range the position is all X, worth q p_y per unit X
    assert liquidity_price(4, 9, 1.0, 2.0) == pytest.approx(2 * (1 / 2 - 1 / 3))
    # above the range it is all Y
    assert liquidity_price(1, 4, 9.0) == pytest.approx(1.0)


def test_liquidity_price_matches_amounts():
    pos = Position(1.0, 1.5, 3.0)
    for q in (1.0, 2.0, 5.0):
        x, y = position_amounts(pos, q)
        assert liquidity_price(1.5, 3.0, q, 1.7) == pytest.approx(1.7 * (q * x + y))


def test_il_rate_hand_value():
    # all Y at q=4 becomes 0.5 X at q'=1, worth 0.5 against 1 held
    assert il_rate(1, 4, 4.0, 1.0) == pytest.approx(0.5)
    assert il_rate(1, 4, 2.0, 2.0) == pytest.approx(0.0, abs=1e-15)


def test_il_rate_scales_with_y_price():
    assert il_rate(1, 4, 4.0, 1.0, 2.0, 3.0) == pytest.approx(1.5 * il_rate(1, 4, 4.0, 1.0))


def test_il_fraction_is_rate_over_value():
    value = liquidity_price(1, 4, 2.0, 1.0)
    assert il_fraction(1, 4, 2.0, 3.0) == pytest.approx(il_rate(1, 4, 2.0, 3.0) / value)


def test_il_rate_legacy_full_range_limit():
    assert il_rate_legacy(1.0, 4.0) == pytest.approx(1.0)
    assert il_rate(1e-12, 1e12, 1.0, 4.0) == pytest.approx(1.0, rel=1e-5)


def test_discrete_expectation():
    dist = DiscretePriceDistribution((1.0, 9.0), (0.25, 0.75))
    expected = 0.25 * il_rate(1, 4, 2.0, 1.0) + 0.75 * il_rate(1, 4, 2.0, 9.0)
    assert expected_il_rate(1, 4, 2.0, dist) == pytest.approx(expected)
    assert expected_il_rate(1, 4, 2.0, DiscretePriceDistribution.point_mass(3.0)) == pytest.approx(
        il_rate(1, 4, 2.0, 3.0))


def test_distribution_validation():
    with pytest.raises(ValueError):
        DiscretePriceDistribution((1.0, 2.0), (0.5, 0.6))
    with pytest.raises(ValueError):
        DiscretePriceDistribution((-1.0,), (1.0,))
    with pytest.raises(ValueError):
        LogUniformFluctuation(1.0)


def test_log_uniform_far_from_range_is_zero():
    # the price cannot leave (q/r, q r), which sits inside the empty region above b
    assert expected_il_rate(1, 2, 10.0, LogUniformFluctuation(1.5)) == pytest.approx(0.0, abs=1e-15)


def test_log_uniform_is_non_negative_and_grows_with_r():
    small = expected_il_rate(1, 4, 2.0, LogUniformFluctuation(1.1))
    large = expected_il_rate(1, 4, 2.0, LogUniformFluctuation(1.5))
    assert 0 < small < large


def test_bonding_curve_single_range():
    curve = bonding_curve(LiquidityHistogram(TickGrid((1.0, 4.0)), (1.0,)))
    np.testing.assert_allclose(curve.x, [0.5, 0.0])
    np.testing.assert_allclose(curve.y, [0.0, 1.0])
    x = 1 / np.sqrt(2) - 0.5
    assert curve.eval(x) == pytest.approx(np.sqrt(2) - 1)
    assert curve.price(x) == pytest.approx(2.0)
    assert curve.slope(x) == pytest.approx(-2.0)
    assert curve.domain == (0.0, 0.5)


def test_bonding_curve_flat_gap_and_errors():
    curve = bonding_curve(LiquidityHistogram(TickGrid((1.0, 2.0, 3.0, 4.0)), (1.0, 0.0, 2.0)))
    assert curve.x[1] == curve.x[2]
    assert len(curve.breakpoints()) == 4
    with pytest.raises(ValueError):
        curve.eval(curve.x[0] + 1.0)
    with pytest.raises(ValueError):
        bonding_curve(LiquidityHistogram(TickGrid((1.0, 2.0)), (0.0,)))
    with pytest.raises(ValueError):
        LiquidityHistogram(TickGrid((1.0, 2.0)), (1.0, 2.0))


def test_shift_prices_hand_value():
    assert shift_prices(4.0, 1.0, 4.0) == pytest.approx((4.0, 1.0))
    px, py = shift_prices(4.4, 1.0, 4.0)
    assert px / py == pytest.approx(4.0)
    assert px * py == pytest.approx(4.4)


def test_price_point():
    p = PricePoint(4.0, 4.4, 1.0)
    assert p.inconsistency == pytest.approx(0.4 / 4.4)
    s = p.shifted()
    assert s.p_x / s.p_y == pytest.approx(4.0)
    with pytest.raises(ValueError):
        PricePoint(0.0, 1.0, 1.0)


def test_empirical_il_rate_uses_shifted_prices():
    prev, cur = PricePoint(4.0, 4.0, 1.0), PricePoint(2.25, 2.25, 1.0)
    assert empirical_il_rate(2.25, 4.0, prev, cur) == pytest.approx(0.125)

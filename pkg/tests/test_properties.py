import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from _gen import random_spec
from clmm_game.amm import il_rate, liquidity_price
from clmm_game.game import atomic_utility, fee_shares, theta
from clmm_game.solver import best_response, initial_profile

prices = st.floats(min_value=0.05, max_value=20.0)


@given(prices, prices, prices, prices)
def test_liquidity_price_is_additive(a, b, c, q):
    a, c, b = sorted((a, b, c))
    if not a < c < b:
        return
    whole = liquidity_price(a, b, q)
    assert abs(whole - liquidity_price(a, c, q) - liquidity_price(c, b, q)) <= 1e-12 * whole


@given(prices, prices, prices, prices)
def test_il_rate_is_non_negative(a, b, q, q_new):
    a, b = sorted((a, b))
    if not a < b:
        return
    assert il_rate(a, b, q, q_new) >= -1e-12 * (np.sqrt(b) + q_new / np.sqrt(a))


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(1, 5), st.floats(0, 10)), max_size=8))
def test_theta_is_additive(entries):
    from clmm_game.amm import TickGrid

    grid = TickGrid((1.0, 2.0, 3.0, 4.0, 5.0, 6.0))
    alloc = {}
    for i, j, v in entries:
        if i < j:
            alloc[(i, j)] = alloc.get((i, j), 0.0) + v
    total = sum((theta({k: v}, grid) for k, v in alloc.items()), np.zeros(grid.M))
    np.testing.assert_allclose(theta(alloc, grid), total, rtol=1e-12, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fee_shares_never_exceed_one(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, chi=bool(seed % 2))
    K = initial_profile(spec, seed) * (rng.random((spec.N, spec.M)) < 0.7)
    shares = fee_shares(spec, K)
    assert np.all(shares >= 0) and np.all(shares.sum(axis=0) <= 1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_best_response_beats_local_perturbations(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, chi=True)
    K = initial_profile(spec, seed)
    n = int(rng.integers(spec.N))
    br = best_response(spec, K, n)
    assert br @ spec.eps <= spec.budgets[n] * (1 + 1e-12)
    K[n] = br
    u = atomic_utility(spec, K, n)
    for _ in range(20):
        alt = np.maximum(br + rng.normal(scale=0.05, size=spec.M) * (br + 0.1), 0.0)
        used = alt @ spec.eps
        if used > spec.budgets[n]:
            alt *= spec.budgets[n] / used
        K[n] = alt
        assert atomic_utility(spec, K, n) <= u + 1e-12 * max(1.0, abs(u))

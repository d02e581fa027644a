import numpy as np
import pytest

from clmm_game.amm import TickGrid
from clmm_game.game import (
    AtomicProfile,
    GameSpec,
    atomic_utilities,
    atomic_utility,
    budget_used,
    fee_shares,
    general_liquidity_prices,
    is_feasible,
    original_utility,
    refine_rows,
    theta,
    union_grid,
    validate_spec,
    xi,
)


def _spec(**kw):
    base = dict(grid=TickGrid((1.0, 2.0, 4.0)), alpha=1.0, q0=2.0, fees=[1.0, 2.0], taus=[0.1, 0.2],
                chis=[0.0, 0.5], budgets=[1.0, 2.0])
    base.update(kw)
    return GameSpec(**base)


def test_valid_spec_has_no_problems(two_player):
    assert validate_spec(two_player) == []
    assert two_player.player_ids == ("0", "1")
    assert two_player.eps.tolist() == [1.0]


@pytest.mark.parametrize("change, text", [
    (dict(alpha=0.0), "alpha"),
    (dict(alpha=1.5), "alpha"),
    (dict(fees=[1.0, -1.0]), "fees"),
    (dict(taus=[0.1]), "taus"),
    (dict(chis=[0.0, np.nan]), "chis"),
    (dict(budgets=[1.0, 0.0]), "budgets"),
    (dict(budgets=[]), "budgets"),
    (dict(player_ids=("a", "a")), "unique"),
    (dict(q0=-1.0), "q0"),
])
def test_validate_spec_reports_problems(change, text):
    problems = validate_spec(_spec(**change))
    assert any(text in p for p in problems), problems


def test_spec_arrays_are_read_only():
    spec = _spec()
    with pytest.raises(ValueError):
        spec.fees[0] = 3.0
    assert spec.replace(alpha=0.5).alpha == 0.5
    assert spec.alpha == 1.0


def test_profile_needs_one_id_per_row():
    with pytest.raises(ValueError):
        AtomicProfile(np.ones((2, 3)), ("a",))
    assert AtomicProfile(np.ones((2, 3))).players == ("0", "1")


def test_theta_and_xi():
    grid = TickGrid((1.0, 2.0, 3.0, 4.0))
    np.testing.assert_array_equal(theta({(0, 2): 1.0, (1, 3): 2.0}, grid), [1.0, 3.0, 2.0])
    k = np.array([0.0, 1.5, 2.5])
    assert xi(k, grid) == {(1, 2): 1.5, (2, 3): 2.5}
    np.testing.assert_array_equal(theta(xi(k, grid), grid), k)
    with pytest.raises(KeyError):
        theta({(2, 1): 1.0}, grid)
    with pytest.raises(ValueError):
        xi([-1.0, 0.0, 0.0], grid)


def test_budget_used_agrees_for_allocation_and_image():
    spec = _spec()
    alloc = {(0, 2): 1.0, (1, 2): 0.5}
    assert budget_used(spec, alloc) == budget_used(spec, theta(alloc, spec.grid))
    prices = general_liquidity_prices(spec)
    assert prices[(0, 2)] == pytest.approx(spec.eps.sum())


def test_fee_shares_hand_values():
    spec = GameSpec(TickGrid((1.0, 4.0)), 1.0, 4.0, [1.0], [0.25], [0.0], [10.0, 10.0])
    np.testing.assert_allclose(fee_shares(spec, [[1.0], [3.0]]), [[0.25], [0.75]])
    half = spec.replace(alpha=0.5)
    np.testing.assert_allclose(fee_shares(half, [[1.0], [3.0]]), [[1 / (1 + np.sqrt(3))], [np.sqrt(3) / (1 + np.sqrt(3))]])
    np.testing.assert_array_equal(fee_shares(spec, [[0.0], [0.0]]), [[0.0], [0.0]])


def test_atomic_utility_hand_value(two_player):
    K = [[1.0], [1.0]]
    assert atomic_utility(two_player, K, 0) == pytest.approx(0.25)
    np.testing.assert_allclose(atomic_utilities(two_player, K), [0.25, 0.25])


def test_original_utility_with_atomic_positions_equals_atomic():
    spec = _spec()
    K = np.array([[0.2, 0.1], [0.0, 0.4]])
    allocs = [xi(r, spec.grid) for r in K]
    taus = {(0, 1): 0.1, (1, 2): 0.2, (0, 2): 0.3}
    for n in range(2):
        assert original_utility(spec, allocs, taus, n) == pytest.approx(atomic_utility(spec, K, n))
    with pytest.raises(KeyError):
        original_utility(spec, [{(0, 2): 1.0}, {}], {}, 0)


def test_is_feasible():
    spec = _spec()
    assert is_feasible(spec, np.zeros((2, 2)))
    assert not is_feasible(spec, np.full((2, 2), 10.0))
    assert not is_feasible(spec, -np.ones((2, 2)))
    assert not is_feasible(spec, np.zeros((2, 3)))


def test_refine_rows_keeps_theta_and_budget():
    coarse = TickGrid((1.0, 2.0, 4.0))
    fine = TickGrid((0.5, 1.0, 1.5, 2.0, 4.0, 8.0))
    K = np.array([[1.0, 2.0]])
    out = refine_rows(K, coarse, fine)
    np.testing.assert_array_equal(out, [[0.0, 1.0, 1.0, 2.0, 0.0]])
    spec_c = _spec(grid=coarse, budgets=[5.0])
    spec_f = GameSpec(fine, 1.0, 2.0, np.zeros(5), np.zeros(5), np.zeros(5), [5.0])
    assert budget_used(spec_f, out[0]) == pytest.approx(budget_used(spec_c, K[0]), rel=1e-14)
    with pytest.raises(ValueError):
        refine_rows(K, coarse, TickGrid((1.0, 4.0)))


def test_union_grid():
    assert union_grid(TickGrid((1.0, 3.0)), [2.0, 3.0, 5.0]).ticks == (1.0, 2.0, 3.0, 5.0)

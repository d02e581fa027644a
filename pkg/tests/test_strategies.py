import math
from pathlib import Path

import numpy as np
import pytest

from _gen import random_feasible_row, random_spec
from clmm_game.amm import TickGrid
from clmm_game.game import GameSpec
from clmm_game.pipeline import load_pool
from clmm_game.solver import best_response
from clmm_game.strategies import (
    DEFAULT_STRATEGIES,
    METRICS,
    REPORT_COLUMNS,
    SuiteConfig,
    build_daily_games,
    evaluate_action,
    ibr,
    nog,
    overlap,
    read_report_csv,
    report_csv,
    run_strategy_suite,
    summarize,
    yday,
)

DEMO = Path(__file__).resolve().parents[1] / "src" / "clmm_game" / "data" / "demo_pool"


@pytest.fixture(scope="module")
def demo_rows():
    pool = load_pool(DEMO)
    games, _ = build_daily_games(pool.log, pool.days, pool.header.gamma)
    cfg = SuiteConfig(strategies=("gt", "ne", "neall", "br", "yday", "rne", "ine", "ibr"), pool="demo")
    return pool, games, cfg, run_strategy_suite(pool.log, pool.header.gamma, games, cfg)


def test_overlap_counts_unused_budget():
    spec = GameSpec(TickGrid((1.0, 4.0)), 1.0, 4.0, [1.0], [0.1], [0.0], [2.0])
    assert overlap(spec, [2.0], [2.0], 0) == 1.0
    assert overlap(spec, [2.0], [1.0], 0) == pytest.approx(0.5)
    assert overlap(spec, [0.0], [2.0], 0) == 0.0
    with pytest.raises(ValueError):
        overlap(spec, [3.0], [1.0], 0)


def test_nog_is_zero_for_best_response_and_positive_otherwise(rng):
    spec = random_spec(rng, chi=True)
    K = np.vstack([random_feasible_row(rng, spec, n, dense=True) for n in range(spec.N)])
    br = best_response(spec, K, 0)
    assert nog(spec, K, 0, br) == pytest.approx(0.0, abs=1e-12)
    assert nog(spec, K, 0, np.zeros(spec.M)) > 0
    u, roi = evaluate_action(spec, K, 0, br)
    assert roi == pytest.approx(u / spec.budgets[0])


def test_yday_rescales():
    np.testing.assert_allclose(yday([1.0, 2.0], 3.0, 6.0), [2.0, 4.0])
    with pytest.raises(ValueError):
        yday([1.0], 0.0, 1.0)


def test_ibr_needs_one_range(rng, two_player):
    np.testing.assert_allclose(ibr(two_player, [[1.0], [1.0]], 0), [1.0])
    with pytest.raises(ValueError):
        ibr(random_spec(rng, M=3), np.ones((2, 3)), 0)


def test_demo_report_shape(demo_rows):
    _, games, _, rows = demo_rows
    counts = {}
    for r in rows:
        counts[r["strategy"]] = counts.get(r["strategy"], 0) + 1
    players = sum(g.spec.N for g in games)
    assert counts["gt"] == counts["ne"] == counts["br"] == counts["neall"] == players
    # history-based strategies start on the second day
    assert counts["rne"] == counts["ine"] == counts["ibr"] == players - games[0].spec.N
    assert counts["yday"] <= counts["rne"]


def test_demo_report_invariants(demo_rows):
    _, _, _, rows = demo_rows
    for r in rows:
        assert 0.0 <= r["overlap_gt"] <= 1.0
        assert r["nog"] >= -1e-9, r
        if r["strategy"] == "gt":
            assert r["overlap_gt"] == 1.0
        if r["strategy"] == "br":
            assert r["nog"] == 0.0


def test_report_csv_round_trip(demo_rows):
    _, _, _, rows = demo_rows
    text = report_csv(rows)
    assert text.splitlines()[0] == ",".join(REPORT_COLUMNS)
    back = read_report_csv(text)
    assert len(back) == len(rows)
    for a, b in zip(rows, back):
        for c in METRICS:
            assert a[c] == b[c] or (math.isnan(a[c]) and math.isnan(b[c]))


def test_nan_is_written_empty():
    row = {"pool": "p", "date": "d", "player": "a", "strategy": "gt", "overlap_gt": 1.0,
           "utility_usd": math.nan, "roi": 0.5, "nog": 0.0}
    assert report_csv([row]).splitlines()[1] == "p,d,a,gt,1.0,,0.5,0.0"
    assert math.isnan(read_report_csv(report_csv([row]))[0]["utility_usd"])


def test_summarize():
    rows = [{"strategy": "gt", "overlap_gt": v, "utility_usd": v, "roi": v, "nog": math.nan} for v in (1.0, 2.0, 3.0)]
    out = summarize(rows)
    m = out["gt"]["metrics"]
    assert out["gt"]["rows"] == 3
    assert m["roi"]["mean"] == 2.0 and m["roi"]["median"] == 2.0 and m["roi"]["q25"] == 1.5
    assert m["nog"] == {"count": 0}


def test_parallel_matches_serial(demo_rows):
    pool, games, cfg, rows = demo_rows
    par = run_strategy_suite(pool.log, pool.header.gamma, games, cfg, jobs=2)
    assert report_csv(par) == report_csv(rows)


def test_date_filter_and_unknown_strategy(demo_rows):
    pool, games, cfg, _ = demo_rows
    day = games[3].day.date
    rows = run_strategy_suite(pool.log, pool.header.gamma, games, cfg, dates={day})
    assert {r["date"] for r in rows} == {day}
    with pytest.raises(ValueError):
        run_strategy_suite(pool.log, pool.header.gamma, games, SuiteConfig(strategies=("magic",)))
    assert "neall" not in DEFAULT_STRATEGIES

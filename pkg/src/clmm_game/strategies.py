"""LP strategies and the metrics used to compare them against ground truth.

Every action is scored as a single deviation: player ``n`` plays it while
everybody else keeps their ground-truth (GT) liquidity. The only exception
is ``neall``, where every player adopts the equilibrium at once.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._validation import check_row
from .game import GameSpec, atomic_utility, refine_rows
from .pipeline import (
    REACTIVE_FLUCTUATION,
    DailyGame,
    EmptyDayError,
    EventLog,
    build_daily_game,
    build_inert_game,
    build_reactive_game,
    inert_range,
)
from .solver import NoMaximizerError, SolverOptions, best_response, line_best_response, solve_ne

STRATEGIES = ("gt", "ne", "neall", "br", "yday", "rne", "ine", "ibr")
DEFAULT_STRATEGIES = ("gt", "ne", "br", "yday", "rne", "ine", "ibr")
REPORT_COLUMNS = ("pool", "date", "player", "strategy", "overlap_gt", "utility_usd", "roi", "nog")
METRICS = ("overlap_gt", "utility_usd", "roi", "nog")


def overlap(spec: GameSpec, a1, a2, n: int) -> float:
    """Similarity of two actions of player ``n`` as ``1 - TV`` of dollar spend.

    Both rows and the unused budget are read as one distribution of the
    budget ``B_n``, so identical actions score 1 and disjoint ones 0.
    """
    a1 = check_row(spec, n, a1)
    a2 = check_row(spec, n, a2)
    d = (a1 - a2) * spec.eps
    tv = (np.abs(d).sum() + abs(d.sum())) / (2.0 * spec.budgets[n])
    return float(min(1.0, max(0.0, 1.0 - tv)))


def _with_row(K, n, row):
    K = np.array(K, dtype=float)
    K[n] = row
    return K


def evaluate_action(spec: GameSpec, gt, n: int, row) -> tuple[float, float]:
    """Utility and ROI of ``row`` for player ``n`` against the GT of the others."""
    row = check_row(spec, n, row)
    u = atomic_utility(spec, _with_row(gt, n, row), n)
    return u, u / float(spec.budgets[n])


def nog(spec: GameSpec, gt, n: int, row, br_row=None) -> float:
    """Normalised optimality gap ``(U(BR) - U(row)) / B_n``."""
    if br_row is None:
        br_row = best_response(spec, gt, n)
    u_br, _ = evaluate_action(spec, gt, n, br_row)
    u, _ = evaluate_action(spec, gt, n, row)
    return (u_br - u) / float(spec.budgets[n])


def yday(prev_row, prev_budget: float, new_budget: float) -> np.ndarray:
    """Repeat yesterday's allocation scaled to today's budget."""
    if not prev_budget > 0:
        raise ValueError("previous budget must be positive")
    return np.asarray(prev_row, dtype=float) * (new_budget / prev_budget)


def ibr(spec: GameSpec, gt, n: int) -> np.ndarray:
    """Best single-range response on a one-range game."""
    if spec.M != 1:
        raise ValueError("ibr expects a game with a single atomic range")
    return line_best_response(spec, gt, n)


def _fit_budget(spec: GameSpec, n: int, row) -> np.ndarray:
    # prices move between days, so a carried-over row may overspend slightly
    used = float(row @ spec.eps)
    cap = float(spec.budgets[n])
    return row * (cap / used) if used > cap + spec.feasibility_slack(n) else row


# ---------------------------------------------------------------------------
# suite


@dataclass
class SuiteConfig:
    strategies: tuple = DEFAULT_STRATEGIES
    expansion: float = 2.0
    fluctuation: float = REACTIVE_FLUCTUATION
    options: SolverOptions = SolverOptions()
    pool: str = "pool"


def _solve(spec, opts):
    try:
        res = solve_ne(spec, opts)
    except NoMaximizerError:
        return None
    return res.k if res.converged else None


def _players(game: DailyGame):
    return list(zip(game.spec.player_ids, game.spec.budgets.tolist()))


def evaluate_day(log: EventLog, gamma: float, today: DailyGame, history: Sequence[DailyGame],
                 cfg: SuiteConfig) -> list[dict]:
    """Report rows of one day; ``history`` holds the preceding days in order."""
    wanted = list(cfg.strategies)
    spec = today.spec
    day = today.day
    opening = day.open.shifted()
    prev = history[-1] if history and history[-1].day.index == day.index - 1 else None
    window = list(history)[-7:]
    players = _players(today)

    extra = []
    if prev is not None:
        extra += list(prev.spec.grid.ticks)
    inert_spec = None
    if window and ({"ine", "ibr"} & set(wanted)):
        lo, hi = inert_range(window, cfg.expansion)
        extra += [lo, hi]
        inert_spec = build_inert_game(window, cfg.expansion, opening.q, opening.p_y, players)
    ev = build_daily_game(log, day, gamma, extra_ticks=extra, alpha=spec.alpha)
    es, gt = ev.spec, ev.gt.k
    grid = es.grid

    ne = _solve(spec, cfg.options) if {"ne", "neall"} & set(wanted) else None
    ne = refine_rows(ne, spec.grid, grid) if ne is not None else None
    rne = None
    if prev is not None and "rne" in wanted:
        rspec = build_reactive_game(prev.spec, opening.q, opening.p_y, players, cfg.fluctuation)
        rne = _solve(rspec, cfg.options)
        rne = refine_rows(rne, rspec.grid, grid) if rne is not None else None
    ine = None
    if inert_spec is not None and "ine" in wanted:
        ine = _solve(inert_spec, cfg.options)
        ine = refine_rows(ine, inert_spec.grid, grid) if ine is not None else None
    prev_rows = {}
    if prev is not None:
        fine = refine_rows(prev.gt.k, prev.spec.grid, grid)
        for i, pid in enumerate(prev.spec.player_ids):
            prev_rows[pid] = (fine[i], float(prev.spec.budgets[i]))

    rows = []
    for n, pid in enumerate(es.player_ids):
        B = float(es.budgets[n])
        try:
            br = best_response(es, gt, n)
            u_br = atomic_utility(es, _with_row(gt, n, br), n)
        except NoMaximizerError:
            br, u_br = None, math.nan

        def cell(strategy, row, against=gt, reference=u_br):
            row = _fit_budget(es, n, row)
            K = _with_row(against, n, row)
            u = atomic_utility(es, K, n)
            rows.append({
                "pool": cfg.pool, "date": day.date, "player": pid, "strategy": strategy,
                "overlap_gt": overlap(es, row, gt[n], n), "utility_usd": u, "roi": u / B,
                "nog": (reference - u) / B,
            })

        for s in wanted:
            if s == "gt":
                cell(s, gt[n])
            elif s == "br" and br is not None:
                cell(s, br)
            elif s == "ne" and ne is not None:
                cell(s, ne[n])
            elif s == "neall" and ne is not None:
                try:
                    ref = atomic_utility(es, _with_row(ne, n, best_response(es, ne, n)), n)
                except NoMaximizerError:
                    ref = math.nan
                cell(s, ne[n], against=ne, reference=ref)
            elif s == "yday" and pid in prev_rows:
                row, b_prev = prev_rows[pid]
                cell(s, yday(row, b_prev, B))
            elif s == "rne" and rne is not None:
                cell(s, rne[n])
            elif s == "ine" and ine is not None:
                cell(s, ine[n])
            elif s == "ibr" and inert_spec is not None:
                lo, hi = inert_spec.grid.ticks
                support = (grid.lower >= lo) & (grid.upper <= hi)
                try:
                    cell(s, line_best_response(es, gt, n, support))
                except NoMaximizerError:
                    pass
    return rows


def build_daily_games(log: EventLog, days, gamma: float, alpha: float = 1.0):
    """Daily games of every day with players; skipped days come back as warnings."""
    games, warnings = [], []
    for day in days:
        try:
            games.append(build_daily_game(log, day, gamma, alpha=alpha))
        except EmptyDayError as exc:
            warnings.append(str(exc))
    return games, warnings


def _evaluate_job(args):
    return evaluate_day(*args)


def run_strategy_suite(log: EventLog, gamma: float, games: Sequence[DailyGame], cfg: SuiteConfig,
                       dates: set | None = None, jobs: int = 1) -> list[dict]:
    """Report rows for every (day, player, strategy) cell that can be evaluated.

    ``games`` must be in chronological order; days outside ``dates`` still
    serve as history.
    """
    unknown = set(cfg.strategies) - set(STRATEGIES)
    if unknown:
        raise ValueError(f"unknown strategies: {', '.join(sorted(unknown))}")
    tasks = []
    for i, g in enumerate(games):
        if dates is not None and g.day.date not in dates:
            continue
        tasks.append((log, gamma, g, list(games[max(0, i - 7):i]), cfg))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_evaluate_job, tasks))
    else:
        chunks = [_evaluate_job(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


# ---------------------------------------------------------------------------
# report files


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def report_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in REPORT_COLUMNS])
    return buf.getvalue()


def read_report_csv(text: str) -> list[dict]:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = dict(rec)
        for c in METRICS:
            row[c] = float(rec[c]) if rec[c] != "" else math.nan
        rows.append(row)
    return rows


def summarize(rows: Sequence[dict]) -> dict:
    """Mean, standard deviation and quartiles of every metric per strategy."""
    out = {}
    for s in dict.fromkeys(r["strategy"] for r in rows):
        sub = [r for r in rows if r["strategy"] == s]
        stats = {}
        for c in METRICS:
            x = np.array([r[c] for r in sub], dtype=float)
            x = x[~np.isnan(x)]
            if x.size == 0:
                stats[c] = {"count": 0}
                continue
            q25, q50, q75 = np.percentile(x, [25, 50, 75])
            stats[c] = {"count": int(x.size), "mean": float(x.mean()), "std": float(x.std()),
                        "q25": float(q25), "median": float(q50), "q75": float(q75)}
        out[s] = {"rows": len(sub), "metrics": stats}
    return out

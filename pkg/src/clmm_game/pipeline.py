"""From pool event logs and daily prices to daily atomic games.

A pool directory holds three files::

    pool.json             {"gamma": fee rate, "name": pool name}
    events.csv|.jsonl     kind,timestamp,sender,position_id,is_nft,lower,upper,liquidity,q_before,q_after
    prices.csv            date,q,p_x,p_y   (one row per UTC midnight)

Day ``d`` runs from price row ``d`` to price row ``d + 1``. Liquidity values
are taken as already scaled reals.
"""

from __future__ import annotations

import csv
import io
import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from datetime import date as Date, datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .amm import (
    DiscretePriceDistribution,
    LogUniformFluctuation,
    Position,
    PricePoint,
    TickGrid,
    expected_il_rate,
    il_rate,
    liquidity_price,
)
from .game import AtomicProfile, GameSpec

EVENT_COLUMNS = ("kind", "timestamp", "sender", "position_id", "is_nft", "lower", "upper",
                 "liquidity", "q_before", "q_after")
PRICE_COLUMNS = ("date", "q", "p_x", "p_y")
MAX_PLAYERS = 30
TOP_SHARE = 0.99
REACTIVE_FLUCTUATION = 1.1
INERT_WINDOW = 7


class PipelineError(ValueError):
    """Bad or inconsistent pool input."""


class EventOrderError(PipelineError):
    pass


class EmptyDayError(PipelineError):
    """No position qualifies as a player on this day."""


# ---------------------------------------------------------------------------
# parsing


@dataclass(frozen=True)
class Event:
    kind: str
    timestamp: int
    sender: str
    position_id: str = ""
    is_nft: bool = False
    lower: float = math.nan
    upper: float = math.nan
    liquidity: float = 0.0
    q_before: float = math.nan
    q_after: float = math.nan
    line: int = 0


@dataclass(frozen=True)
class ParseIssue:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


@dataclass
class EventLog:
    events: list
    errors: list = field(default_factory=list)

    def __len__(self):
        return len(self.events)

    @property
    def timestamps(self) -> list:
        return [e.timestamp for e in self.events]

    def between(self, start: int, end: int) -> list:
        ts = self.timestamps
        return self.events[bisect_left(ts, start):bisect_left(ts, end)]


_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f"}


def _blank(v) -> bool:
    return v is None or (isinstance(v, str) and v.strip() == "")


def _as_float(rec, key, positive=False, required=True):
    v = rec.get(key)
    if _blank(v):
        if required:
            raise ValueError(f"missing {key}")
        return math.nan
    x = float(v)
    if not math.isfinite(x):
        raise ValueError(f"{key} is not finite")
    if positive and x <= 0:
        raise ValueError(f"{key} must be positive")
    return x


def _as_bool(rec, key):
    v = rec.get(key)
    if isinstance(v, bool):
        return v
    if _blank(v):
        raise ValueError(f"missing {key}")
    s = str(v).strip().lower()
    if s in _TRUE:
        return True
    if s in _FALSE:
        return False
    raise ValueError(f"{key} must be a boolean flag, got {v!r}")


def _event_from_record(rec: dict, line: int) -> Event:
    kind = str(rec.get("kind") or "").strip().lower()
    if kind not in ("swap", "mint", "burn"):
        raise ValueError(f"unknown event kind {rec.get('kind')!r}")
    ts = rec.get("timestamp")
    if _blank(ts):
        raise ValueError("missing timestamp")
    if isinstance(ts, float) and not ts.is_integer():
        raise ValueError("timestamp must be an integer")
    ts = int(ts)
    sender = "" if _blank(rec.get("sender")) else str(rec["sender"]).strip()
    if not sender:
        raise ValueError("missing sender")
    if kind == "swap":
        return Event(kind, ts, sender, q_before=_as_float(rec, "q_before", positive=True),
                     q_after=_as_float(rec, "q_after", positive=True), line=line)
    pid = "" if _blank(rec.get("position_id")) else str(rec["position_id"]).strip()
    if not pid:
        raise ValueError("missing position_id")
    liquidity = _as_float(rec, "liquidity")
    if liquidity < 0:
        raise ValueError("liquidity must be non-negative")
    required = kind == "mint"
    lower = _as_float(rec, "lower", positive=True, required=required)
    upper = _as_float(rec, "upper", positive=True, required=required)
    if not (math.isnan(lower) or math.isnan(upper)) and lower >= upper:
        raise ValueError("lower tick must be below upper tick")
    is_nft = _as_bool(rec, "is_nft") if kind == "mint" else False
    return Event(kind, ts, sender, pid, is_nft, lower, upper, liquidity, line=line)


def _records(source) -> Iterable[tuple[int, dict]]:
    if isinstance(source, (str, Path)):
        path = Path(source)
        text = path.read_text()
        jsonl = path.suffix.lower() in (".jsonl", ".json", ".ndjson")
    else:
        text = source.read()
        jsonl = text.lstrip().startswith("{")
    if jsonl:
        for i, raw in enumerate(text.splitlines(), start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                yield i, exc
                continue
            yield i, rec if isinstance(rec, dict) else ValueError("row is not a JSON object")
    else:
        reader = csv.DictReader(io.StringIO(text))
        if text.strip() and reader.fieldnames is not None:
            unknown = set(reader.fieldnames) - set(EVENT_COLUMNS)
            if "kind" not in reader.fieldnames or "timestamp" not in reader.fieldnames:
                raise PipelineError("events header must name the kind and timestamp columns")
            if unknown:
                raise PipelineError(f"unknown event columns: {', '.join(sorted(unknown))}")
        for rec in reader:
            yield reader.line_num, rec


def parse_events(source) -> EventLog:
    """Parse an event file (path or text stream).

    Malformed rows are skipped and reported with their line number; a
    timestamp that does not strictly increase is a hard error.
    """
    events, errors = [], []
    prev = None
    for line, rec in _records(source):
        if isinstance(rec, Exception):
            errors.append(ParseIssue(line, f"unparseable row: {rec}"))
            continue
        try:
            ev = _event_from_record(rec, line)
        except (ValueError, TypeError) as exc:
            errors.append(ParseIssue(line, str(exc)))
            continue
        if prev is not None and ev.timestamp <= prev.timestamp:
            raise EventOrderError(
                f"timestamp {ev.timestamp} on line {ev.line} does not follow "
                f"timestamp {prev.timestamp} on line {prev.line}"
            )
        events.append(ev)
        prev = ev
    return EventLog(events, errors)


@dataclass(frozen=True)
class PoolHeader:
    name: str
    gamma: float


def load_pool_header(path) -> PoolHeader:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise PipelineError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict) or "gamma" not in doc or "name" not in doc:
        raise PipelineError(f"{path}: pool header needs 'gamma' and 'name'")
    gamma = doc["gamma"]
    if isinstance(gamma, bool) or not isinstance(gamma, (int, float)) or not 0 <= gamma < 1:
        raise PipelineError(f"{path}: gamma must be a number in [0, 1)")
    name = str(doc["name"])
    if not name or "/" in name or name.startswith("."):
        raise PipelineError(f"{path}: pool name must be a plain, non-empty string")
    return PoolHeader(name, float(gamma))


@dataclass(frozen=True)
class PriceRow:
    date: str
    timestamp: int
    point: PricePoint


def _midnight(day: str) -> int:
    d = Date.fromisoformat(day)
    return int(datetime(d.year, d.month, d.day, tzinfo=timezone.utc).timestamp())


def parse_prices(source) -> list[PriceRow]:
    text = Path(source).read_text() if isinstance(source, (str, Path)) else source.read()
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or set(PRICE_COLUMNS) - set(reader.fieldnames):
        raise PipelineError(f"prices header must contain {','.join(PRICE_COLUMNS)}")
    rows = []
    for rec in reader:
        try:
            day = str(rec["date"]).strip()
            ts = _midnight(day)
            point = PricePoint(*(float(rec[k]) for k in ("q", "p_x", "p_y")))
        except (ValueError, TypeError) as exc:
            raise PipelineError(f"prices line {reader.line_num}: {exc}") from None
        if rows and ts <= rows[-1].timestamp:
            raise PipelineError(f"prices line {reader.line_num}: date {day} does not follow {rows[-1].date}")
        rows.append(PriceRow(day, ts, point))
    return rows


@dataclass(frozen=True)
class DayContext:
    index: int
    date: str
    start: int
    end: int
    open: PricePoint
    close: PricePoint

    def __post_init__(self):
        if self.end <= self.start:
            raise PipelineError("day end must follow its start")


def day_contexts(prices: Sequence[PriceRow]) -> list[DayContext]:
    return [DayContext(i, a.date, a.timestamp, b.timestamp, a.point, b.point)
            for i, (a, b) in enumerate(zip(prices[:-1], prices[1:]))]


@dataclass
class PoolInputs:
    header: PoolHeader
    log: EventLog
    prices: list
    events_path: Path = None
    prices_path: Path = None

    @property
    def days(self) -> list[DayContext]:
        return day_contexts(self.prices)


def find_events_file(pool_dir) -> Path:
    pool_dir = Path(pool_dir)
    for name in ("events.csv", "events.jsonl"):
        if (pool_dir / name).exists():
            return pool_dir / name
    raise PipelineError(f"{pool_dir}: no events.csv or events.jsonl")


def load_pool(pool_dir) -> PoolInputs:
    pool_dir = Path(pool_dir)
    if not pool_dir.is_dir():
        raise PipelineError(f"{pool_dir}: not a directory")
    header = load_pool_header(pool_dir / "pool.json")
    events_path = find_events_file(pool_dir)
    prices_path = pool_dir / "prices.csv"
    if not prices_path.exists():
        raise PipelineError(f"{pool_dir}: no prices.csv")
    return PoolInputs(header, parse_events(events_path), parse_prices(prices_path), events_path, prices_path)


# ---------------------------------------------------------------------------
# pool state


@dataclass
class PositionRecord:
    position_id: str
    owner: str
    lower: float
    upper: float
    liquidity: float
    is_nft: bool
    minted_at: int

    @property
    def position(self) -> Position:
        return Position(self.liquidity, self.lower, self.upper)


class PoolState:
    """Open positions obtained by folding mint and burn events."""

    def __init__(self):
        self.positions: dict[str, PositionRecord] = {}

    def apply(self, ev: Event) -> None:
        if ev.kind == "swap":
            return
        rec = self.positions.get(ev.position_id)
        if ev.kind == "mint":
            if rec is None:
                self.positions[ev.position_id] = PositionRecord(
                    ev.position_id, ev.sender, ev.lower, ev.upper, ev.liquidity, ev.is_nft, ev.timestamp)
                return
            if (rec.lower, rec.upper) != (ev.lower, ev.upper):
                raise PipelineError(f"line {ev.line}: mint into {ev.position_id} changes its range")
            rec.liquidity += ev.liquidity
            return
        if rec is None:
            raise PipelineError(f"line {ev.line}: burn of unknown position {ev.position_id}")
        if not math.isnan(ev.lower) and (rec.lower, rec.upper) != (ev.lower, ev.upper):
            raise PipelineError(f"line {ev.line}: burn range differs from position {ev.position_id}")
        remaining = rec.liquidity - ev.liquidity
        if remaining < -1e-9 * max(1.0, rec.liquidity):
            raise PipelineError(f"line {ev.line}: burn exceeds liquidity of {ev.position_id}")
        rec.liquidity = max(0.0, remaining)
        if rec.liquidity == 0:
            del self.positions[ev.position_id]

    def copy(self) -> "PoolState":
        out = PoolState()
        out.positions = {k: PositionRecord(**vars(v)) for k, v in self.positions.items()}
        return out


def pool_state_at(log: EventLog, t: int) -> PoolState:
    """Positions open just before time ``t``."""
    state = PoolState()
    for ev in log.events:
        if ev.timestamp >= t:
            break
        state.apply(ev)
    return state


# ---------------------------------------------------------------------------
# players


@dataclass
class Selection:
    players: list  # (owner, investment) in rank order
    player_positions: dict  # owner -> list of PositionRecord
    excluded: list  # PositionRecord open at day start but not retained
    budget_fraction: float
    warnings: list = field(default_factory=list)


def _investment(rec: PositionRecord, q: float, p_y: float) -> float:
    return rec.liquidity * float(liquidity_price(rec.lower, rec.upper, q, p_y))


def select_players(log: EventLog, day: DayContext, state: PoolState | None = None) -> Selection:
    """Retain the largest NFT owners whose positions span the whole day.

    Investment is valued at the day-start shifted prices. At most thirty
    owners are kept, cut to the shortest prefix holding 99% of the top
    thirty's total.
    """
    state = state if state is not None else pool_state_at(log, day.start)
    touched = {ev.position_id for ev in log.between(day.start, day.end) if ev.kind != "swap"}
    opening = day.open.shifted()
    value = {pid: _investment(rec, opening.q, opening.p_y) for pid, rec in state.positions.items()}
    by_owner: dict[str, list] = {}
    for pid, rec in state.positions.items():
        if rec.is_nft and pid not in touched and rec.liquidity > 0:
            by_owner.setdefault(rec.owner, []).append(rec)
    ranked = sorted(((sum(value[r.position_id] for r in recs), owner) for owner, recs in by_owner.items()),
                    key=lambda x: (-x[0], x[1]))
    top = ranked[:MAX_PLAYERS]
    keep = len(top)
    if top:
        total = sum(v for v, _ in top)
        cum = np.cumsum([v for v, _ in top])
        keep = int(np.searchsorted(cum, TOP_SHARE * total, side="left")) + 1
        keep = min(keep, len(top))
    retained = top[:keep]
    owners = {o for _, o in retained}
    player_positions = {o: sorted(by_owner[o], key=lambda r: r.position_id) for o in owners}
    kept_ids = {r.position_id for recs in player_positions.values() for r in recs}
    excluded = [rec for pid, rec in sorted(state.positions.items()) if pid not in kept_ids]
    all_value = sum(value.values())
    kept_value = sum(v for v, _ in retained)
    warnings = [] if retained else [f"{day.date}: no qualifying player positions"]
    return Selection([(o, v) for v, o in retained], player_positions, excluded,
                     kept_value / all_value if all_value > 0 else 0.0, warnings)


# ---------------------------------------------------------------------------
# grids and fees


def _split(pos: Position, ticks: np.ndarray) -> list[Position]:
    inner = ticks[(ticks > pos.lower) & (ticks < pos.upper)]
    edges = [pos.lower, *inner.tolist(), pos.upper]
    return [Position(pos.liquidity, a, b) for a, b in zip(edges[:-1], edges[1:])]


def build_tick_grid(player_positions: Sequence[Position], nonplayer_positions: Sequence[Position] = (),
                    extra_ticks: Iterable[float] = ()):
    """Union grid of all endpoints, with every position split at inner ticks.

    Returns ``(grid, player_pieces, nonplayer_pieces)``.
    """
    ends = [p.lower for p in (*player_positions, *nonplayer_positions)]
    ends += [p.upper for p in (*player_positions, *nonplayer_positions)]
    ticks = np.unique(np.array(ends + [float(t) for t in extra_ticks], dtype=float))
    grid = TickGrid(tuple(ticks))
    players = [piece for p in player_positions for piece in _split(p, ticks)]
    others = [piece for p in nonplayer_positions for piece in _split(p, ticks)]
    return grid, players, others


def active_liquidity(positions: Iterable[Position], grid: TickGrid) -> np.ndarray:
    """Liquidity covering each atomic range (positions must end on ticks)."""
    diff = np.zeros(grid.M + 1)
    t = grid.array
    for p in positions:
        i = int(np.searchsorted(t, p.lower))
        j = int(np.searchsorted(t, p.upper))
        if i > grid.M or j > grid.M or t[i] != p.lower or t[j] != p.upper:
            raise PipelineError(f"position ({p.lower}, {p.upper}) does not end on grid ticks")
        diff[i] += p.liquidity
        diff[j] -= p.liquidity
    return np.cumsum(diff)[:-1]


@dataclass
class FeeAttribution:
    fees: np.ndarray  # dollars per atomic range
    player_fees: np.ndarray
    fee_y: np.ndarray  # Y tokens paid per range
    fee_x: np.ndarray  # X tokens paid per range
    uncovered_segments: np.ndarray  # ranges crossed by a trade while holding no liquidity


def attribute_fees(trades, grid: TickGrid, player_k, nonplayer_k, gamma: float, day_end: PricePoint) -> FeeAttribution:
    """Fees earned on each atomic range by a sequence of trades.

    ``trades`` is a ``(T, 2)`` array of ``(q, q')`` pairs. ``nonplayer_k`` is
    either one vector for the whole day or a ``(T, M)`` array with the
    liquidity present at each trade. A rising price is paid for in Y, a
    falling one in X; tokens are valued at the day-end shifted prices.
    """
    trades = np.asarray(trades, dtype=float).reshape(-1, 2)
    M = grid.M
    player_k = np.asarray(player_k, dtype=float)
    nonplayer_k = np.asarray(nonplayer_k, dtype=float)
    zero = np.zeros(M)
    if trades.size == 0:
        return FeeAttribution(zero, zero.copy(), zero.copy(), zero.copy(), np.zeros(M, bool))
    t = grid.array
    q, q_new = trades[:, 0], trades[:, 1]
    lo, hi = np.minimum(q, q_new), np.maximum(q, q_new)
    outside = (lo < t[0]) | (hi > t[-1]) | (lo <= 0)
    if np.any(outside):
        i = int(np.flatnonzero(outside)[0])
        raise PipelineError(f"trade {i} ({q[i]!r} -> {q_new[i]!r}) leaves the grid hull [{t[0]!r}, {t[-1]!r}]")
    seg_lo = np.clip(lo[:, None], t[:-1], t[1:])
    seg_hi = np.clip(hi[:, None], t[:-1], t[1:])
    crossed = seg_hi > seg_lo
    J = player_k + np.broadcast_to(nonplayer_k, (len(trades), M))
    rising = (q_new > q)[:, None]
    y_in = J * (np.sqrt(seg_hi) - np.sqrt(seg_lo))
    x_in = J * (1.0 / np.sqrt(seg_lo) - 1.0 / np.sqrt(seg_hi))
    fee_y = np.where(rising & crossed, gamma * y_in, 0.0)
    fee_x = np.where(~rising & crossed, gamma * x_in, 0.0)
    closing = day_end.shifted()
    dollars = fee_y * closing.p_y + fee_x * closing.p_x
    with np.errstate(divide="ignore", invalid="ignore"):
        share = np.where(J > 0, player_k / J, 0.0)
    return FeeAttribution(
        fees=dollars.sum(axis=0),
        player_fees=(dollars * share).sum(axis=0),
        fee_y=fee_y.sum(axis=0),
        fee_x=fee_x.sum(axis=0),
        uncovered_segments=np.any(crossed & (J <= 0), axis=0),
    )


def estimate_chi(kappa, fees, player_fees):
    """Non-player weight per range from the player fee share.

    Returns ``(chi, uncovered)``: ranges with fees but no player fees cannot
    be estimated and are flagged (their ``chi`` entry is left at 0).
    """
    kappa, f, fp = (np.asarray(x, dtype=float) for x in (kappa, fees, player_fees))
    if np.any(fp > f * (1 + 1e-12) + 1e-300):
        m = int(np.flatnonzero(fp > f * (1 + 1e-12) + 1e-300)[0])
        raise PipelineError(f"range {m}: player fees {fp[m]!r} exceed total fees {f[m]!r}")
    fp = np.minimum(fp, f)
    uncovered = (f > 0) & (fp == 0)
    chi = np.zeros_like(f)
    ok = fp > 0
    chi[ok] = kappa[ok] * (f[ok] - fp[ok]) / fp[ok]
    return chi, uncovered


# ---------------------------------------------------------------------------
# daily games


@dataclass
class DailyGame:
    day: DayContext
    spec: GameSpec
    gt: AtomicProfile
    uncovered: np.ndarray
    budget_fraction: float
    attribution: FeeAttribution
    warnings: list = field(default_factory=list)


def _positions_alive(log: EventLog, day: DayContext, state: PoolState) -> list[Position]:
    seen = {pid: rec.position for pid, rec in state.positions.items()}
    for ev in log.between(day.start, day.end):
        if ev.kind == "mint" and ev.position_id not in seen:
            seen[ev.position_id] = Position(ev.liquidity, ev.lower, ev.upper)
    return list(seen.values())


def build_daily_game(log: EventLog, day: DayContext, gamma: float, extra_ticks: Iterable[float] = (),
                     alpha: float = 1.0, state: PoolState | None = None) -> DailyGame:
    """Atomic game and ground-truth profile of one day.

    ``extra_ticks`` refines the grid (for evaluation on a union grid); all
    fees are recomputed on the refined grid so nothing is interpolated.
    """
    state = state if state is not None else pool_state_at(log, day.start)
    sel = select_players(log, day, state)
    if not sel.players:
        raise EmptyDayError(sel.warnings[0])
    owners = [o for o, _ in sel.players]
    own_pos = {o: [r.position for r in sel.player_positions[o]] for o in owners}
    everything = _positions_alive(log, day, state)
    grid, _, _ = build_tick_grid([p for ps in own_pos.values() for p in ps], everything, extra_ticks)
    ticks = grid.array
    gt = np.vstack([active_liquidity([s for p in own_pos[o] for s in _split(p, ticks)], grid) for o in owners])
    kappa = gt.sum(axis=0)

    # replay the day to know the non-player liquidity in place at every trade
    live = state.copy()
    player_ids = {r.position_id for o in owners for r in sel.player_positions[o]}

    def nonplayer_vector():
        return active_liquidity(
            [s for pid, r in live.positions.items() if pid not in player_ids for s in _split(r.position, ticks)], grid)

    current = nonplayer_vector()
    trades, nonplayer = [], []
    for ev in log.between(day.start, day.end):
        if ev.kind == "swap":
            trades.append((ev.q_before, ev.q_after))
            nonplayer.append(current)
        else:
            live.apply(ev)
            current = nonplayer_vector()
    nonplayer = np.array(nonplayer).reshape(len(trades), grid.M)
    attribution = attribute_fees(trades, grid, kappa, nonplayer, gamma, day.close)

    chi, uncovered = estimate_chi(kappa, attribution.fees, attribution.player_fees)
    warnings = list(sel.warnings)
    if np.any(uncovered):
        covered = attribution.player_fees > 0
        fill = float(chi[covered].mean()) if np.any(covered) else 0.0
        chi[uncovered] = fill
        warnings.append(f"{day.date}: {int(uncovered.sum())} uncovered range(s), chi imputed as {fill!r}")

    opening, closing = day.open.shifted(), day.close.shifted()
    # the loss rate is non-negative; clip cancellation noise of order 1e-16
    taus = np.maximum(il_rate(grid.lower, grid.upper, opening.q, closing.q, opening.p_y, closing.p_y), 0.0)
    spec = GameSpec(grid, alpha, opening.q, attribution.fees, taus, chi, np.ones(len(owners)),
                    tuple(owners), opening.p_y)
    # budgets equal the ground-truth spend exactly
    spec = spec.replace(budgets=gt @ spec.eps)
    return DailyGame(day, spec, AtomicProfile(gt, tuple(owners)), uncovered, sel.budget_fraction,
                     attribution, warnings)


def build_reactive_game(prev: GameSpec | None, q0: float, p_y0: float, players: Sequence[tuple],
                        r: float = REACTIVE_FLUCTUATION) -> GameSpec:
    """Yesterday's game re-priced at today's opening with a fluctuation ``r``."""
    if prev is None:
        raise PipelineError("no previous day")
    dist = LogUniformFluctuation(r)
    taus = [max(0.0, expected_il_rate(a, b, q0, dist)) for a, b in zip(prev.grid.lower, prev.grid.upper)]
    ids, budgets = zip(*players)
    return prev.replace(q0=q0, p_y0=p_y0, taus=taus, budgets=list(budgets), player_ids=tuple(ids))


def inert_range(history: Sequence[DailyGame], expansion: float) -> tuple[float, float]:
    """Single range around the ticks that earned fees over the history window."""
    if expansion < 1:
        raise PipelineError(f"expansion factor must be at least 1, got {expansion!r}")
    lows, highs = [], []
    for g in history:
        paid = g.spec.fees > 0
        if np.any(paid):
            lows.append(g.spec.grid.lower[paid].min())
            highs.append(g.spec.grid.upper[paid].max())
    if not lows:
        lows = [g.spec.grid.array[0] for g in history]
        highs = [g.spec.grid.array[-1] for g in history]
    return float(min(lows)) / expansion, float(max(highs)) * expansion


def build_inert_game(history: Sequence[DailyGame], expansion: float, q0: float, p_y0: float,
                     players: Sequence[tuple]) -> GameSpec:
    """One-range game built from averages over up to seven previous days."""
    if not history:
        raise PipelineError("inert game needs at least one previous day")
    history = list(history)[-INERT_WINDOW:]
    lo, hi = inert_range(history, expansion)
    grid = TickGrid((lo, hi))
    eps1 = float(liquidity_price(lo, hi, q0, p_y0))
    fees = float(np.mean([g.spec.fees.sum() for g in history]))
    nonplayer_usd = float(np.mean([g.spec.chis @ g.spec.eps for g in history]))
    moves = [max(g.day.close.q / g.day.open.q, g.day.open.q / g.day.close.q) for g in history]
    r = float(np.mean(moves))
    dist = LogUniformFluctuation(r) if r > 1 else DiscretePriceDistribution.point_mass(q0)
    tau = max(0.0, expected_il_rate(lo, hi, q0, dist))
    ids, budgets = zip(*players)
    return GameSpec(grid, history[-1].spec.alpha, q0, [fees], [tau], [nonplayer_usd / eps1],
                    list(budgets), tuple(ids), p_y0)


def price_shift_error(p: PricePoint) -> float:
    """``log`` ratio of the shifted to the raw X dollar price (Y's is its negative)."""
    return 0.5 * (math.log(p.p_y) + math.log(p.q) - math.log(p.p_x))

"""Command-line entry point: ``clmm-game {ingest,solve,evaluate,report}``.

Exit codes: 0 success, 1 solver did not converge, 2 bad input.
"""

from __future__ import annotations

import argparse
import math
import shutil
import sys
from datetime import date as Date
from pathlib import Path

import numpy as np

from . import __version__
from .game import validate_spec
from .io import SchemaError, dumps, load_profile, load_spec, profile_to_json, read_json, spec_to_json, write_json
from .pipeline import EmptyDayError, PipelineError, build_daily_game, load_pool
from .solver import SolverOptions, kkt_residuals, solve_ne, structure_checks, waterfill_check
from .strategies import (
    DEFAULT_STRATEGIES,
    STRATEGIES,
    SuiteConfig,
    build_daily_games,
    read_report_csv,
    report_csv,
    run_strategy_suite,
    summarize,
)

EXIT_OK, EXIT_NO_CONVERGENCE, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _clean(obj):
    # JSON has no inf/nan; report them as null
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _options(args) -> SolverOptions:
    try:
        return SolverOptions(omega=args.omega, max_iters=args.max_iters, tol_kkt=args.tol, seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _date(text: str) -> str:
    try:
        return Date.fromisoformat(text).isoformat()
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from None


def _in_range(day: str, args) -> bool:
    return (args.date_from is None or day >= args.date_from) and (args.date_to is None or day <= args.date_to)


def _emit(doc, out) -> None:
    if out:
        write_json(out, doc)
    else:
        sys.stdout.write(dumps(doc))


# ---------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    pool = load_pool(args.pool)
    if pool.log.errors:
        for issue in pool.log.errors:
            print(f"error: {pool.events_path.name} {issue}", file=sys.stderr)
        return EXIT_INPUT
    alpha = 1.0 if args.alpha_override is None else args.alpha_override
    if not 0 < alpha <= 1:
        raise InputError(f"alpha out of range (0,1]: {alpha}")
    root = Path(args.out) / pool.header.name
    inputs = root / "inputs"
    inputs.mkdir(parents=True, exist_ok=True)
    for src in (Path(args.pool) / "pool.json", pool.events_path, pool.prices_path):
        shutil.copyfile(src, inputs / src.name)

    warnings, days = [], []
    if not pool.log.events:
        warnings.append("events file holds no events")
    for day in pool.days:
        if not _in_range(day.date, args):
            continue
        try:
            game = build_daily_game(pool.log, day, pool.header.gamma, alpha=alpha)
        except EmptyDayError as exc:
            warnings.append(str(exc))
            continue
        warnings += game.warnings
        write_json(root / day.date / "spec.json", spec_to_json(game.spec))
        write_json(root / day.date / "gt.json", profile_to_json(game.gt))
        days.append({
            "date": day.date,
            "players": len(game.spec.player_ids),
            "ranges": game.spec.M,
            "budget_fraction": game.budget_fraction,
            "uncovered_ranges": int(game.uncovered.sum()),
        })
    manifest = {
        "version": __version__,
        "pool": pool.header.name,
        "gamma": pool.header.gamma,
        "alpha": alpha,
        "inputs": {"pool": "inputs/pool.json", "events": f"inputs/{pool.events_path.name}",
                   "prices": f"inputs/{pool.prices_path.name}"},
        "days": days,
        "warnings": warnings,
    }
    write_json(root / "manifest.json", manifest)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"ingested {len(days)} day(s) into {root}")
    return EXIT_OK


def cmd_solve(args) -> int:
    spec = load_spec(args.spec)
    if args.alpha_override is not None:
        spec = spec.replace(alpha=args.alpha_override)
    problems = validate_spec(spec)
    if problems:
        raise InputError("; ".join(problems))
    if args.check_only:
        if not args.profile:
            raise InputError("--check-only needs --profile")
        K = load_profile(args.profile).k
        if K.shape != (spec.N, spec.M):
            raise InputError(f"profile shape {K.shape} does not match spec {(spec.N, spec.M)}")
        kkt = kkt_residuals(spec, K)
        _emit(_clean({"residuals": kkt.as_dict(), "lambda": kkt.lambda_.tolist(), "mu": kkt.mu.tolist()}), args.out)
        return EXIT_OK
    init = load_profile(args.profile).k if args.profile else None
    result = solve_ne(spec, _options(args), init=init)
    doc = result.to_json()
    doc["players"] = list(spec.player_ids)
    doc["checks"] = {
        "waterfill": vars(waterfill_check(spec, result)),
        "structure": vars(structure_checks(spec, result)),
    }
    doc["message"] = result.message
    _emit(_clean(doc), args.out)
    if not result.converged:
        print(f"error: {result.message}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _pool_root(args) -> Path:
    root = Path(args.out) / args.pool
    if not (root / "manifest.json").exists():
        raise InputError(f"{root}: no manifest.json (run ingest first)")
    return root


def cmd_evaluate(args) -> int:
    root = _pool_root(args)
    manifest = read_json(root / "manifest.json")
    pool = load_pool(root / "inputs")
    strategies = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    unknown = set(strategies) - set(STRATEGIES)
    if unknown or not strategies:
        raise InputError(f"unknown strategies: {', '.join(sorted(unknown)) or '(none)'}")
    if args.expansion < 1:
        raise InputError(f"expansion factor must be at least 1, got {args.expansion}")
    if args.fluctuation <= 1:
        raise InputError(f"fluctuation must exceed 1, got {args.fluctuation}")
    alpha = manifest.get("alpha", 1.0) if args.alpha_override is None else args.alpha_override
    games, warnings = build_daily_games(pool.log, pool.days, pool.header.gamma, alpha=alpha)
    dates = {d["date"] for d in manifest["days"] if _in_range(d["date"], args)}
    cfg = SuiteConfig(strategies, args.expansion, args.fluctuation, _options(args), pool.header.name)
    rows = run_strategy_suite(pool.log, pool.header.gamma, games, cfg, dates=dates, jobs=args.jobs)
    (root / "report.csv").write_text(report_csv(rows))
    write_json(root / "summary.json", _clean(summarize(rows)))
    print(f"wrote {len(rows)} row(s) to {root / 'report.csv'}")
    return EXIT_OK


def cmd_report(args) -> int:
    root = _pool_root(args)
    path = root / "report.csv"
    if not path.exists():
        raise InputError(f"{path}: missing (run evaluate first)")
    rows = [r for r in read_report_csv(path.read_text()) if _in_range(r["date"], args)]
    if args.strategies:
        keep = {s.strip() for s in args.strategies.split(",")}
        rows = [r for r in rows if r["strategy"] in keep]
    summary = _clean(summarize(rows))
    write_json(root / "summary.json", summary)
    sys.stdout.write(dumps(summary))
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_solver_flags(p):
    p.add_argument("--omega", type=float, default=None, help="initial relaxation damping in (0, 1] (default min(0.5, 2/N))")
    p.add_argument("--max-iters", type=int, default=10_000, help="relaxation iteration cap (default 10000)")
    p.add_argument("--tol", type=float, default=1e-8, help="largest KKT residual accepted as converged (default 1e-8)")
    p.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    p.add_argument("--alpha-override", type=float, default=None, help="replace the fee-share exponent alpha")


def _add_range_flags(p):
    p.add_argument("--from", dest="date_from", type=_date, default=None, help="first date (YYYY-MM-DD) to include")
    p.add_argument("--to", dest="date_to", type=_date, default=None, help="last date (YYYY-MM-DD) to include")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clmm-game", description="Liquidity provision games on CLMM pools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build daily games from a pool directory")
    p.add_argument("--pool", required=True, help="directory with pool.json, events.csv|jsonl and prices.csv")
    p.add_argument("--out", required=True, help="output root; files go to OUT/<pool name>/<date>/")
    _add_range_flags(p)
    p.add_argument("--alpha-override", type=float, default=None, help="fee-share exponent of the daily games (default 1)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("solve", help="solve one game spec for its Nash equilibrium")
    p.add_argument("spec", help="game spec JSON file")
    p.add_argument("--profile", help="profile JSON: starting point, or the profile to certify with --check-only")
    p.add_argument("--check-only", action="store_true", help="only report KKT residuals of --profile")
    p.add_argument("--out", help="write the result here instead of stdout")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="score strategies on ingested days")
    p.add_argument("--pool", required=True, help="pool name as written by ingest")
    p.add_argument("--out", required=True, help="output root used by ingest")
    _add_range_flags(p)
    p.add_argument("--strategies", default=",".join(DEFAULT_STRATEGIES),
                   help=f"comma-separated subset of {','.join(STRATEGIES)}")
    p.add_argument("--expansion", type=float, default=2.0, help="inert range expansion factor E >= 1 (default 2)")
    p.add_argument("--fluctuation", type=float, default=1.1, help="reactive game fluctuation r > 1 (default 1.1)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes across days (default 1)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="summarise an evaluation report per strategy")
    p.add_argument("--pool", required=True, help="pool name as written by ingest")
    p.add_argument("--out", required=True, help="output root used by ingest")
    _add_range_flags(p)
    p.add_argument("--strategies", default=None, help="only summarise these strategies")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, SchemaError, PipelineError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

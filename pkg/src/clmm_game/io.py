"""JSON (de)serialisation of game specs, profiles and equilibrium results."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .amm import TickGrid
from .game import AtomicProfile, GameSpec

_SPEC_KEYS = ("alpha", "q0", "p_y0", "ticks", "fees", "taus", "chis", "players")


class SchemaError(ValueError):
    """Input document does not match the expected JSON layout."""


def _floats(doc, key):
    value = doc[key]
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise SchemaError(f"'{key}' must be a list of numbers")
    return [float(v) for v in value]


def _number(doc, key):
    value = doc[key]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise SchemaError(f"'{key}' must be a number")
    return float(value)


def spec_to_json(spec: GameSpec) -> dict:
    return {
        "alpha": spec.alpha,
        "q0": spec.q0,
        "p_y0": spec.p_y0,
        "ticks": list(spec.grid.ticks),
        "fees": spec.fees.tolist(),
        "taus": spec.taus.tolist(),
        "chis": spec.chis.tolist(),
        "players": [{"id": pid, "budget": float(b)} for pid, b in zip(spec.player_ids, spec.budgets)],
    }


def spec_from_json(doc: dict) -> GameSpec:
    """Build a spec from its JSON form; ``p_y0`` defaults to 1.

    Only the layout is checked here; value invariants are left to
    :func:`clmm_game.game.validate_spec`.
    """
    if not isinstance(doc, dict):
        raise SchemaError("game spec must be a JSON object")
    missing = [k for k in _SPEC_KEYS if k not in doc and k != "p_y0"]
    if missing:
        raise SchemaError(f"game spec is missing keys: {', '.join(missing)}")
    players = doc["players"]
    if not isinstance(players, list) or not all(isinstance(p, dict) and {"id", "budget"} <= p.keys() for p in players):
        raise SchemaError("'players' must be a list of {id, budget} objects")
    try:
        grid = TickGrid(_floats(doc, "ticks"))
    except ValueError as exc:
        raise SchemaError(f"invalid ticks: {exc}") from None
    return GameSpec(
        grid=grid,
        alpha=_number(doc, "alpha"),
        q0=_number(doc, "q0"),
        p_y0=_number(doc, "p_y0") if "p_y0" in doc else 1.0,
        fees=_floats(doc, "fees"),
        taus=_floats(doc, "taus"),
        chis=_floats(doc, "chis"),
        budgets=[_number(p, "budget") for p in players],
        player_ids=tuple(str(p["id"]) for p in players),
    )


def profile_to_json(profile: AtomicProfile) -> dict:
    return {"players": list(profile.players), "k": profile.k.tolist()}


def profile_from_json(doc: dict) -> AtomicProfile:
    if not isinstance(doc, dict) or "k" not in doc:
        raise SchemaError("profile must be an object with a 'k' matrix")
    k = doc["k"]
    if not isinstance(k, list) or not all(isinstance(r, list) for r in k):
        raise SchemaError("'k' must be a list of rows")
    if len({len(r) for r in k}) > 1:
        raise SchemaError("rows of 'k' differ in length")
    return AtomicProfile(np.array(k, dtype=float, ndmin=2), tuple(doc.get("players", ())))


def dumps(doc) -> str:
    """Deterministic JSON text (fixed key order, round-trip float repr)."""
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def write_json(path, doc) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None


def load_spec(path) -> GameSpec:
    return spec_from_json(read_json(path))


def load_profile(path) -> AtomicProfile:
    return profile_from_json(read_json(path))

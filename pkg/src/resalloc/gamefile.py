"""JSON game files.

Schema::

    {
      "players": 2,
      "rules": {
        "welfare": {"cover": [0, 1, 1]},          # w(0..N)
        "utility": {"share": [1, 0.5]}            # f(1..N)
      },
      "resources": [{"welfare": "cover", "utility": "share", "scale": 1.0}, ...],
      "actions": [[[], [0], [1]], [[], [1]]],     # entry 0 of every list is []
      "metadata": {}                              # optional, free-form
    }

``scale`` defaults to 1. Unknown top-level keys are rejected.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

from .errors import ValidationError
from .game import Resource, ResourceGame, UtilityRule, WelfareRule

TOP_KEYS = {"players", "rules", "resources", "actions", "metadata"}


def _need(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise ValidationError(f"{where}: missing field {key!r}")
    val = obj[key]
    if not isinstance(val, kind) or isinstance(val, bool):
        raise ValidationError(f"{where}: field {key!r} has the wrong type")
    return val


def _numbers(seq, where: str) -> tuple:
    if not isinstance(seq, list) or not seq:
        raise ValidationError(f"{where}: expected a non-empty list of numbers")
    out = []
    for v in seq:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValidationError(f"{where}: entries must be finite numbers")
        out.append(float(v))
    return tuple(out)


def game_from_dict(data: dict) -> ResourceGame:
    if not isinstance(data, dict):
        raise ValidationError("game file must hold a JSON object")
    extra = set(data) - TOP_KEYS
    if extra:
        raise ValidationError(f"unknown fields: {sorted(extra)}")
    players = _need(data, "players", int, "game")
    rules = _need(data, "rules", dict, "game")
    welfare = {str(k): WelfareRule(_numbers(v, f"welfare rule {k!r}"), label=str(k))
               for k, v in _need(rules, "welfare", dict, "rules").items()}
    utility = {str(k): UtilityRule(_numbers(v, f"utility rule {k!r}"), label=str(k))
               for k, v in _need(rules, "utility", dict, "rules").items()}
    resources = []
    for r, item in enumerate(_need(data, "resources", list, "game")):
        if not isinstance(item, dict):
            raise ValidationError(f"resource {r}: expected an object")
        scale = item.get("scale", 1.0)
        if isinstance(scale, bool) or not isinstance(scale, (int, float)):
            raise ValidationError(f"resource {r}: scale must be a number")
        resources.append(Resource(_need(item, "welfare", str, f"resource {r}"),
                                  _need(item, "utility", str, f"resource {r}"), float(scale)))
    actions = _need(data, "actions", list, "game")
    if len(actions) != players:
        raise ValidationError(f"'players' is {players} but {len(actions)} action lists are given")
    parsed = []
    for i, player in enumerate(actions):
        if not isinstance(player, list) or not player:
            raise ValidationError(f"player {i}: action list must be a non-empty list")
        if player[0] != []:
            raise ValidationError(f"player {i}: entry 0 must be the empty action []")
        acts = []
        for k, act in enumerate(player):
            if not isinstance(act, list) or any(isinstance(r, bool) or not isinstance(r, int) for r in act):
                raise ValidationError(f"player {i}, action {k}: expected a list of resource indices")
            if len(set(act)) != len(act):
                raise ValidationError(f"player {i}, action {k}: repeated resource index")
            acts.append(tuple(act))
        parsed.append(tuple(acts))
    meta = data.get("metadata", {})
    if not isinstance(meta, dict):
        raise ValidationError("metadata must be an object")
    return ResourceGame(welfare, utility, tuple(resources), tuple(parsed), meta)


def game_to_dict(game: ResourceGame) -> dict:
    return {
        "players": game.n_players,
        "rules": {
            "welfare": {k: list(v.values) for k, v in sorted(game.welfare_rules.items())},
            "utility": {k: list(v.values) for k, v in sorted(game.utility_rules.items())},
        },
        "resources": [{"welfare": r.welfare, "utility": r.utility, "scale": r.scale} for r in game.resources],
        "actions": [[list(a) for a in player] for player in game.actions],
        "metadata": dict(game.metadata),
    }


def load_game(path) -> ResourceGame:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return game_from_dict(data)


def dump_game(game: ResourceGame) -> str:
    return json.dumps(game_to_dict(game), indent=2, sort_keys=True) + "\n"


def load_rule(path, kind: str):
    """Read a rule file: either a bare list or ``{"values": [...], "label": ...}``."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg})") from exc
    label = Path(path).stem
    if isinstance(data, dict):
        label = str(data.get("label", label))
        data = data.get("values")
    vals = _numbers(data, f"rule file {path}")
    if kind == "welfare":
        return WelfareRule(vals, label=label)
    return UtilityRule(vals, label=label)

import json

import pytest

from resalloc.errors import ValidationError
from resalloc.gamefile import dump_game, game_from_dict, load_game, load_rule

GOOD = {
    "players": 2,
    "rules": {"welfare": {"cover": [0, 1, 1]}, "utility": {"share": [1, 0.5]}},
    "resources": [{"welfare": "cover", "utility": "share"}, {"welfare": "cover", "utility": "share", "scale": 2}],
    "actions": [[[], [0], [1]], [[], [1]]],
}


def mutate(**kw):
    d = json.loads(json.dumps(GOOD))
    d.update(kw)
    return d


def test_round_trip(tmp_path):
    g = game_from_dict(GOOD)
    assert g.n_players == 2 and list(g.scales) == [1.0, 2.0]
    p = tmp_path / "g.json"
    p.write_text(dump_game(g))
    h = load_game(p)
    assert h.actions == g.actions
    assert dump_game(h) == dump_game(g)


@pytest.mark.parametrize("data", [
    mutate(actions=[[[0]], [[], [1]]]),
    mutate(actions=[[[], [0], []], [[], [1]]]),
    mutate(actions=[[[], [5]], [[], [1]]]),
    mutate(players=3),
    mutate(extra=1),
    mutate(resources=[{"welfare": "nope", "utility": "share"}]),
    mutate(rules={"welfare": {"cover": [1, 1]}, "utility": {"share": [1]}}),
    mutate(rules={"welfare": {"cover": [0, 1]}, "utility": {"share": [-1]}}),
    mutate(actions=[[[], [0, 0]], [[], [1]]]),
    [],
])
def test_rejects_invalid(data):
    with pytest.raises(ValidationError):
        game_from_dict(data)


def test_bad_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(ValidationError):
        load_game(p)
    with pytest.raises(ValidationError):
        load_game(tmp_path / "missing.json")


def test_rule_files(tmp_path):
    p = tmp_path / "w.json"
    p.write_text("[0, 1, 1.5]")
    assert load_rule(p, "welfare").values == (0.0, 1.0, 1.5)
    q = tmp_path / "f.json"
    q.write_text(json.dumps({"label": "half", "values": [1, 0.5]}))
    f = load_rule(q, "utility")
    assert f.label == "half" and f.values == (1.0, 0.5)

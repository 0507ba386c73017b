import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pacsg.harness import read_model_text
from pacsg.model import (
    GOAL_LOOP, ModelError, Player, is_exit, parse_model, post, serialize_model, validate,
)

from .randgames import random_game


@pytest.fixture
def fig1():
    return parse_model(read_model_text("fig1"))


@pytest.fixture
def fig1_full():
    return parse_model(read_model_text("fig1_full"))


def doc(**over):
    base = {
        "type": "sg", "pmin": "1/2", "initial": "s", "goal": ["g"],
        "states": [
            {"name": "s", "player": "max", "actions": [{"name": "a", "to": {"g": "1/2", "s": "1/2"}}]},
            {"name": "g", "player": "max"},
        ],
    }
    base.update(over)
    return json.dumps(base)


def test_fig1_shape(fig1):
    assert fig1.num_states == 4
    assert fig1.players[fig1.state("s0")] is Player.MIN
    assert fig1.players[fig1.state("s1")] is Player.MAX
    assert validate(fig1) == []
    assert fig1.is_exact and fig1.pmin == 0.5


def test_goal_states_get_a_self_loop(fig1):
    g = fig1.state("target")
    (act,) = fig1.actions[g]
    assert act.name == GOAL_LOOP and act.targets == (g,)
    assert post(fig1, g, 0) == {g}


def test_single_goal_state_game():
    game = parse_model(json.dumps({"type": "sg", "pmin": 1, "initial": "g", "goal": ["g"],
                                   "states": [{"name": "g", "player": "max"}]}))
    assert game.num_states == 1 and game.goal == {0}


def test_post_and_exit(fig1, fig1_full):
    s0, s1 = fig1.state("s0"), fig1.state("s1")
    assert post(fig1, s0, fig1.action("s0", "a1")) == {s1}
    _, b2 = fig1_full.action("s1", "b2")
    names = {fig1_full.names[t] for t in post(fig1_full, fig1_full.state("s1"), b2)}
    assert names == {"sink", "target", "s1"}
    T = {fig1_full.state("s0"), fig1_full.state("s1")}
    assert is_exit(fig1_full, fig1_full.state("s1"), b2, T)
    assert not is_exit(fig1_full, fig1_full.state("s1"), fig1_full.action("s1", "b1"), T)
    everything = set(range(fig1_full.num_states))
    assert not any(is_exit(fig1_full, s, a, everything)
                   for s in everything for a in fig1_full.available(s))


def test_exact_fractions_and_floats():
    game = parse_model(doc())
    assert game.actions[0][0].exact == (Fraction(1, 2), Fraction(1, 2))
    inexact = parse_model(doc(states=[
        {"name": "s", "player": "max", "actions": [{"name": "a", "to": {"g": 0.5, "s": 0.5}}]},
        {"name": "g", "player": "max"}]))
    assert inexact.actions[0][0].exact is None and not inexact.is_exact


@pytest.mark.parametrize("text, message", [
    (doc(states=[{"name": "s", "player": "max", "actions": [{"name": "a", "to": {"g": 0.4, "s": 0.5}}]},
                 {"name": "g", "player": "max"}]), "distribution not stochastic"),
    (doc(states=[{"name": "s", "player": "max", "actions": []}, {"name": "g", "player": "max"}]),
     "blocking state"),
    (doc(pmin=0.6), "p_min exceeds minimum transition"),
    (doc(goal=["nowhere"]), "unknown state"),
    (doc(extra=1), "unknown keys"),
    (doc(type="mdp"), "unsupported type"),
])
def test_rejections(text, message):
    with pytest.raises(ModelError, match=message):
        parse_model(text)


def test_duplicate_keys_rejected():
    text = doc().replace('"type": "sg"', '"type": "sg", "type": "sg"')
    with pytest.raises(ModelError, match="duplicate key"):
        parse_model(text)


def test_syntax_error_has_position():
    with pytest.raises(ModelError, match=r"line 2 column"):
        parse_model('{\n  "type": sg}')


def test_violation_lists_blocking_state():
    with pytest.raises(ModelError) as info:
        parse_model(doc(states=[{"name": "s", "player": "max"}, {"name": "g", "player": "max"}]))
    assert [str(v) for v in info.value.violations] == ["blocking state (state 's')"]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_serialization_round_trip(seed):
    game = random_game(seed)
    again = parse_model(serialize_model(game))
    assert again == game

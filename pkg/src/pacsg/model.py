"""Explicit-state stochastic games: data model, JSON format, validation.

States and actions are dense integer indices. An action is identified by
``(state, local_index)``; names live in side tables and are only used for
parsing and reporting.

Markov decision processes and Markov chains are games without Minimizer
states (and, for chains, a single action per state).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

PROB_TOLERANCE = 1e-9

# Name of the action synthesized for goal states.
GOAL_LOOP = "goal-loop"


class Player(enum.Enum):
    MAX = "max"
    MIN = "min"


class ModelError(ValueError):
    """Raised for syntax or semantic errors in a model document."""

    def __init__(self, message: str, violations: Sequence["Violation"] = ()):
        super().__init__(message)
        self.violations = list(violations)


@dataclass(frozen=True)
class Action:
    name: str
    targets: tuple[int, ...]
    probs: tuple[float, ...]
    # Exact probabilities, present only if the document gave them exactly.
    exact: tuple[Fraction, ...] | None = None

    def distribution(self) -> dict[int, float]:
        return dict(zip(self.targets, self.probs))


@dataclass(frozen=True)
class Violation:
    message: str
    state: str | None = None
    action: str | None = None

    def __str__(self) -> str:
        where = ""
        if self.state is not None:
            where = f" (state {self.state!r}"
            where += f", action {self.action!r})" if self.action is not None else ")"
        return self.message + where


@dataclass(frozen=True)
class StochasticGame:
    names: tuple[str, ...]
    players: tuple[Player, ...]
    actions: tuple[tuple[Action, ...], ...]
    initial: int
    goal: frozenset[int]
    pmin: float
    exact_pmin: Fraction | None = None
    _index: dict[str, int] = field(default=None, repr=False, compare=False, hash=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})

    @property
    def num_states(self) -> int:
        return len(self.names)

    @property
    def is_exact(self) -> bool:
        return all(a.exact is not None for acts in self.actions for a in acts)

    def state(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown state {name!r}") from None

    def action(self, state: int | str, name: str) -> tuple[int, int]:
        """Return the ActionId ``(state, local index)`` of a named action."""
        s = self.state(state) if isinstance(state, str) else state
        for i, act in enumerate(self.actions[s]):
            if act.name == name:
                return (s, i)
        raise KeyError(f"state {self.names[s]!r} has no action {name!r}")

    def available(self, s: int) -> range:
        return range(len(self.actions[s]))

    def is_max(self, s: int) -> bool:
        return self.players[s] is Player.MAX

    def is_mdp(self) -> bool:
        return all(p is Player.MAX for p in self.players)

    def min_probability(self) -> float:
        return min((p for acts in self.actions for a in acts for p in a.probs), default=1.0)

    def with_pmin(self, pmin: float) -> "StochasticGame":
        return StochasticGame(self.names, self.players, self.actions, self.initial,
                              self.goal, float(pmin), None)


def _action_of(game: StochasticGame, s: int, a: int | tuple[int, int]) -> Action:
    if isinstance(a, tuple):
        owner, a = a
        if owner != s:
            raise ValueError(f"action belongs to state {owner}, not {s}")
    if not 0 <= a < len(game.actions[s]):
        raise ValueError(f"action {a} is not available in state {game.names[s]!r}")
    return game.actions[s][a]


def post(game: StochasticGame, s: int, a: int | tuple[int, int]) -> frozenset[int]:
    """Support of the distribution of action ``a`` in state ``s``."""
    return frozenset(_action_of(game, s, a).targets)


def is_exit(game: StochasticGame, s: int, a: int | tuple[int, int], states: Iterable[int]) -> bool:
    """True iff playing ``a`` in ``s`` can leave ``states``."""
    inside = states if isinstance(states, (set, frozenset)) else set(states)
    return any(t not in inside for t in _action_of(game, s, a).targets)


def validate(game: StochasticGame) -> list[Violation]:
    out: list[Violation] = []
    n = game.num_states
    if len(game.players) != n or len(game.actions) != n:
        out.append(Violation("state tables have inconsistent lengths"))
        return out
    if not 0 <= game.initial < n:
        out.append(Violation("initial state out of range"))
    for g in game.goal:
        if not 0 <= g < n:
            out.append(Violation(f"goal state {g} out of range"))
    if not 0 < game.pmin <= 1:
        out.append(Violation("p_min not in (0,1]"))
    actual_min = math.inf
    for s, acts in enumerate(game.actions):
        name = game.names[s]
        if not acts:
            out.append(Violation("blocking state", name))
        for act in acts:
            if len(act.targets) != len(act.probs) or not act.targets:
                out.append(Violation("malformed distribution", name, act.name))
                continue
            if len(set(act.targets)) != len(act.targets):
                out.append(Violation("duplicate successor", name, act.name))
            if any(not 0 <= t < n for t in act.targets):
                out.append(Violation("successor out of range", name, act.name))
            if any(not 0 < p <= 1 for p in act.probs):
                out.append(Violation("probability not in (0,1]", name, act.name))
            if abs(math.fsum(act.probs) - 1.0) > PROB_TOLERANCE:
                out.append(Violation("distribution not stochastic", name, act.name))
            actual_min = min(actual_min, min(act.probs))
        if s in game.goal and not (
            len(acts) == 1 and acts[0].targets == (s,)
        ):
            out.append(Violation("goal state is not absorbing", name))
    if actual_min < math.inf and game.pmin > actual_min + PROB_TOLERANCE:
        out.append(Violation("p_min exceeds minimum transition"))
    return out


# ---------------------------------------------------------------------------
# JSON format

_TOP_KEYS = {"type", "pmin", "initial", "goal", "states"}
_STATE_KEYS = {"name", "player", "actions"}
_ACTION_KEYS = {"name", "to"}


def _no_duplicates(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for k, v in pairs:
        if k in out:
            raise ModelError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _parse_prob(raw: Any, where: str) -> tuple[float, Fraction | None]:
    if isinstance(raw, bool):
        raise ModelError(f"{where}: probability must be a number or fraction string")
    if isinstance(raw, int):
        return float(raw), Fraction(raw)
    if isinstance(raw, float):
        return raw, None
    if isinstance(raw, str):
        try:
            frac = Fraction(raw.strip())
        except (ValueError, ZeroDivisionError):
            raise ModelError(f"{where}: bad fraction {raw!r}") from None
        return float(frac), frac
    raise ModelError(f"{where}: probability must be a number or fraction string")


def _check_keys(obj: Any, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ModelError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ModelError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ModelError(f"{where}: missing keys {sorted(missing)}")


def parse_model(text: str) -> StochasticGame:
    """Parse and validate a JSON model document.

    Goal states are made absorbing: whatever actions the document lists for
    them are replaced by a single self-loop.
    """
    try:
        doc = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ModelError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    _check_keys(doc, _TOP_KEYS, _TOP_KEYS, "model")
    if doc["type"] != "sg":
        raise ModelError(f"model: unsupported type {doc['type']!r}")
    if not isinstance(doc["states"], list) or not doc["states"]:
        raise ModelError("model: 'states' must be a non-empty list")

    names: list[str] = []
    for i, st in enumerate(doc["states"]):
        _check_keys(st, _STATE_KEYS, {"name", "player"}, f"state #{i}")
        if not isinstance(st["name"], str):
            raise ModelError(f"state #{i}: name must be a string")
        if st["name"] in names:
            raise ModelError(f"duplicate state name {st['name']!r}")
        names.append(st["name"])
    index = {n: i for i, n in enumerate(names)}

    def resolve(ref: Any, where: str) -> int:
        if not isinstance(ref, str) or ref not in index:
            raise ModelError(f"{where}: unknown state {ref!r}")
        return index[ref]

    initial = resolve(doc["initial"], "initial")
    if not isinstance(doc["goal"], list):
        raise ModelError("goal: expected a list")
    goal = frozenset(resolve(g, "goal") for g in doc["goal"])

    players: list[Player] = []
    actions: list[tuple[Action, ...]] = []
    for st in doc["states"]:
        sname = st["name"]
        try:
            players.append(Player(st["player"]))
        except ValueError:
            raise ModelError(f"state {sname!r}: player must be 'max' or 'min'") from None
        s = index[sname]
        if s in goal:
            actions.append((Action(GOAL_LOOP, (s,), (1.0,), (Fraction(1),)),))
            continue
        acts = []
        raw_actions = st.get("actions", [])
        if not isinstance(raw_actions, list):
            raise ModelError(f"state {sname!r}: 'actions' must be a list")
        seen: set[str] = set()
        for j, act in enumerate(raw_actions):
            _check_keys(act, _ACTION_KEYS, _ACTION_KEYS, f"state {sname!r} action #{j}")
            aname = act["name"]
            if not isinstance(aname, str) or aname in seen:
                raise ModelError(f"state {sname!r}: bad or duplicate action name {aname!r}")
            seen.add(aname)
            if not isinstance(act["to"], dict):
                raise ModelError(f"state {sname!r} action {aname!r}: 'to' must be an object")
            targets, probs, exact = [], [], []
            for ref, raw in act["to"].items():
                targets.append(resolve(ref, f"state {sname!r} action {aname!r}"))
                p, fr = _parse_prob(raw, f"state {sname!r} action {aname!r}")
                probs.append(p)
                exact.append(fr)
            acts.append(Action(
                aname, tuple(targets), tuple(probs),
                tuple(exact) if all(e is not None for e in exact) else None,
            ))
        actions.append(tuple(acts))

    pmin, exact_pmin = _parse_prob(doc["pmin"], "pmin")
    game = StochasticGame(tuple(names), tuple(players), tuple(actions), initial, goal, pmin, exact_pmin)
    violations = validate(game)
    if violations:
        raise ModelError("; ".join(str(v) for v in violations), violations)
    return game


def _format_prob(p: float, exact: Fraction | None) -> Any:
    if exact is None:
        return p
    if exact.denominator == 1:
        return int(exact)
    return f"{exact.numerator}/{exact.denominator}"


def to_document(game: StochasticGame) -> dict[str, Any]:
    states = []
    for s, name in enumerate(game.names):
        acts = []
        for act in game.actions[s]:
            ex = act.exact or (None,) * len(act.probs)
            acts.append({
                "name": act.name,
                "to": {game.names[t]: _format_prob(p, e) for t, p, e in zip(act.targets, act.probs, ex)},
            })
        states.append({"name": name, "player": game.players[s].value, "actions": acts})
    return {
        "type": "sg",
        "pmin": _format_prob(game.pmin, game.exact_pmin),
        "initial": game.names[game.initial],
        "goal": [game.names[g] for g in sorted(game.goal)],
        "states": states,
    }


def serialize_model(game: StochasticGame) -> str:
    return json.dumps(to_document(game), indent=2, ensure_ascii=False)


def load_model(path: str) -> StochasticGame:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())

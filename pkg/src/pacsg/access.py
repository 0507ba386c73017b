"""Black-box and grey-box access to a game, and the learned observation counters.

An engine working with limited information only ever talks to an object
implementing :class:`SamplingOracle`. It may ask for the initial state, the
owner and available actions of a state, whether a state is a goal, a lower
bound on the smallest transition probability, and draw successors. Grey-box
oracles additionally report the number of successors of an action.
:class:`SimulatedOracle` implements the contract on top of a parsed game and
deliberately exposes nothing else.
"""

from __future__ import annotations

import enum
import json
import random
from collections import defaultdict
from typing import Hashable, Iterable, Protocol, runtime_checkable

from .model import Player, StochasticGame

State = Hashable


class AccessMode(enum.Enum):
    BLACK = "black"
    GREY = "grey"
    WHITE = "white"


class AccessError(RuntimeError):
    """Raised when an oracle is asked for information its access mode hides."""


@runtime_checkable
class SamplingOracle(Protocol):
    mode: AccessMode

    @property
    def initial(self) -> State: ...

    @property
    def pmin(self) -> float: ...

    def player(self, s: State) -> Player: ...

    def num_actions(self, s: State) -> int: ...

    def is_goal(self, s: State) -> bool: ...

    def sample(self, s: State, a: int, rng: random.Random) -> State: ...

    def successor_count(self, s: State, a: int) -> int: ...


class SimulatedOracle:
    """Sampling access to a :class:`StochasticGame`.

    The game is held in a closure-like private slot; the public surface is
    exactly the :class:`SamplingOracle` protocol.
    """

    __slots__ = ("mode", "_game", "_pmin", "_cum")

    def __init__(self, game: StochasticGame, mode: AccessMode = AccessMode.BLACK,
                 pmin: float | None = None):
        if mode is AccessMode.WHITE:
            raise ValueError("white-box engines use the game directly")
        self.mode = mode
        self._game = game
        self._pmin = game.pmin if pmin is None else float(pmin)
        self._cum = []
        for acts in game.actions:
            row = []
            for act in acts:
                acc, cum = 0.0, []
                for p in act.probs:
                    acc += p
                    cum.append(acc)
                row.append((act.targets, tuple(cum)))
            self._cum.append(row)

    @property
    def initial(self) -> int:
        return self._game.initial

    @property
    def pmin(self) -> float:
        return self._pmin

    def player(self, s: int) -> Player:
        return self._game.players[s]

    def num_actions(self, s: int) -> int:
        return len(self._game.actions[s])

    def is_goal(self, s: int) -> bool:
        return s in self._game.goal

    def sample(self, s: int, a: int, rng: random.Random) -> int:
        try:
            targets, cum = self._cum[s][a]
        except IndexError:
            raise ValueError(f"action {a} is not available in state {s}") from None
        if len(targets) == 1:
            return targets[0]
        x = rng.random()
        for t, c in zip(targets, cum):
            if x < c:
                return t
        return targets[-1]

    def successor_count(self, s: int, a: int) -> int:
        if self.mode is not AccessMode.GREY:
            raise AccessError("successor counts are only available in grey-box mode")
        return len(self._game.actions[s][a].targets)


def sample_successor(oracle: SamplingOracle, s: State, a: int, rng: random.Random) -> State:
    if not 0 <= a < oracle.num_actions(s):
        raise ValueError(f"action {a} is not available in state {s!r}")
    return oracle.sample(s, a, rng)


class ObservationCounters:
    """Occurrence counts #(s,a,t) aggregated over all simulations."""

    def __init__(self) -> None:
        self._succ: dict[tuple, dict] = defaultdict(dict)
        self._total: dict[tuple, int] = defaultdict(int)

    def record(self, s: State, a: int, t: State) -> bool:
        """Increment #(s,a,t). Returns True if ``t`` was not seen from (s,a) before."""
        row = self._succ[(s, a)]
        n = row.get(t)
        row[t] = 1 if n is None else n + 1
        self._total[(s, a)] += 1
        return n is None

    def count(self, s: State, a: int, t: State) -> int:
        row = self._succ.get((s, a))
        return row.get(t, 0) if row else 0

    def total(self, s: State, a: int) -> int:
        return self._total.get((s, a), 0)

    def successors(self, s: State, a: int) -> dict:
        """Observed successors of (s,a) with their counts (do not mutate)."""
        return self._succ.get((s, a), {})

    def pairs(self) -> Iterable[tuple]:
        return self._succ.keys()

    def triples(self) -> Iterable[tuple]:
        for (s, a), row in self._succ.items():
            for t, n in row.items():
                yield s, a, t, n

    def copy(self) -> "ObservationCounters":
        other = ObservationCounters()
        for (s, a), row in self._succ.items():
            other._succ[(s, a)] = dict(row)
            other._total[(s, a)] = self._total[(s, a)]
        return other

    def to_json(self) -> str:
        return json.dumps([{"s": s, "a": a, "t": t, "n": n} for s, a, t, n in self.triples()])

    @classmethod
    def from_json(cls, text: str) -> "ObservationCounters":
        out = cls()
        for rec in json.loads(text):
            if set(rec) != {"s", "a", "t", "n"} or rec["n"] < 0:
                raise ValueError(f"bad counter record {rec!r}")
            if rec["n"]:
                out._succ[(rec["s"], rec["a"])][rec["t"]] = rec["n"]
                out._total[(rec["s"], rec["a"])] += rec["n"]
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ObservationCounters):
            return NotImplemented
        return {k: v for k, v in self._succ.items() if v} == {k: v for k, v in other._succ.items() if v}


class PartialModel:
    """The explored part of a game as seen through an oracle and the counters."""

    def __init__(self, oracle: SamplingOracle):
        self.oracle = oracle
        self.grey = oracle.mode is AccessMode.GREY
        self.initial = oracle.initial
        self.states: dict = {}
        self.players: dict = {}
        self.goal: set = set()
        self.action_count = 0
        self.post_counts: dict = {}
        self.observed: dict = defaultdict(set)
        # Bumped whenever a successor is seen for the first time from some pair.
        self.version = 0
        self.explore(self.initial)

    def explore(self, s: State) -> bool:
        if s in self.states:
            return False
        n = self.oracle.num_actions(s)
        self.states[s] = n
        self.players[s] = self.oracle.player(s)
        if self.oracle.is_goal(s):
            self.goal.add(s)
        self.action_count += n
        if self.grey:
            for a in range(n):
                self.post_counts[(s, a)] = self.oracle.successor_count(s, a)
        return True

    def observe(self, s: State, a: int, t: State) -> None:
        self.explore(s)
        self.explore(t)
        seen = self.observed[(s, a)]
        if t not in seen:
            seen.add(t)
            self.version += 1

    def actions(self, s: State) -> range:
        return range(self.states[s])

    def unseen(self, s: State, a: int) -> int | None:
        """Grey box: number of successors of (s,a) not yet observed."""
        if not self.grey:
            return None
        return self.post_counts[(s, a)] - len(self.observed.get((s, a), ()))

    def fully_observed(self, s: State, a: int) -> bool:
        return self.grey and self.unseen(s, a) == 0


def build_partial_model(counters: ObservationCounters, oracle: SamplingOracle) -> PartialModel:
    pm = PartialModel(oracle)
    for s, a, t, n in counters.triples():
        if n > 0:
            pm.observe(s, a, t)
    return pm

"""Random small games and brute-force reference implementations for tests."""

from __future__ import annotations

import itertools
import json
import random
from collections import deque
from fractions import Fraction

from pacsg.graph import SubGameView
from pacsg.model import StochasticGame, parse_model


def random_game_doc(rng: random.Random, max_states: int = 8, max_actions: int = 3,
                    max_denominator: int = 4, mdp: bool = False) -> dict:
    """Document of a random game with rational probabilities of small denominators."""
    n = rng.randint(2, max_states)
    names = [f"s{i}" for i in range(n)]
    goal = [names[-1]] if rng.random() < 0.9 else []
    states = []
    for i, name in enumerate(names):
        player = "max" if mdp or rng.random() < 0.5 else "min"
        acts = []
        if name not in goal:
            for j in range(rng.randint(1, max_actions)):
                d = rng.randint(1, max_denominator)
                k = rng.randint(1, min(d, 3, n))
                targets = rng.sample(names, k)
                # split d units among k targets, each at least one
                cuts = sorted(rng.sample(range(1, d), k - 1))
                parts = [b - a for a, b in zip([0] + cuts, cuts + [d])]
                acts.append({"name": f"a{j}",
                             "to": {t: str(Fraction(p, d)) for t, p in zip(targets, parts)}})
        states.append({"name": name, "player": player, "actions": acts})
    pmin = min((Fraction(p) for st in states for a in st["actions"] for p in a["to"].values()),
               default=Fraction(1))
    return {"type": "sg", "pmin": str(pmin), "initial": names[0], "goal": goal, "states": states}


def random_game(seed: int, **kw) -> StochasticGame:

    return parse_model(json.dumps(random_game_doc(random.Random(seed), **kw)))


def _strongly_connected(T: frozenset, acts: dict, view: SubGameView) -> bool:
    start = next(iter(T))
    def reach(fwd: bool) -> set:
        seen, todo = {start}, deque([start])
        while todo:
            u = todo.popleft()
            for v in T:
                if v in seen:
                    continue
                linked = (any(v in view.successors[(u, a)] for a in acts[u]) if fwd
                          else any(u in view.successors[(v, a)] for a in acts[v]))
                if linked:
                    seen.add(v)
                    todo.append(v)
        return seen
    return reach(True) == T and reach(False) == T


def is_end_component(T: frozenset, view: SubGameView) -> bool:
    """An EC needs a staying action everywhere and strong connectivity through staying actions."""
    if not T:
        return False
    acts = {}
    for s in T:
        stay = [a for a in view.actions[s] if view.successors.get((s, a)) and view.successors[(s, a)] <= T]
        if not stay:
            return False
        acts[s] = stay
    return _strongly_connected(T, acts, view)


def brute_force_mecs(view: SubGameView) -> set[frozenset]:
    states = sorted(view.states)
    ecs = [frozenset(c) for r in range(1, len(states) + 1)
           for c in itertools.combinations(states, r) if is_end_component(frozenset(c), view)]
    return {T for T in ecs if not any(T < U for U in ecs)}

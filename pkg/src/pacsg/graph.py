"""End components: MEC decomposition, best exits, MSEC search, Zero states.

All functions work on a :class:`SubGameView`, which describes a game by its
included states, the allowed actions per state and the successor set of each
allowed action. The successor sets may be the true supports (white box) or
only the observed successors of a learned partial model. A pair whose
successors are unknown (never sampled) is simply absent from
``successors``; such a pair can never stay inside a set and always counts
as an exit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .model import Player, StochasticGame

# Slack for "strictly suboptimal" Minimizer actions.
SUBOPTIMAL_TOLERANCE = 1e-12

Pair = tuple[int, int]


@dataclass(frozen=True)
class SubGameView:
    states: frozenset[int]
    actions: Mapping[int, tuple[int, ...]]
    successors: Mapping[Pair, frozenset[int]]
    players: Mapping[int, Player]
    goal: frozenset[int]
    game: StochasticGame | None = None

    @classmethod
    def of_game(cls, game: StochasticGame, states: Iterable[int] | None = None,
                actions: Mapping[int, Iterable[int]] | None = None) -> "SubGameView":
        """View of a white-box game, optionally restricted to ``states`` and ``actions``.

        States that lose all actions are dropped.
        """
        keep = frozenset(range(game.num_states) if states is None else states)
        acts: dict[int, tuple[int, ...]] = {}
        for s in keep:
            allowed = tuple(game.available(s) if actions is None or s not in actions else actions[s])
            if allowed:
                acts[s] = allowed
        succ = {(s, a): frozenset(game.actions[s][a].targets) for s, al in acts.items() for a in al}
        players = {s: game.players[s] for s in acts}
        return cls(frozenset(acts), acts, succ, players, game.goal, game)

    def restrict(self, states: Iterable[int] | None = None,
                 drop: Mapping[int, Iterable[int]] | None = None) -> "SubGameView":
        keep = self.states if states is None else self.states & frozenset(states)
        acts = {}
        for s in keep:
            removed = set(drop.get(s, ())) if drop else set()
            allowed = tuple(a for a in self.actions[s] if a not in removed)
            if allowed:
                acts[s] = allowed
        succ = {p: t for p, t in self.successors.items() if p[0] in acts and p[1] in acts[p[0]]}
        return SubGameView(frozenset(acts), acts, succ, self.players, self.goal, self.game)

    def stays(self, s: int, a: int, inside: frozenset[int] | set[int]) -> bool:
        succ = self.successors.get((s, a))
        return bool(succ) and succ <= inside


@dataclass(frozen=True)
class EcCandidate:
    states: frozenset[int]
    actions: frozenset[Pair]


def strongly_connected_components(nodes: Iterable[int], edges: Callable[[int], Iterable[int]]) -> list[list[int]]:
    """Iterative Tarjan. ``edges(v)`` must only yield members of ``nodes``."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    result: list[list[int]] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(edges(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(edges(w))))
                    advanced = True
                    break
                if w in on_stack and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                result.append(comp)
    return result


def mec_decomposition(view: SubGameView) -> list[EcCandidate]:
    """Maximal end components of ``view`` by repeated SCC refinement."""
    staying = {s: set(view.actions[s]) for s in view.states}
    work = [set(view.states)]
    found: list[EcCandidate] = []
    while work:
        comp = work.pop()
        changed = True
        while changed:
            changed = False
            for s in list(comp):
                kept = {a for a in staying[s] if view.stays(s, a, comp)}
                staying[s] = kept
                if not kept:
                    comp.discard(s)
                    changed = True
        if not comp:
            continue

        def edges(v: int, comp=comp) -> Iterable[int]:
            for a in staying[v]:
                yield from view.successors[(v, a)]

        sccs = strongly_connected_components(sorted(comp), edges)
        if len(sccs) == 1:
            found.append(EcCandidate(
                frozenset(comp), frozenset((s, a) for s in comp for a in staying[s])))
        else:
            work.extend(set(c) for c in sccs)
    found.sort(key=lambda ec: min(ec.states))
    return found


def action_value(view: SubGameView, s: int, a: int, f: Mapping[int, float]) -> float:
    """Expected value of ``f`` after playing ``a`` in ``s``, with true probabilities."""
    if view.game is None:
        raise ValueError("true transition probabilities are not available in this view")
    act = view.game.actions[s][a]
    return sum(p * f[t] for t, p in zip(act.targets, act.probs))


def best_exit(states: Iterable[int], f: Mapping[int, float], view: SubGameView,
              score: Callable[[int, int], float] | None = None) -> float:
    """Best value Maximizer can obtain by leaving ``states``.

    Exits are scored with ``score(s, a)`` if given, otherwise with the
    expectation of ``f`` under the true distribution. Returns 1 when the set
    contains a goal state and 0 when Maximizer has no exit.
    """
    T = frozenset(states)
    if T & view.goal:
        return 1.0
    if score is None:
        def score(s: int, a: int) -> float:
            return action_value(view, s, a, f)
    best = 0.0
    for s in T:
        if view.players[s] is not Player.MAX:
            continue
        for a in view.actions[s]:
            if not view.stays(s, a, T):
                best = max(best, score(s, a))
    return best


def find_msecs_white(view: SubGameView, lower: Mapping[int, float]) -> list[EcCandidate]:
    """MECs after dropping Minimizer actions that look strictly suboptimal under ``lower``."""
    drop: dict[int, list[int]] = {}
    for s in view.states:
        if view.players[s] is Player.MIN and s not in view.goal:
            vals = {a: action_value(view, s, a, lower) for a in view.actions[s]}
            # lower[s] may lag behind its actions between updates
            low = max(lower[s], min(vals.values())) + SUBOPTIMAL_TOLERANCE
            drop[s] = [a for a, v in vals.items() if v > low]
    return mec_decomposition(view.restrict(drop=drop))


def zero_states(game: StochasticGame, goal: Iterable[int] | None = None) -> frozenset[int]:
    """States with no finite path to the goal."""
    targets = game.goal if goal is None else frozenset(goal)
    preds: dict[int, set[int]] = {s: set() for s in range(game.num_states)}
    for s, acts in enumerate(game.actions):
        for act in acts:
            for t in act.targets:
                preds[t].add(s)
    reach = set(targets)
    frontier = list(targets)
    while frontier:
        t = frontier.pop()
        for s in preds[t]:
            if s not in reach:
                reach.add(s)
                frontier.append(s)
    return frozenset(range(game.num_states)) - reach

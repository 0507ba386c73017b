"""Full-information engines: bounded value iteration and an exact oracle.

``bvi_white`` is interval iteration with deflation of simple end components
and serves as ground truth at scale. ``oracle_value`` enumerates every pair
of pure memoryless strategies and solves each induced Markov chain exactly,
which is only feasible for toy games but shares no code with the iteration.
"""

from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Literal, Sequence

import numpy as np

from .graph import SubGameView, best_exit, find_msecs_white, zero_states
from .model import Player, StochasticGame

TIE_TOLERANCE = 1e-12
DEFAULT_MAX_ITERATIONS = 10**7


@dataclass(frozen=True)
class ReachabilityQuery:
    game: StochasticGame
    epsilon: float | None = None
    delta: float | None = None

    def __post_init__(self) -> None:
        if self.epsilon is not None and not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.delta is not None and not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def goal(self) -> frozenset[int]:
        return self.game.goal


class Bounds:
    """Lower and upper value bounds per state.

    States without an entry have the conservative initial bounds: lower 1 for
    goal states and 0 otherwise, upper 1.
    """

    def __init__(self, goal: Iterable[int]):
        self.goal = frozenset(goal)
        self.L: dict = {}
        self.U: dict = {}
        # Per state-action bounds, filled by engines that guide simulations with them.
        self.LA: dict = {}
        self.UA: dict = {}

    def init_state(self, s) -> None:
        self.L[s] = 1.0 if s in self.goal else 0.0
        self.U[s] = 1.0

    def lower(self, s) -> float:
        v = self.L.get(s)
        if v is None:
            return 1.0 if s in self.goal else 0.0
        return v

    def upper(self, s) -> float:
        v = self.U.get(s)
        return 1.0 if v is None else v

    def lower_action(self, s, a: int) -> float:
        return self.LA.get((s, a), 0.0)

    def upper_action(self, s, a: int) -> float:
        return self.UA.get((s, a), 1.0)

    def width(self, s) -> float:
        return self.upper(s) - self.lower(s)

    def copy(self) -> "Bounds":
        other = Bounds(self.goal)
        other.L = dict(self.L)
        other.U = dict(self.U)
        other.LA = dict(self.LA)
        other.UA = dict(self.UA)
        return other


def initialize_bounds(game: StochasticGame, states: Iterable[int] | None = None) -> Bounds:
    bounds = Bounds(game.goal)
    for s in range(game.num_states) if states is None else states:
        bounds.init_state(s)
    return bounds


def _q(game: StochasticGame, s: int, a: int, f: dict) -> float:
    act = game.actions[s][a]
    return sum(p * f[t] for t, p in zip(act.targets, act.probs))


def update_standard(view: SubGameView, X: Iterable[int], bounds: Bounds) -> Bounds:
    """In-place Bellman update of both bounds on ``X`` minus the goal states."""
    game = view.game
    if game is None:
        raise ValueError("standard update needs the true transition function")
    todo = [s for s in X if s not in bounds.goal]
    for f in (bounds.U, bounds.L):
        for s in todo:
            vals = [_q(game, s, a, f) for a in game.available(s)]
            f[s] = max(vals) if game.players[s] is Player.MAX else min(vals)
    return bounds


def deflate_standard(T: Iterable[int], bounds: Bounds, view: SubGameView) -> Bounds:
    T = frozenset(T)
    value = best_exit(T, bounds.U, view)
    for s in T:
        if value < bounds.U[s]:
            bounds.U[s] = value
    return bounds


def best_actions(game: StochasticGame, s: int, bounds: Bounds) -> list[int]:
    """Maximizer: actions maximizing the upper bound; Minimizer: minimizing the lower."""
    if game.players[s] is Player.MAX:
        scores = [_q(game, s, a, bounds.U) for a in game.available(s)]
        top = max(scores)
        return [a for a, v in enumerate(scores) if v >= top - TIE_TOLERANCE]
    scores = [_q(game, s, a, bounds.L) for a in game.available(s)]
    low = min(scores)
    return [a for a, v in enumerate(scores) if v <= low + TIE_TOLERANCE]


def _draw(act, rng: random.Random) -> int:
    x = rng.random()
    acc = 0.0
    for t, p in zip(act.targets, act.probs):
        acc += p
        if x < acc:
            return t
    return act.targets[-1]


def simulate_white(view: SubGameView, bounds: Bounds, seed: int | random.Random | None = None) -> list[int]:
    """Sample one guided path from the initial state.

    The walk ends at a goal state or as soon as a state repeats. Returns the
    visited states in order of first visit, including the last one.
    """
    game = view.game
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    visited: dict[int, None] = {}
    s = game.initial
    while s not in bounds.goal and s not in visited:
        visited[s] = None
        a = rng.choice(best_actions(game, s, bounds))
        s = _draw(game.actions[s][a], rng)
    visited[s] = None
    return list(visited)


@dataclass
class TraceRecord:
    wall_ms: float
    k: int
    delta_k: float
    explored_states: int
    explored_pct: float | None
    lower: float
    upper: float


@dataclass
class RunReport:
    lower: float
    upper: float
    termination: str
    trace: list[TraceRecord] = field(default_factory=list)
    iterations: int = 0
    simulations: int = 0
    explored_states: int = 0
    bounds: Bounds | None = None

    @property
    def epsilon(self) -> float:
        return self.upper - self.lower

    @property
    def converged(self) -> bool:
        return self.termination == "precision"

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack


def bvi_white(query: ReachabilityQuery, epsilon: float | None = None,
              mode: Literal["full-sweep", "simulation-guided"] = "full-sweep",
              seed: int | None = None, max_iterations: int = DEFAULT_MAX_ITERATIONS,
              record_trace: bool = True) -> RunReport:
    """Bounded value iteration with deflation until the initial interval is below ``epsilon``."""
    game = query.game
    eps = epsilon if epsilon is not None else query.epsilon
    if eps is None:
        raise ValueError("a precision is required")
    view = SubGameView.of_game(game)
    bounds = initialize_bounds(game)
    rng = random.Random(seed)
    s0 = game.initial
    start = time.monotonic()
    trace: list[TraceRecord] = []
    it = 0
    while bounds.width(s0) >= eps:
        if it >= max_iterations:
            break
        it += 1
        if mode == "full-sweep":
            X = range(game.num_states)
            sub = view
        elif mode == "simulation-guided":
            X = simulate_white(view, bounds, rng)
            sub = view.restrict(states=X)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        update_standard(view, X, bounds)
        for ec in find_msecs_white(sub, bounds.L):
            deflate_standard(ec.states, bounds, view)
        if record_trace:
            trace.append(TraceRecord((time.monotonic() - start) * 1000, it, 0.0, game.num_states,
                                     100.0, bounds.lower(s0), bounds.upper(s0)))
    done = bounds.width(s0) < eps
    return RunReport(bounds.lower(s0), bounds.upper(s0), "precision" if done else "iteration-cap",
                     trace, iterations=it, explored_states=game.num_states, bounds=bounds)


# ---------------------------------------------------------------------------
# strategy-enumeration oracle

ORACLE_MAX_STATES = 12
ORACLE_MAX_PAIRS = 10**6


class OracleTooLarge(ValueError):
    pass


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(b)
    M = [row[:] + [rhs] for row, rhs in zip(A, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        pivot_row = [x * inv for x in M[col]]
        M[col] = pivot_row
        for r in range(n):
            if r != col and M[r][col] != 0:
                factor = M[r][col]
                M[r] = [x - factor * y for x, y in zip(M[r], pivot_row)]
    return [M[r][n] for r in range(n)]


def _chain_values(game: StochasticGame, choice: Sequence[int], exact: bool) -> list:
    """Reachability probabilities in the Markov chain fixed by ``choice``."""
    n = game.num_states
    succ = [game.actions[s][choice[s]].targets for s in range(n)]
    # states that can reach the goal in the chain
    preds: list[list[int]] = [[] for _ in range(n)]
    for s in range(n):
        for t in succ[s]:
            preds[t].append(s)
    reach = set(game.goal)
    stack = list(game.goal)
    while stack:
        t = stack.pop()
        for s in preds[t]:
            if s not in reach:
                reach.add(s)
                stack.append(s)
    unknown = [s for s in range(n) if s in reach and s not in game.goal]
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    values = [one if s in game.goal else zero for s in range(n)]
    if not unknown:
        return values
    pos = {s: i for i, s in enumerate(unknown)}
    m = len(unknown)
    if exact:
        A = [[Fraction(0)] * m for _ in range(m)]
        b = [Fraction(0)] * m
    else:
        A = np.zeros((m, m))
        b = np.zeros(m)
    for s in unknown:
        i = pos[s]
        A[i][i] += 1
        act = game.actions[s][choice[s]]
        probs = act.exact if exact else act.probs
        for t, p in zip(act.targets, probs):
            if t in game.goal:
                b[i] += p
            elif t in pos:
                A[i][pos[t]] -= p
    x = _solve_exact(A, b) if exact else np.linalg.solve(A, b)
    for s in unknown:
        values[s] = x[pos[s]]
    return values


def oracle_value(query: ReachabilityQuery | StochasticGame) -> list:
    """Exact values of every state by enumerating pure memoryless strategy pairs.

    Uses exact fractions when the model was given with exact probabilities.
    """
    game = query.game if isinstance(query, ReachabilityQuery) else query
    n = game.num_states
    if n > ORACLE_MAX_STATES:
        raise OracleTooLarge(f"{n} states exceed the oracle limit of {ORACLE_MAX_STATES}")
    pairs = math.prod(len(game.actions[s]) for s in range(n))
    if pairs > ORACLE_MAX_PAIRS:
        raise OracleTooLarge(f"{pairs} strategy pairs exceed the oracle limit")
    exact = game.is_exact
    max_states = [s for s in range(n) if game.players[s] is Player.MAX]
    min_states = [s for s in range(n) if game.players[s] is Player.MIN]
    best: list = [None] * n
    for sigma in itertools.product(*(game.available(s) for s in max_states)):
        worst: list = [None] * n
        choice = [0] * n
        for s, a in zip(max_states, sigma):
            choice[s] = a
        for tau in itertools.product(*(game.available(s) for s in min_states)):
            for s, a in zip(min_states, tau):
                choice[s] = a
            vals = _chain_values(game, choice, exact)
            worst = [v if w is None or v < w else w for v, w in zip(vals, worst)]
        best = [w if b is None or w > b else b for w, b in zip(worst, best)]
    return best


def value_of_initial(game: StochasticGame) -> float:
    return float(oracle_value(game)[game.initial])


__all__ = [
    "Bounds", "ReachabilityQuery", "RunReport", "TraceRecord", "OracleTooLarge",
    "best_actions", "bvi_white", "deflate_standard", "initialize_bounds",
    "oracle_value", "simulate_white", "update_standard", "value_of_initial", "zero_states",
]

"""PAC statistical model checking of reachability with black- or grey-box access.

The main loop alternates two phases. A guided simulation phase runs a batch
of counting simulations that extend the partial model. A guaranteed BVI phase
then fixes the counters, picks a per-transition error tolerance, restarts
from the conservative bounds and performs a bounded number of rounds of
estimated Bellman updates followed by deflation of every end component that
is confirmed with enough samples. Phase ``i`` is allowed error ``delta / 2**i``
so that the overall error stays below ``delta``.
"""

from __future__ import annotations

import math
import random
import sys
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, NamedTuple, Sequence

from .access import AccessMode, ObservationCounters, PartialModel, SamplingOracle
from .estimation import (
    EstimatorConfig,
    Sidedness,
    distribute_delta,
    estimated_bound,
    required_samples,
)
from .graph import SUBOPTIMAL_TOLERANCE, SubGameView, mec_decomposition
from .model import Player
from .whitebox import TIE_TOLERANCE, Bounds, ReachabilityQuery, RunReport, TraceRecord

DEFAULT_NK = 10_000
DEFAULT_EPSILON = 1e-8
DEFAULT_TIMEOUT = 30 * 60.0
DEFAULT_MAX_WALK = 100_000


@dataclass
class BlackViConfig:
    epsilon: float = DEFAULT_EPSILON
    delta: float = 0.1
    nk: int | Sequence[int] = DEFAULT_NK
    timeout: float | None = DEFAULT_TIMEOUT
    mode: AccessMode = AccessMode.BLACK
    sided: Sidedness = Sidedness.ONE
    seed: int | None = 0
    # Stop after this many phases (None: until precision or timeout).
    max_phases: int | None = None
    # Safety cap on the length of a single simulation.
    max_walk: int = DEFAULT_MAX_WALK
    # Size of the full game, if known, for the explored-% trace column.
    total_states: int | None = None
    # Negative control: drop the confidence width from every estimate.
    zero_width: bool = False
    # Actions whose stored bound is this close to the best one count as ties
    # when guiding simulations; bounds left by a finite phase are not exact fixpoints.
    guidance_tolerance: float = 1e-6

    def __post_init__(self) -> None:
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.mode is AccessMode.WHITE:
            raise ValueError("use bvi_white for white-box access")
        schedule = [self.nk] if isinstance(self.nk, int) else list(self.nk)
        if not schedule or any(n < 1 for n in schedule):
            raise ValueError("N_k must be at least 1")

    def simulations(self, phase: int) -> int:
        """N_k for the ``phase``-th phase (1-based); a sequence repeats its last entry."""
        if isinstance(self.nk, int):
            return self.nk
        seq = list(self.nk)
        return seq[min(phase, len(seq)) - 1]


class SimulationContext:
    """Mutable state shared by the simulations of one run."""

    def __init__(self, oracle: SamplingOracle, counters: ObservationCounters,
                 partial_model: PartialModel, config: BlackViConfig, delta_k: float):
        self.oracle = oracle
        self.counters = counters
        self.partial_model = partial_model
        self.config = config
        self.pmin = oracle.pmin
        self.delta_k = delta_k
        self._est: EstimatorConfig | None = None
        self._est_actions = -1
        self._mec_cache: dict = {}
        self._mec_version = -1

    def estimator(self) -> EstimatorConfig:
        """Estimator for the current partial model size (refreshed as it grows)."""
        pm = self.partial_model
        if pm.action_count != self._est_actions:
            self._est = make_estimator(self.config, self.delta_k, self.pmin, pm)
            self._est_actions = pm.action_count
        return self._est

    def mec_of(self, X: frozenset, s) -> frozenset | None:
        pm = self.partial_model
        if pm.version != self._mec_version:
            self._mec_cache.clear()
            self._mec_version = pm.version
        key = X
        lookup = self._mec_cache.get(key)
        if lookup is None:
            lookup = {}
            for ec in mec_decomposition(partial_view(pm, states=X)):
                for u in ec.states:
                    lookup[u] = ec.states
            self._mec_cache[key] = lookup
        return lookup.get(s)


def make_estimator(config: BlackViConfig, delta_k: float, pmin: float, pm: PartialModel) -> EstimatorConfig:
    return EstimatorConfig(distribute_delta(delta_k, pmin, pm), config.sided, config.mode,
                           config.zero_width)


def partial_view(pm: PartialModel, states: Iterable | None = None,
                 drop: dict | None = None) -> SubGameView:
    """Graph of the partial model: edges are observed successors only."""
    keep = pm.states.keys() if states is None else states
    acts, succ = {}, {}
    for s in keep:
        removed = drop.get(s, ()) if drop else ()
        allowed = tuple(a for a in range(pm.states[s]) if a not in removed)
        if not allowed:
            continue
        acts[s] = allowed
        for a in allowed:
            seen = pm.observed.get((s, a))
            if seen:
                succ[(s, a)] = frozenset(seen)
    players = {s: pm.players[s] for s in acts}
    return SubGameView(frozenset(acts), acts, succ, players, frozenset(pm.goal))


# ---------------------------------------------------------------------------
# simulation


def best_actions_guided(s, bounds: Bounds, pm: PartialModel, tolerance: float = TIE_TOLERANCE) -> list[int]:
    """Actions with the best per-action bound stored by the last BVI phase.

    Maximizer ranks by upper bound, Minimizer by lower bound. Pairs without
    a stored bound (first phase, new states) score 1 and 0, so the choice is
    uniform until a phase has rated them.
    """
    acts = pm.actions(s)
    if pm.players[s] is Player.MAX:
        scores = [bounds.upper_action(s, a) for a in acts]
        top = max(scores)
        return [a for a, v in enumerate(scores) if v >= top - tolerance]
    scores = [bounds.lower_action(s, a) for a in acts]
    low = min(scores)
    return [a for a, v in enumerate(scores) if v <= low + tolerance]


def store_action_bounds(bounds: Bounds, counters: ObservationCounters, config: EstimatorConfig,
                        partial_model: PartialModel) -> None:
    """Record the estimated bound of every explored pair, for guiding the next simulations.

    No action of a Maximizer state is worth more than the state, so its
    upper bound is capped by U(s); dually a Minimizer action's lower bound is
    raised to L(s). After deflation this makes the staying actions of an end
    component tie with its best exit instead of looking better than it.
    """
    pm = partial_model
    bounds.LA.clear()
    bounds.UA.clear()
    for s in pm.states:
        if s in pm.goal:
            continue
        maximizer = pm.players[s] is Player.MAX
        lo, hi = bounds.lower(s), bounds.upper(s)
        for a in pm.actions(s):
            la = estimated_bound("L", bounds, counters, config, pm, s, a)
            ua = estimated_bound("U", bounds, counters, config, pm, s, a)
            if maximizer:
                ua = min(ua, hi)
            else:
                la = max(la, lo)
            bounds.LA[(s, a)] = la
            bounds.UA[(s, a)] = ua


def simulate_counting(oracle: SamplingOracle, bounds: Bounds, counters: ObservationCounters,
                      ctx: SimulationContext, rng: random.Random) -> list:
    """One guided simulation that records every observed transition.

    Returns the visited states in order of first visit, including the last.
    """
    pm = ctx.partial_model
    visited: dict = {}
    s = oracle.initial
    steps = 0
    while s not in pm.goal:
        visited[s] = None
        best = best_actions_guided(s, bounds, pm, ctx.config.guidance_tolerance)
        a = best[0] if len(best) == 1 else rng.choice(best)
        t = oracle.sample(s, a, rng)
        counters.record(s, a, t)
        pm.observe(s, a, t)
        s = t
        steps += 1
        if steps >= ctx.config.max_walk:
            break
        if s in visited and looping(visited, s, counters, pm, ctx.estimator().delta_t, ctx):
            break
    visited[s] = None
    return list(visited)


def delta_sure_ec(T: Iterable, counters: ObservationCounters, delta_t: float, pmin: float,
                  mode: AccessMode, partial_model: PartialModel,
                  view: SubGameView | None = None) -> bool:
    """Whether every staying pair of ``T`` is known well enough to rule out hidden exits.

    Black box: each staying pair was sampled at least ``required_samples``
    times. Grey box: each staying pair has shown all of its successors.
    Staying pairs are taken from the allowed actions of ``view`` if given.
    """
    T = frozenset(T)
    pm = partial_model
    needed = required_samples(delta_t, pmin) if mode is not AccessMode.GREY else 0
    staying = 0
    for s in T:
        allowed = view.actions.get(s, ()) if view is not None else pm.actions(s)
        for a in allowed:
            seen = pm.observed.get((s, a))
            if not seen or not seen <= T:
                continue
            staying += 1
            if mode is AccessMode.GREY:
                if not pm.fully_observed(s, a):
                    return False
            elif counters.total(s, a) < needed:
                return False
    return staying > 0


def looping(X, s, counters: ObservationCounters, partial_model: PartialModel, delta_t: float,
            ctx: SimulationContext) -> bool:
    """Stop a simulation that revisits ``s`` inside a confirmed end component of the visited set."""
    if s not in X:
        return False
    X = frozenset(X)
    T = ctx.mec_of(X, s)
    if T is None:
        return False
    return delta_sure_ec(T, counters, delta_t, ctx.pmin, ctx.config.mode, partial_model)


# ---------------------------------------------------------------------------
# guaranteed BVI phase


def update_estimated(X: Iterable, bounds: Bounds, counters: ObservationCounters,
                     config: EstimatorConfig, partial_model: PartialModel) -> float:
    """Estimated Bellman update on ``X`` minus goal states.

    Bounds only ever tighten: the new value is intersected with the previous
    one. Returns the largest change.
    """
    pm = partial_model
    todo = [s for s in X if s not in pm.goal]
    change = 0.0
    for which, store in (("L", bounds.L), ("U", bounds.U)):
        for s in todo:
            vals = [estimated_bound(which, bounds, counters, config, pm, s, a) for a in pm.actions(s)]
            new = max(vals) if pm.players[s] is Player.MAX else min(vals)
            old = store[s]
            if which == "L" and new > old:
                store[s] = new
                change = max(change, new - old)
            elif which == "U" and new < old:
                store[s] = new
                change = max(change, old - new)
    return change


def find_msecs_black(partial_model: PartialModel, bounds: Bounds, counters: ObservationCounters,
                     config: EstimatorConfig, pmin: float) -> list[frozenset]:
    """Confirmed MECs of the explored game after removing suboptimal Minimizer actions."""
    pm = partial_model
    drop = {}
    for s in pm.states:
        if pm.players[s] is Player.MIN and s not in pm.goal:
            vals = [estimated_bound("L", bounds, counters, config, pm, s, a) for a in pm.actions(s)]
            # L(s) may lag behind its actions while a phase is still iterating
            low = max(bounds.lower(s), min(vals)) + SUBOPTIMAL_TOLERANCE
            drop[s] = {a for a, v in enumerate(vals) if v > low}
    view = partial_view(pm, drop=drop)
    return [ec.states for ec in mec_decomposition(view)
            if delta_sure_ec(ec.states, counters, config.delta_t, pmin, config.mode, pm, view)]


def deflate_black(T: Iterable, bounds: Bounds, counters: ObservationCounters,
                  config: EstimatorConfig, partial_model: PartialModel) -> float:
    """Cap the upper bounds of ``T`` by Maximizer's best estimated exit. Returns that exit value."""
    pm = partial_model
    T = frozenset(T)
    if T & pm.goal:
        return 1.0
    best = 0.0
    for s in T:
        if pm.players[s] is not Player.MAX:
            continue
        for a in pm.actions(s):
            seen = pm.observed.get((s, a))
            if not seen or not seen <= T:
                best = max(best, estimated_bound("U", bounds, counters, config, pm, s, a))
    for s in T:
        if best < bounds.U[s]:
            bounds.U[s] = best
    return best


# ---------------------------------------------------------------------------
# main loop

Observer = Callable[[str, int, int, Bounds], None]


@dataclass
class BlackViReport(RunReport):
    counters: ObservationCounters | None = None
    delta_ks: list[float] = field(default_factory=list)
    phases: int = 0


def _initial_bounds(pm: PartialModel) -> Bounds:
    bounds = Bounds(pm.goal)
    for s in pm.states:
        bounds.init_state(s)
    return bounds


def black_vi(oracle: SamplingOracle, query: ReachabilityQuery | None = None,
             config: BlackViConfig | None = None, observer: Observer | None = None) -> BlackViReport:
    """Anytime PAC interval for the value of the initial state.

    ``observer(stage, k, round, bounds)`` is called after every update
    (stage ``"update"``) and every deflation (``"deflate"``) of a BVI phase.
    """
    config = config or BlackViConfig()
    if query is not None:
        config = replace(config, epsilon=query.epsilon if query.epsilon is not None else config.epsilon,
                         delta=query.delta if query.delta is not None else config.delta)
    if oracle.mode is not config.mode:
        raise ValueError(f"oracle offers {oracle.mode.value} access but config asks for {config.mode.value}")
    rng = random.Random(config.seed)
    start = time.monotonic()
    deadline = None if config.timeout is None else start + config.timeout
    counters = ObservationCounters()
    pm = PartialModel(oracle)
    s0 = oracle.initial
    pmin = oracle.pmin

    bounds = _initial_bounds(pm)
    best: tuple[float, float] = (1.0, 1.0) if s0 in pm.goal else (0.0, 1.0)
    report = BlackViReport(best[0], best[1], "timeout", counters=counters)
    k = 1
    phase = 0

    def expired() -> bool:
        return deadline is not None and time.monotonic() >= deadline

    while True:
        phase += 1
        k *= 2
        delta_k = config.delta / k
        ctx = SimulationContext(oracle, counters, pm, config, delta_k)
        interrupted = False
        for _ in range(config.simulations(phase)):
            if expired():
                interrupted = True
                break
            simulate_counting(oracle, bounds, counters, ctx, rng)
            report.simulations += 1
        if interrupted:
            break

        est = make_estimator(config, delta_k, pmin, pm)
        bounds = _initial_bounds(pm)
        explored = list(pm.states)
        rounds = k * len(explored)
        for r in range(rounds):
            change = update_estimated(explored, bounds, counters, est, pm)
            if observer:
                observer("update", k, r, bounds)
            for T in find_msecs_black(pm, bounds, counters, est, pmin):
                before = bounds.U[next(iter(T))]
                deflate_black(T, bounds, counters, est, pm)
                change = max(change, before - bounds.U[next(iter(T))])
                if observer:
                    observer("deflate", k, r, bounds)
            report.iterations += 1
            if change == 0.0:
                break  # counters are fixed, so further rounds cannot move the bounds
            if expired():
                interrupted = True
                break

        store_action_bounds(bounds, counters, est, pm)
        lo, hi = bounds.lower(s0), bounds.upper(s0)
        if not interrupted or hi - lo < best[1] - best[0]:
            best = (lo, hi)
        report.phases = phase
        report.delta_ks.append(delta_k)
        total = config.total_states
        report.trace.append(TraceRecord(
            (time.monotonic() - start) * 1000, k, delta_k, len(pm.states),
            100.0 * len(pm.states) / total if total else None, lo, hi))
        if interrupted:
            break
        if hi - lo < config.epsilon:
            report.termination = "precision"
            break
        if config.max_phases is not None and phase >= config.max_phases:
            report.termination = "phase-limit"
            break
        if expired():
            break

    report.lower, report.upper = best
    report.bounds = bounds
    report.explored_states = len(pm.states)
    return report


class SampleCount(NamedTuple):
    n: int
    saturated: bool


def theoretical_samples(epsilon: float, delta_t: float, states: int, horizon: int, pmin: float) -> SampleCount:
    """Per-transition sample count sufficient for convergence with two-sided estimates.

    Astronomically large for all but trivial inputs; a calculator, not a schedule.
    Saturates at ``sys.maxsize`` when the value does not fit a float.
    """
    if min(epsilon, delta_t, states, horizon, pmin) <= 0:
        raise ValueError("all inputs must be positive")
    log_num = math.log(-32 * math.log(delta_t / 2)) + 2 * math.log(states * horizon)
    log_den = 2 * math.log(epsilon) + 2 * states * horizon * math.log(pmin)
    log_n = log_num - log_den
    if log_n > math.log(sys.float_info.max) - 1:
        return SampleCount(sys.maxsize, True)
    n = -32 * math.log(delta_t / 2) * states**2 * horizon**2 / (epsilon**2 * pmin ** (2 * states * horizon))
    return SampleCount(math.ceil(n), False)

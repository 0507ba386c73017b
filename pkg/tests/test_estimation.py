import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from pacsg.access import AccessMode, ObservationCounters, PartialModel, SimulatedOracle
from pacsg.estimation import (
    EstimatorConfig, Sidedness, confidence_width, distribute_delta, estimated_bound,
    required_samples, t_hat,
)
from pacsg.harness import load_game
from pacsg.whitebox import Bounds

TARGET, SINK = 2, 3  # state indices in the fig1 model


def five_sample_counters():
    c = ObservationCounters()
    c.record(1, 1, TARGET)
    for _ in range(4):
        c.record(1, 1, SINK)
    return c


def test_width_vectors():
    assert confidence_width(0.1, 5) == pytest.approx(0.48, abs=0.005)
    assert confidence_width(0.1, 500) < 0.05
    assert confidence_width(0.1, 5, Sidedness.TWO) > confidence_width(0.1, 5)
    with pytest.raises(ValueError):
        confidence_width(0.1, 0)


def test_t_hat_vectors():
    c = five_sample_counters()
    cfg = EstimatorConfig(0.1)
    assert t_hat(c, cfg, 1, 1, TARGET) == 0.0
    assert t_hat(c, cfg, 1, 1, SINK) == pytest.approx(0.32, abs=0.005)
    assert t_hat(c, cfg, 0, 0, 1) == 0.0


def test_estimated_upper_bound_vector():
    b = Bounds({TARGET})
    b.U[SINK] = 0.0
    u = estimated_bound("U", b, five_sample_counters(), EstimatorConfig(0.1), None, 1, 1)
    assert u == pytest.approx(0.68, abs=0.005)


def test_unsampled_pair_is_fully_conservative():
    b = Bounds({TARGET})
    c = ObservationCounters()
    cfg = EstimatorConfig(0.1)
    assert estimated_bound("L", b, c, cfg, None, 1, 0) == 0.0
    assert estimated_bound("U", b, c, cfg, None, 1, 0) == 1.0


def test_grey_rest_mass_uses_observed_successors():
    game = load_game("fig1")
    pm = PartialModel(SimulatedOracle(game, AccessMode.GREY))
    c = ObservationCounters()
    for t in (TARGET, SINK):
        c.record(1, 1, t)
        pm.observe(1, 1, t)
    b = Bounds(set())  # pretend nothing is a goal so both successors have U = 0
    b.U[TARGET] = b.U[SINK] = 0.0
    cfg = EstimatorConfig(0.1, mode=AccessMode.GREY)
    assert estimated_bound("U", b, c, cfg, pm, 1, 1) == 0.0
    black = EstimatorConfig(0.1)
    assert estimated_bound("U", b, c, black, pm, 1, 1) == 1.0


def test_distribute_delta():
    assert distribute_delta(0.1, 0.5, 6) == pytest.approx(0.1 / 12, abs=1e-12)
    assert abs(distribute_delta(0.1, 0.5, 6) - 0.00833) < 1e-5
    assert distribute_delta(0.3, 1.0, 1) == 0.3
    assert distribute_delta(0.1, 0.5, 12) == pytest.approx(distribute_delta(0.1, 0.5, 6) / 2)


def test_required_samples():
    assert math.log(0.1) / math.log(2 / 3) == pytest.approx(5.68, abs=0.01)
    assert required_samples(0.1, 1 / 3) == 6
    assert required_samples(0.5, 0.5) == 1
    assert required_samples(0.01, 1 / 3) > required_samples(0.1, 1 / 3)
    assert required_samples(0.1, 1.0) == 1


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 200), st.floats(0.001, 0.5), st.integers(0, 10**6))
def test_grey_dominates_black(n, delta_t, seed):
    """Same data: grey upper estimates never exceed black ones, lower never fall below."""
    game = load_game("fig1_full")
    rng = random.Random(seed)
    grey = PartialModel(SimulatedOracle(game, AccessMode.GREY))
    oracle = SimulatedOracle(game)
    c = ObservationCounters()
    s1, b2 = game.state("s1"), game.action("s1", "b2")[1]
    for _ in range(n):
        t = oracle.sample(s1, b2, rng)
        c.record(s1, b2, t)
        grey.observe(s1, b2, t)
    b = Bounds(game.goal)
    for s in range(game.num_states):
        b.init_state(s)
        b.L[s] = min(b.L[s] + rng.random() * 0.3, 1.0)
        b.U[s] = max(b.L[s], 1.0 - rng.random() * 0.3)
    g_cfg = EstimatorConfig(delta_t, mode=AccessMode.GREY)
    k_cfg = EstimatorConfig(delta_t)
    assert estimated_bound("U", b, c, g_cfg, grey, s1, b2) <= estimated_bound("U", b, c, k_cfg, None, s1, b2)
    assert estimated_bound("L", b, c, g_cfg, grey, s1, b2) >= estimated_bound("L", b, c, k_cfg, None, s1, b2)


def test_lower_estimate_is_statistically_sound():
    """Hoeffding: the estimate exceeds the true probability in at most a delta_t fraction of batches."""
    rng = random.Random(5)
    delta_t, n, p, batches = 0.1, 30, 0.4, 4000
    misses = 0
    cfg = EstimatorConfig(delta_t)
    for _ in range(batches):
        c = ObservationCounters()
        for _ in range(n):
            c.record(0, 0, 1 if rng.random() < p else 2)
        misses += t_hat(c, cfg, 0, 0, 1) > p
    rate = misses / batches
    assert rate <= delta_t + 3 * math.sqrt(delta_t * (1 - delta_t) / batches)

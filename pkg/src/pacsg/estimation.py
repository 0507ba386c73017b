"""Hoeffding-based lower estimates of transition probabilities and the
estimated Bellman operators built on them.

Only counters, the partial model and current bounds are consumed here; the
true transition function is never visible.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Literal

from .access import AccessMode, ObservationCounters, PartialModel
from .whitebox import Bounds


class Sidedness(enum.Enum):
    ONE = "one"
    TWO = "two"


@dataclass(frozen=True)
class EstimatorConfig:
    delta_t: float
    sided: Sidedness = Sidedness.ONE
    mode: AccessMode = AccessMode.BLACK
    # Negative control only: pretend the estimates carry no uncertainty.
    zero_width: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.delta_t < 1:
            raise ValueError("delta_t must lie in (0, 1)")

    def width(self, n: int) -> float:
        return 0.0 if self.zero_width else confidence_width(self.delta_t, n, self.sided)


def confidence_width(delta_t: float, n: int, sided: Sidedness = Sidedness.ONE) -> float:
    """Hoeffding half-width for ``n`` Bernoulli trials at error ``delta_t``. Not clamped."""
    if n < 1:
        raise ValueError("a confidence width needs at least one sample")
    num = math.log(delta_t) if sided is Sidedness.ONE else math.log(delta_t / 2)
    return math.sqrt(num / (-2 * n))


def t_hat(counters: ObservationCounters, config: EstimatorConfig, s, a, t) -> float:
    n = counters.total(s, a)
    if n == 0:
        return 0.0
    return max(0.0, counters.count(s, a, t) / n - config.width(n))


def distribute_delta(delta_k: float, pmin: float, partial_model: PartialModel | int) -> float:
    """Per-transition error tolerance: ``delta_k * pmin / #actions of explored states``."""
    n = partial_model if isinstance(partial_model, int) else partial_model.action_count
    if n < 1:
        raise ValueError("the partial model has no actions")
    return delta_k * pmin / n


def required_samples(delta_t: float, pmin: float) -> int:
    """Samples after which an exit of probability >= pmin is missed with probability <= delta_t."""
    if pmin >= 1:
        return 1
    if not 0 < delta_t < 1 or not 0 < pmin:
        raise ValueError("delta_t and pmin must lie in (0, 1)")
    raw = math.log(delta_t) / math.log(1 - pmin)
    return max(1, math.ceil(raw - 1e-9))


def estimated_bound(which: Literal["L", "U"], bounds: Bounds, counters: ObservationCounters,
                    config: EstimatorConfig, partial_model: PartialModel | None, s, a) -> float:
    """Estimated lower (``"L"``) or upper (``"U"``) bound of playing ``a`` in ``s``.

    The unexplained probability mass is valued at 0 (lower) or 1 (upper), or,
    in grey-box mode once every successor has been observed, at the worst
    (lower) or best (upper) bound among the successors.
    """
    lower = which == "L"
    n = counters.total(s, a)
    if n == 0:
        return 0.0 if lower else 1.0
    f = bounds.lower if lower else bounds.upper
    c = config.width(n)
    acc = 0.0
    mass = 0.0
    succ = counters.successors(s, a)
    for t, k in succ.items():
        est = k / n - c
        if est > 0:
            acc += est * f(t)
            mass += est
    rest = max(0.0, 1.0 - mass)
    if rest > 0:
        if (config.mode is AccessMode.GREY and partial_model is not None
                and partial_model.fully_observed(s, a)):
            vals = [f(t) for t in succ]
            acc += rest * (min(vals) if lower else max(vals))
        elif not lower:
            acc += rest
    return min(1.0, max(0.0, acc))

"""Sequential stopping rule on the running proportion of first-model picks.

With n final labels observed and X-bar their mean, the one-sided Hoeffding
bound delta <= exp(-2 n t^2) gives the tolerance

    t = sqrt(-ln(delta) / (2 n))

and we call the first model better as soon as X-bar - t > 0.5 (the second
model when X-bar + t < 0.5), each with probability at least 1 - delta.

The bound is checked after every final label, i.e. the fixed-n tolerance is
applied at every n without a correction for continuous monitoring. That is
deliberate: this engine measures the labelling effort of exactly that
stopping behaviour, it does not try to repair its statistics.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class Verdict(enum.Enum):
    UNDECIDED = "undecided"
    A_IS_BETTER = "a-is-better"
    A_PRIME_IS_BETTER = "a-prime-is-better"


@dataclass(frozen=True)
class DecisionConfig:
    """delta is the allowed failure probability; decisions come at 1 - delta."""

    delta: float
    threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


@dataclass(frozen=True)
class DecisionState:
    """Running tally after n final labels.

    lower/upper expose the error band around the mean so callers can log
    (n, mean, lower, upper, verdict) traces for plotting.
    """

    n: int = 0
    count_a: int = 0
    mean: float = 0.0
    tolerance: float = math.inf
    verdict: Verdict = Verdict.UNDECIDED

    @property
    def lower(self) -> float:
        return self.mean - self.tolerance

    @property
    def upper(self) -> float:
        return self.mean + self.tolerance


def hoeffding_tolerance(delta: float, n: int) -> float:
    """t = sqrt(-ln(delta) / (2 n))."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return math.sqrt(-math.log(delta) / (2.0 * n))


def update(state: DecisionState, label: int, config: DecisionConfig) -> DecisionState:
    """Fold one final label into the state and re-evaluate the verdict.

    Callers normally stop at the first non-undecided verdict; updating past
    it is legal (the verdict keeps tracking the current band) so traces can
    run to the end of the data.
    """
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    n = state.n + 1
    count_a = state.count_a + label
    mean = count_a / n
    tol = hoeffding_tolerance(config.delta, n)
    if mean - tol > config.threshold:
        verdict = Verdict.A_IS_BETTER
    elif mean + tol < config.threshold:
        verdict = Verdict.A_PRIME_IS_BETTER
    else:
        verdict = Verdict.UNDECIDED
    return DecisionState(n=n, count_a=count_a, mean=mean, tolerance=tol, verdict=verdict)


def min_n_for_decision(delta: float) -> int:
    """Smallest n at which any label stream could decide, i.e. where t < 0.5.

    Closed form: the least n with n > -2 ln(delta). Computed via floor plus
    a local scan so exact integer boundaries (delta = e^{-k/2}) are not
    tripped up by floating-point rounding.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    n = max(1, math.floor(-2.0 * math.log(delta)) + 1)
    while not hoeffding_tolerance(delta, n) < 0.5:
        n += 1
    while n > 1 and hoeffding_tolerance(delta, n - 1) < 0.5:
        n -= 1
    return n

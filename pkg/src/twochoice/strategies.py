"""The four labelling strategies and their per-request effort accounting.

Effort counts raw worker labels consumed to produce one final label:
fixed-worker and one-worker spend 1, majority-of-N spends N, and
max-three spends 2 when the first two workers agree, else 3.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .eval_model import WorkerPool, draw_label, selection_probability
from .rng import SeedLike, as_generator


class StrategyKind(enum.Enum):
    FIXED_WORKER = "fixed-worker"
    ONE_WORKER = "one-worker"
    N_WORKERS_MAJORITY = "n-workers"
    MAX_THREE_WORKERS = "max-three"


@dataclass(frozen=True)
class Strategy:
    """A labelling strategy; n_workers applies to majority voting only.

    distinct_voters is a sensitivity knob: when set, the voters for one
    request are drawn without replacement from the pool instead of the
    default with-replacement draw.
    """

    kind: StrategyKind
    n_workers: Optional[int] = None
    distinct_voters: bool = False

    def __post_init__(self):
        if self.kind is StrategyKind.N_WORKERS_MAJORITY:
            if self.n_workers is None:
                raise ValueError("n-workers strategy requires n_workers")
            if self.n_workers < 3 or self.n_workers % 2 == 0:
                raise ValueError(f"N must be odd and >= 3, got {self.n_workers}")
        elif self.n_workers is not None:
            raise ValueError(f"n_workers only applies to n-workers, not {self.kind.value}")

    @property
    def name(self) -> str:
        if self.kind is StrategyKind.N_WORKERS_MAJORITY:
            return f"n-workers:{self.n_workers}"
        return self.kind.value

    @classmethod
    def from_name(cls, text: str) -> "Strategy":
        """Parse a strategy name: fixed-worker, one-worker, max-three, n-workers:<odd N>."""
        text = text.strip()
        if text.startswith("n-workers:"):
            raw = text.split(":", 1)[1]
            try:
                n = int(raw)
            except ValueError:
                raise ValueError(f"invalid worker count {raw!r} in {text!r}") from None
            if n % 2 == 0 or n < 3:
                raise ValueError(f"N must be odd and >= 3, got {n}")
            return cls(kind=StrategyKind.N_WORKERS_MAJORITY, n_workers=n)
        for kind in (StrategyKind.FIXED_WORKER, StrategyKind.ONE_WORKER, StrategyKind.MAX_THREE_WORKERS):
            if text == kind.value:
                return cls(kind=kind)
        raise ValueError(f"unknown strategy {text!r}")

    def votes_needed(self) -> int:
        """Worst-case raw labels per request."""
        if self.kind is StrategyKind.N_WORKERS_MAJORITY:
            return self.n_workers
        if self.kind is StrategyKind.MAX_THREE_WORKERS:
            return 3
        return 1


@dataclass(frozen=True)
class FinalLabel:
    """One aggregated label with its audit trail of raw voter labels."""

    label: int
    effort: int
    voter_labels: tuple

    def __post_init__(self):
        if self.effort != len(self.voter_labels):
            raise ValueError("effort must equal the number of voter labels")


def majority_vote(labels) -> int:
    """Label held by more than half the voters; the list must be odd-length."""
    labels = list(labels)
    if not labels or len(labels) % 2 == 0:
        raise ValueError(f"majority vote needs an odd, nonempty label list, got {len(labels)} labels")
    ones = sum(labels)
    return int(2 * ones > len(labels))


def max_three_final(first: int, second: int, tiebreaker_supplier: Callable[[], int]) -> FinalLabel:
    """Record the agreed label at effort 2, or call in a third voter.

    The supplier is only invoked on disagreement, and then exactly once;
    its label settles the request at effort 3.
    """
    if first == second:
        return FinalLabel(label=int(first), effort=2, voter_labels=(int(first), int(second)))
    third = int(tiebreaker_supplier())
    return FinalLabel(label=third, effort=3, voter_labels=(int(first), int(second), third))


def _pick_voters(strategy: Strategy, count: int, pool_size: int, rng: np.random.Generator) -> np.ndarray:
    if strategy.distinct_voters:
        if count > pool_size:
            raise ValueError(f"need {count} distinct voters but pool has {pool_size}")
        return rng.choice(pool_size, size=count, replace=False)
    return rng.integers(0, pool_size, size=count)


def apply_strategy(
    strategy: Strategy,
    request_difficulty: float,
    pool: WorkerPool,
    seed: SeedLike,
    fixed_worker_index: Optional[int] = None,
) -> FinalLabel:
    """Produce one final label for a request under the given strategy.

    fixed_worker_index must be given for fixed-worker (the caller owns the
    once-per-iteration worker draw) and must be omitted otherwise.
    """
    rng = as_generator(seed)
    caps = pool.capabilities

    if strategy.kind is StrategyKind.FIXED_WORKER:
        if fixed_worker_index is None:
            raise ValueError("fixed-worker requires fixed_worker_index")
        if not 0 <= fixed_worker_index < pool.pool_size:
            raise ValueError(f"fixed_worker_index {fixed_worker_index} outside pool of {pool.pool_size}")
        label = draw_label(selection_probability(caps[fixed_worker_index], request_difficulty), rng)
        return FinalLabel(label=label, effort=1, voter_labels=(label,))

    if fixed_worker_index is not None:
        raise ValueError(f"fixed_worker_index only applies to fixed-worker, not {strategy.kind.value}")

    if strategy.kind is StrategyKind.ONE_WORKER:
        w = int(_pick_voters(strategy, 1, pool.pool_size, rng)[0])
        label = draw_label(selection_probability(caps[w], request_difficulty), rng)
        return FinalLabel(label=label, effort=1, voter_labels=(label,))

    if strategy.kind is StrategyKind.N_WORKERS_MAJORITY:
        voters = _pick_voters(strategy, strategy.n_workers, pool.pool_size, rng)
        votes = tuple(
            draw_label(selection_probability(caps[w], request_difficulty), rng) for w in voters
        )
        return FinalLabel(label=majority_vote(votes), effort=len(votes), voter_labels=votes)

    # max-three: two voters, plus an independently drawn tiebreaker on demand
    # (with distinct_voters the potential tiebreaker is reserved up front so
    # all three are guaranteed different workers)
    if strategy.distinct_voters:
        voters = _pick_voters(strategy, 3, pool.pool_size, rng)
        reserved = int(voters[2])
    else:
        voters = _pick_voters(strategy, 2, pool.pool_size, rng)
        reserved = None
    first, second = (
        draw_label(selection_probability(caps[w], request_difficulty), rng) for w in voters[:2]
    )

    def tiebreaker() -> int:
        w = reserved if reserved is not None else int(rng.integers(0, pool.pool_size))
        return draw_label(selection_probability(caps[w], request_difficulty), rng)

    return max_three_final(first, second, tiebreaker)

"""Multi-iteration simulation experiments over the sequential decision rule.

One iteration walks a shuffled request order, produces a final label per
request under the configured strategy, and stops the moment the Hoeffding
band clears the 0.5 midline. An experiment repeats that over independent
per-iteration random substreams and aggregates the labelling effort of the
decided iterations with a percentile-bootstrap confidence interval.

Label generation inside an iteration is done in vectorised blocks (worker
indices, then uniforms, then the max-three tiebreakers for the disagreeing
requests in request order). The block layout is fixed, so results depend
only on (seed, iteration index) and never on scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .decision import Verdict
from .eval_model import RequestSet, WorkerPool, sample_capabilities, sample_difficulties
from .rng import (
    DOMAIN_BOOTSTRAP,
    DOMAIN_ITERATION,
    DOMAIN_POOL,
    DOMAIN_REQUESTS,
    SeedLike,
    as_generator,
    check_seed,
    substream,
)
from .strategies import Strategy, StrategyKind


@dataclass(frozen=True)
class ExperimentConfig:
    capability_lo: float
    capability_hi: float
    pool_size: int
    mu: float
    sigma: float
    n_requests: int
    strategy: Strategy
    delta: float
    iterations: int
    seed: int
    resample_difficulties_per_iteration: bool = False
    resample_pool_per_iteration: bool = False

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.n_requests < 1:
            raise ValueError(f"n_requests must be >= 1, got {self.n_requests}")
        check_seed(self.seed)


@dataclass(frozen=True)
class IterationResult:
    decided: bool
    verdict: Verdict
    n_at_decision: int
    effort: int
    trace: Optional[list] = None


@dataclass(frozen=True)
class ExperimentSummary:
    """mean_effort is over decided iterations only; NaN when none decided."""

    mean_effort: float
    ci_low: float
    ci_high: float
    decision_ratio: float
    per_iteration: list = field(repr=False, default_factory=list)


def _tolerances(delta: float, n: int) -> np.ndarray:
    ns = np.arange(1, n + 1, dtype=np.float64)
    return np.sqrt(-math.log(delta) / (2.0 * ns))


def _distinct_columns(rng: np.random.Generator, n: int, pool_size: int, k: int) -> np.ndarray:
    # k distinct voters per row via random sort keys over the pool
    if k > pool_size:
        raise ValueError(f"need {k} distinct voters but pool has {pool_size}")
    keys = rng.random((n, pool_size))
    return np.argsort(keys, axis=1)[:, :k]


def _final_labels(
    strategy: Strategy,
    difficulties: np.ndarray,
    capabilities: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Final label and per-request effort for every request, in order."""
    n = difficulties.size
    pool_size = capabilities.size
    kind = strategy.kind

    if kind is StrategyKind.FIXED_WORKER:
        worker = int(rng.integers(0, pool_size))
        prob = (capabilities[worker] * difficulties + 1.0) / 2.0
        finals = rng.random(n) < prob
        return finals.astype(np.int8), np.ones(n, dtype=np.int64)

    if kind is StrategyKind.ONE_WORKER:
        idx = rng.integers(0, pool_size, size=n)
        prob = (capabilities[idx] * difficulties + 1.0) / 2.0
        finals = rng.random(n) < prob
        return finals.astype(np.int8), np.ones(n, dtype=np.int64)

    if kind is StrategyKind.N_WORKERS_MAJORITY:
        k = strategy.n_workers
        if strategy.distinct_voters:
            idx = _distinct_columns(rng, n, pool_size, k)
        else:
            idx = rng.integers(0, pool_size, size=(n, k))
        prob = (capabilities[idx] * difficulties[:, None] + 1.0) / 2.0
        votes = rng.random((n, k)) < prob
        finals = votes.sum(axis=1) * 2 > k
        return finals.astype(np.int8), np.full(n, k, dtype=np.int64)

    # max-three
    if strategy.distinct_voters:
        idx3 = _distinct_columns(rng, n, pool_size, 3)
        idx, reserved = idx3[:, :2], idx3[:, 2]
    else:
        idx = rng.integers(0, pool_size, size=(n, 2))
        reserved = None
    prob = (capabilities[idx] * difficulties[:, None] + 1.0) / 2.0
    votes = rng.random((n, 2)) < prob
    disagree = votes[:, 0] != votes[:, 1]
    finals = votes[:, 0].astype(np.int8)
    m = int(disagree.sum())
    if m:
        if reserved is not None:
            tb_idx = reserved[disagree]
        else:
            tb_idx = rng.integers(0, pool_size, size=m)
        tb_prob = (capabilities[tb_idx] * difficulties[disagree] + 1.0) / 2.0
        finals[disagree] = rng.random(m) < tb_prob
    return finals, np.where(disagree, 3, 2).astype(np.int64)


def run_iteration(
    config: ExperimentConfig,
    requests: RequestSet,
    pool: WorkerPool,
    iteration_index: int,
    record_trace: bool = False,
) -> IterationResult:
    """One full evaluation: shuffled requests, labels, sequential stopping.

    Requests past the stopping point consume no effort. Exhausting the
    request supply without a verdict is a normal outcome (decided=False,
    effort covers everything spent).
    """
    rng = substream(config.seed, DOMAIN_ITERATION, iteration_index)
    if config.resample_difficulties_per_iteration:
        requests = sample_difficulties(config.mu, config.sigma, config.n_requests, rng)
    if config.resample_pool_per_iteration:
        pool = sample_capabilities(config.capability_lo, config.capability_hi, config.pool_size, rng)

    order = rng.permutation(requests.size)
    difficulties = requests.difficulties[order]
    finals, effort_per_request = _final_labels(strategy=config.strategy,
                                               difficulties=difficulties,
                                               capabilities=pool.capabilities,
                                               rng=rng)

    counts = np.cumsum(finals, dtype=np.int64)
    ns = np.arange(1, finals.size + 1, dtype=np.int64)
    means = counts / ns
    tol = _tolerances(config.delta, finals.size)
    a_hit = means - tol > 0.5
    ap_hit = means + tol < 0.5
    hit = a_hit | ap_hit

    if hit.any():
        stop = int(np.argmax(hit))
        decided = True
        verdict = Verdict.A_IS_BETTER if a_hit[stop] else Verdict.A_PRIME_IS_BETTER
        n_at = stop + 1
    else:
        decided = False
        verdict = Verdict.UNDECIDED
        n_at = int(finals.size)

    effort = int(effort_per_request[:n_at].sum())
    trace = None
    if record_trace:
        trace = [
            (int(ns[i]), float(means[i]), float(means[i] - tol[i]), float(means[i] + tol[i]))
            for i in range(n_at)
        ]
    return IterationResult(decided=decided, verdict=verdict, n_at_decision=n_at,
                           effort=effort, trace=trace)


def run_experiment(config: ExperimentConfig, trace_iterations: int = 0,
                   bootstrap_confidence: float = 0.99,
                   bootstrap_resamples: int = 10_000) -> ExperimentSummary:
    """Run all iterations of a configuration and aggregate labelling effort.

    The request difficulties and the worker pool are drawn once from the
    experiment seed and shared by every iteration, unless the per-iteration
    resample flags say otherwise. Iterations run on substreams keyed by
    (seed, iteration index), so the per-iteration results are identical
    under any execution order.
    """
    requests = sample_difficulties(config.mu, config.sigma, config.n_requests,
                                   substream(config.seed, DOMAIN_REQUESTS, 0))
    pool = sample_capabilities(config.capability_lo, config.capability_hi, config.pool_size,
                               substream(config.seed, DOMAIN_POOL, 0))
    results = [
        run_iteration(config, requests, pool, i, record_trace=i < trace_iterations)
        for i in range(config.iterations)
    ]
    decided_efforts = [r.effort for r in results if r.decided]
    ratio = len(decided_efforts) / config.iterations
    if decided_efforts:
        mean_effort = float(np.mean(decided_efforts))
        ci_low, ci_high = bootstrap_ci(decided_efforts, bootstrap_confidence,
                                       bootstrap_resamples,
                                       substream(config.seed, DOMAIN_BOOTSTRAP, 0))
    else:
        mean_effort = math.nan
        ci_low = ci_high = math.nan
    return ExperimentSummary(mean_effort=mean_effort, ci_low=ci_low, ci_high=ci_high,
                             decision_ratio=ratio, per_iteration=results)


def bootstrap_ci(samples, confidence: float, resamples: int, seed: SeedLike) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean of the samples."""
    data = np.asarray(samples, dtype=np.float64)
    if data.size == 0:
        raise ValueError("bootstrap_ci needs a nonempty sample")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    if resamples < 1:
        raise ValueError(f"resamples must be >= 1, got {resamples}")
    rng = as_generator(seed)
    means = np.empty(resamples, dtype=np.float64)
    chunk = max(1, min(resamples, 64_000_000 // max(1, data.size * 8)))
    done = 0
    while done < resamples:
        take = min(chunk, resamples - done)
        picks = rng.integers(0, data.size, size=(take, data.size))
        means[done:done + take] = data[picks].mean(axis=1)
        done += take
    alpha = (1.0 - confidence) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return float(lo), float(hi)

"""Replay labelling strategies over a recorded two-choice annotation set.

The input is real crowd data: request pairs, each voted on by several
workers. A replay iteration shuffles the requests, samples the votes a
strategy needs per request without replacement from that request's
recorded votes, and feeds the aggregated labels through the same
sequential decision rule the simulator uses. No label is ever fabricated
and no recorded vote is reused within one (request, iteration).

Fixed-worker cannot be replayed: recorded crowd data has no single worker
who voted on every request.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import decision
from .decision import DecisionConfig, DecisionState, Verdict
from .rng import DOMAIN_BOOTSTRAP, DOMAIN_ITERATION, as_generator, substream
from .simulator import ExperimentSummary, bootstrap_ci
from .strategies import Strategy, StrategyKind, majority_vote

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("request_id", "worker_id", "label")


class DataFormatError(ValueError):
    """Malformed annotation data; the message points at the offending spot."""


@dataclass(frozen=True)
class AnnotatedRequest:
    request_id: str
    votes: tuple  # ((worker_id, label), ...) in input order

    def __post_init__(self):
        seen = set()
        for worker_id, label in self.votes:
            if worker_id in seen:
                raise DataFormatError(
                    f"worker {worker_id!r} voted twice on request {self.request_id!r}")
            seen.add(worker_id)
            if label not in (0, 1):
                raise DataFormatError(f"label must be 0 or 1, got {label!r}")
        if not self.votes:
            raise DataFormatError(f"request {self.request_id!r} has no votes")


@dataclass(frozen=True)
class AnnotationSet:
    requests: tuple
    worker_ids: frozenset
    experiment_label: str

    def __len__(self) -> int:
        return len(self.requests)


@dataclass(frozen=True)
class ReplayResult:
    decided: bool
    verdict: Verdict
    n_at_decision: int
    effort: int


def parse_annotations(source, mapping: Optional[dict] = None,
                      experiment_label: str = "") -> AnnotationSet:
    """Read request/worker/label rows from CSV into an AnnotationSet.

    The expected header is request_id,worker_id,label with binary labels;
    extra columns are ignored. ``mapping`` adapts foreign schemas: keys
    request_id/worker_id/label name the actual columns, and an optional
    label_map dict translates raw label values to 0/1.
    """
    mapping = mapping or {}
    columns = {key: mapping.get(key, key) for key in REQUIRED_COLUMNS}
    label_map = mapping.get("label_map")

    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            return parse_annotations(handle, mapping, experiment_label or Path(source).stem)
    if isinstance(source, (bytes, bytearray)):
        source = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, io.RawIOBase) or (hasattr(source, "read") and
                                              isinstance(source.read(0), bytes)):
        source = io.TextIOWrapper(source, encoding="utf-8")

    reader = csv.DictReader(source)
    if not reader.fieldnames:
        raise DataFormatError("empty annotation file")
    missing = [col for col in columns.values() if col not in reader.fieldnames]
    if missing:
        raise DataFormatError(f"missing columns {missing} in header {reader.fieldnames}")

    votes_by_request: dict = {}
    seen_pairs = set()
    workers = set()
    for row in reader:
        line = reader.line_num
        request_id = row[columns["request_id"]]
        worker_id = row[columns["worker_id"]]
        raw = row[columns["label"]]
        if request_id is None or worker_id is None or raw is None:
            raise DataFormatError(f"line {line}: short row")
        if label_map is not None:
            if raw not in label_map:
                raise DataFormatError(f"line {line}: label {raw!r} not in label_map")
            label = int(label_map[raw])
        else:
            try:
                label = int(raw)
            except ValueError:
                raise DataFormatError(f"line {line}: label {raw!r} is not an integer") from None
        if label not in (0, 1):
            raise DataFormatError(f"line {line}: label must be 0 or 1, got {raw!r}")
        if (request_id, worker_id) in seen_pairs:
            raise DataFormatError(
                f"duplicate vote by worker {worker_id!r} on request {request_id!r}")
        seen_pairs.add((request_id, worker_id))
        workers.add(worker_id)
        votes_by_request.setdefault(request_id, []).append((worker_id, label))

    if not votes_by_request:
        raise DataFormatError("no annotation rows")
    requests = tuple(
        AnnotatedRequest(request_id=rid, votes=tuple(votes))
        for rid, votes in votes_by_request.items()
    )
    return AnnotationSet(requests=requests, worker_ids=frozenset(workers),
                         experiment_label=experiment_label)


def _check_replayable(annotations: AnnotationSet, strategy: Strategy) -> None:
    if strategy.kind is StrategyKind.FIXED_WORKER:
        raise ValueError("fixed-worker cannot be replayed on recorded data")
    demand = strategy.votes_needed()
    shortest = min(len(req.votes) for req in annotations.requests)
    if demand > shortest:
        raise ValueError(
            f"strategy {strategy.name} needs {demand} votes per request "
            f"but some request has only {shortest}")


def _label_arrays(annotations: AnnotationSet) -> list:
    # votes sorted by worker id so replay is independent of input row order
    return [
        np.array([label for _, label in sorted(req.votes)], dtype=np.int8)
        for req in annotations.requests
    ]


def replay_iteration(annotations: AnnotationSet, strategy: Strategy, delta: float,
                     iteration_index: int, seed: int,
                     _labels: Optional[list] = None) -> ReplayResult:
    """One replay pass: shuffled requests, recorded votes, sequential stop."""
    _check_replayable(annotations, strategy)
    labels = _labels if _labels is not None else _label_arrays(annotations)
    rng = substream(seed, DOMAIN_ITERATION, iteration_index)
    order = rng.permutation(len(labels))
    config = DecisionConfig(delta=delta)
    state = DecisionState()
    effort = 0
    n_at = 0

    for pos in order:
        votes = labels[pos]
        picks = rng.permutation(votes.size)
        if strategy.kind is StrategyKind.ONE_WORKER:
            final = int(votes[picks[0]])
            effort += 1
        elif strategy.kind is StrategyKind.N_WORKERS_MAJORITY:
            final = majority_vote(votes[picks[:strategy.n_workers]])
            effort += strategy.n_workers
        else:  # max-three
            first, second = votes[picks[0]], votes[picks[1]]
            if first == second:
                final = int(first)
                effort += 2
            else:
                final = int(votes[picks[2]])
                effort += 3
        state = decision.update(state, final, config)
        n_at += 1
        if state.verdict is not Verdict.UNDECIDED:
            return ReplayResult(decided=True, verdict=state.verdict,
                                n_at_decision=n_at, effort=effort)
    return ReplayResult(decided=False, verdict=Verdict.UNDECIDED,
                        n_at_decision=n_at, effort=effort)


def replay_experiment(annotations: AnnotationSet, strategy: Strategy, delta: float,
                      iterations: int, seed: int,
                      bootstrap_confidence: float = 0.99,
                      bootstrap_resamples: int = 10_000) -> ExperimentSummary:
    """Aggregate replay iterations the same way the simulator aggregates."""
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    _check_replayable(annotations, strategy)
    labels = _label_arrays(annotations)
    results = [
        replay_iteration(annotations, strategy, delta, i, seed, _labels=labels)
        for i in range(iterations)
    ]
    decided_efforts = [r.effort for r in results if r.decided]
    ratio = len(decided_efforts) / iterations
    if decided_efforts:
        mean_effort = float(np.mean(decided_efforts))
        ci_low, ci_high = bootstrap_ci(decided_efforts, bootstrap_confidence,
                                       bootstrap_resamples,
                                       substream(seed, DOMAIN_BOOTSTRAP, 0))
    else:
        mean_effort = float("nan")
        ci_low = ci_high = float("nan")
    return ExperimentSummary(mean_effort=mean_effort, ci_low=ci_low, ci_high=ci_high,
                             decision_ratio=ratio, per_iteration=results)


def fleiss_kappa(annotations: AnnotationSet, seed: int = 0) -> float:
    """Fleiss kappa over the two label categories.

                 P-bar - Pe-bar
        kappa = ----------------
                  1 - Pe-bar

    with per-request agreement P_i = sum_j n_ij (n_ij - 1) / (k (k - 1)).
    Requests must share a common vote count k; when counts differ, every
    request is subsampled (seeded, uniform) down to the smallest k, which
    is logged. If all votes land in one category, expected agreement is 1
    and kappa is defined as 1.
    """
    counts = [len(req.votes) for req in annotations.requests]
    k = min(counts)
    if k < 2:
        raise ValueError("fleiss_kappa needs at least 2 votes on every request")
    labels = _label_arrays(annotations)
    if max(counts) != k:
        log.warning("unequal vote counts (%d..%d); subsampling every request to k=%d",
                    k, max(counts), k)
        rng = as_generator(seed)
        labels = [votes[rng.permutation(votes.size)[:k]] for votes in labels]

    ones = np.array([int(v.sum()) for v in labels], dtype=np.float64)
    zeros = k - ones
    per_item = (ones * (ones - 1) + zeros * (zeros - 1)) / (k * (k - 1))
    p_bar = float(per_item.mean())
    p1 = float(ones.sum()) / (k * len(labels))
    pe_bar = p1 * p1 + (1.0 - p1) * (1.0 - p1)
    if pe_bar == 1.0:
        return 1.0
    return (p_bar - pe_bar) / (1.0 - pe_bar)

"""Two-alternative forced-choice evaluation with a sequential stopping rule.

Simulate annotator populations judging request pairs from two generative
models, or replay recorded crowd votes, and measure the labelling effort
each labelling strategy needs before one model is provably better.
"""

from .decision import (
    DecisionConfig,
    DecisionState,
    Verdict,
    hoeffding_tolerance,
    min_n_for_decision,
    update,
)
from .eval_model import (
    RequestSet,
    WorkerPool,
    draw_label,
    sample_capabilities,
    sample_difficulties,
    selection_probability,
)
from .replay import (
    AnnotatedRequest,
    AnnotationSet,
    DataFormatError,
    ReplayResult,
    fleiss_kappa,
    parse_annotations,
    replay_experiment,
    replay_iteration,
)
from .simulator import (
    ExperimentConfig,
    ExperimentSummary,
    IterationResult,
    bootstrap_ci,
    run_experiment,
    run_iteration,
)
from .strategies import (
    FinalLabel,
    Strategy,
    StrategyKind,
    apply_strategy,
    majority_vote,
    max_three_final,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedRequest",
    "AnnotationSet",
    "DataFormatError",
    "DecisionConfig",
    "DecisionState",
    "ExperimentConfig",
    "ExperimentSummary",
    "FinalLabel",
    "IterationResult",
    "ReplayResult",
    "RequestSet",
    "Strategy",
    "StrategyKind",
    "Verdict",
    "WorkerPool",
    "apply_strategy",
    "bootstrap_ci",
    "draw_label",
    "fleiss_kappa",
    "hoeffding_tolerance",
    "majority_vote",
    "max_three_final",
    "min_n_for_decision",
    "parse_annotations",
    "replay_experiment",
    "replay_iteration",
    "run_experiment",
    "run_iteration",
    "sample_capabilities",
    "sample_difficulties",
    "selection_probability",
    "update",
]

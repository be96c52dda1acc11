from .causal_effects import (
    AESummary,
    DifferenceSummary,
    absolute_error,
    ate,
    difference_to_reference,
    individual_effects,
    prediction_differences,
    summarize_absolute_error,
    summarize_differences,
)
from .evaluation import MetricsReport, score_predictions
from .fairness import dsp
from .pareto import pareto_front, pareto_share
from .scoring import auc, average_rank, correlation_table, kendall_tau, rank_methods, spearman

__all__ = [
    "AESummary",
    "DifferenceSummary",
    "MetricsReport",
    "absolute_error",
    "ate",
    "auc",
    "average_rank",
    "correlation_table",
    "difference_to_reference",
    "dsp",
    "individual_effects",
    "kendall_tau",
    "pareto_front",
    "pareto_share",
    "prediction_differences",
    "rank_methods",
    "score_predictions",
    "spearman",
    "summarize_absolute_error",
    "summarize_differences",
]

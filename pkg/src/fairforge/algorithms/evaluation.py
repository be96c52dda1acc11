"""
Per-dataset scoring of a method's predictions.

Combines the causal, group-fairness and accuracy measurements into one
`MetricsReport`. Measurements that are undefined for the inputs (no
counterfactual predictions, a single label class) are left as None instead of
being fabricated.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from .. import config
from ..core.tabular import PredictionSet
from ..errors import MetricError
from .causal_effects import AESummary, absolute_error, ate, summarize_absolute_error
from .fairness import dsp
from .scoring import auc

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricsReport:
    """
    Fairness and accuracy of one method on one dataset (or fold).

    Attributes:
        dataset_id: Identifier of the dataset or bundle.
        method: Name of the method that produced the predictions.
        group: Benchmark group or real-world dataset name.
        n_rows: Number of scored query rows.
        ate: Average treatment effect on probabilities, None without counterfactuals.
        ate_labels: Average treatment effect on labels thresholded at 0.5.
        ae_summary: Counterfactual absolute error summary, None without counterfactuals.
        dsp: Statistical parity difference on thresholded labels.
        auc: Area under the ROC curve, None without two label classes.
        error: 1 - auc.
        causal_information: The method used ground-truth causal knowledge.
        fold: Cross-validation fold, None for whole-dataset scores.
        extras: Free-form provenance (base_ate, sigma, n, manifest digest, ...).
    """

    dataset_id: str
    method: str
    group: str = ""
    n_rows: int = 0
    ate: Optional[float] = None
    ate_labels: Optional[float] = None
    ae_summary: Optional[AESummary] = None
    dsp: Optional[float] = None
    auc: Optional[float] = None
    error: Optional[float] = None
    causal_information: bool = False
    fold: Optional[int] = None
    extras: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, low in (("ate", -1.0), ("ate_labels", -1.0), ("dsp", 0.0),
                          ("auc", 0.0), ("error", 0.0)):
            value = getattr(self, name)
            if value is not None and not low - 1e-12 <= value <= 1.0 + 1e-12:
                raise MetricError(f"{name}={value} is out of range")

    @property
    def fairness_cost(self) -> Optional[float]:
        return None if self.ate is None else abs(self.ate)

    def to_dict(self) -> Dict[str, Any]:
        """Flat JSON-ready mapping; AE summary fields are prefixed with `ae_`."""
        ae = self.ae_summary
        return {
            "dataset_id": self.dataset_id,
            "method": self.method,
            "group": self.group,
            "fold": self.fold,
            "n_rows": self.n_rows,
            "ate": self.ate,
            "ate_labels": self.ate_labels,
            "ae_median": None if ae is None else ae.median,
            "ae_mean": None if ae is None else ae.mean,
            "ae_max": None if ae is None else ae.max,
            "ae_histogram": None if ae is None else list(ae.histogram),
            "dsp": self.dsp,
            "auc": self.auc,
            "error": self.error,
            "causal_information": self.causal_information,
            **{f"extra_{k}": v for k, v in sorted(self.extras.items())},
        }


def score_predictions(predictions: PredictionSet, dataset_id: str, method: str,
                      group: str = "", causal_information: bool = False,
                      fold: Optional[int] = None,
                      extras: Optional[Dict[str, Any]] = None) -> MetricsReport:
    """
    Score a method's predictions on one dataset.

    Args:
        predictions: Probabilities on the query rows, with labels and
            counterfactual predictions when available.
        dataset_id: Identifier stored on the report.
        method: Method name stored on the report.
        group: Benchmark group or dataset name.
        causal_information: Whether the method used causal ground truth.
        fold: Fold index for cross-validation runs.
        extras: Provenance copied onto the report.

    Returns:
        The `MetricsReport`.
    """
    probs, A = predictions.probs, predictions.A
    effect = effect_labels = None
    summary = None
    if predictions.probs_cf is not None:
        probs_cf = predictions.probs_cf
        effect = ate(probs, probs_cf, A)
        threshold = config.DSP_THRESHOLD
        effect_labels = ate((probs >= threshold).astype(np.float64),
                            (probs_cf >= threshold).astype(np.float64), A)
        summary = summarize_absolute_error(absolute_error(probs, probs_cf))

    parity = None
    if A.size and A.min() != A.max():
        parity = dsp(probs, A)
    else:
        logger.warning("%s on %s: single protected group, DSP unavailable", method, dataset_id)

    area = None
    labels = predictions.labels
    if labels is not None and labels.size and labels.min() != labels.max():
        area = auc(probs, labels)

    return MetricsReport(
        dataset_id=dataset_id,
        method=method,
        group=group,
        n_rows=predictions.n_rows,
        ate=effect,
        ate_labels=effect_labels,
        ae_summary=summary,
        dsp=parity,
        auc=area,
        error=None if area is None else 1.0 - area,
        causal_information=causal_information,
        fold=fold,
        extras=dict(extras or {}),
    )

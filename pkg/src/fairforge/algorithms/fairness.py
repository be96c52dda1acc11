"""
Group fairness module.

Statistical parity difference (DSP): the gap in positive-prediction rates
between the two protected groups.
"""
from typing import Union

import numpy as np

from .. import config
from ..errors import MetricError

DSP_MODES = ("labels", "probs")


def dsp(values: Union[np.ndarray, list], protected: Union[np.ndarray, list],
        mode: str = "labels", threshold: float = config.DSP_THRESHOLD) -> float:
    """
    Statistical parity difference |mean(y_hat | A=1) - mean(y_hat | A=0)|.

    Args:
        values: Predicted probabilities or hard 0/1 labels.
        protected: Binary protected attribute per row.
        mode: "labels" thresholds `values` at `threshold` first; "probs"
            compares mean probabilities directly.
        threshold: Decision threshold in labels mode (inclusive).

    Raises:
        MetricError: On misaligned inputs, values outside [0, 1], or a
            protected attribute with a single class.
    """
    if mode not in DSP_MODES:
        raise MetricError(f"unknown DSP mode {mode!r}, expected one of {DSP_MODES}")
    scores = np.asarray(values, dtype=np.float64)
    A = np.asarray(protected)
    if scores.ndim != 1 or scores.shape != A.shape:
        raise MetricError(f"values {scores.shape} and A {A.shape} are misaligned")
    if not np.all(np.isfinite(scores)) or scores.min() < 0.0 or scores.max() > 1.0:
        raise MetricError("values must be finite and within [0, 1]")
    if not np.isin(A, (0, 1)).all():
        raise MetricError("protected attribute must be binary")
    if A.min() == A.max():
        raise MetricError("DSP needs both protected groups")

    y_hat = (scores >= threshold).astype(np.float64) if mode == "labels" else scores
    return float(abs(y_hat[A == 1].mean() - y_hat[A == 0].mean()))

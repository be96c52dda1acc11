"""
Causal effect measurements on paired predictions.

Predictions on a set of rows and on their counterfactual twins (the same
units with the protected attribute flipped) give the individual treatment
effect of A on the predictor, its average, and the counterfactual absolute
error. The module also measures how far one predictor lies from a reference
predictor row by row.
"""
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np

from .. import config
from ..core.tabular import PredictionSet
from ..errors import MetricError

ArrayLike = Union[np.ndarray, list, tuple]


def _unit_vector(values: ArrayLike, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 1:
        raise MetricError(f"{name} must be a vector, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise MetricError(f"{name} contains non-finite values")
    if array.size and (array.min() < 0.0 or array.max() > 1.0):
        raise MetricError(f"{name} must lie within [0, 1]")
    return array


def _paired(probs_obs: ArrayLike, probs_cf: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    obs = _unit_vector(probs_obs, "probs_obs")
    cf = _unit_vector(probs_cf, "probs_cf")
    if obs.shape != cf.shape:
        raise MetricError(f"length mismatch: {obs.shape[0]} vs {cf.shape[0]}")
    if obs.size == 0:
        raise MetricError("no rows to compare")
    return obs, cf


def individual_effects(probs_obs: ArrayLike, probs_cf: ArrayLike,
                       protected: Optional[ArrayLike] = None) -> np.ndarray:
    """
    Per-row treatment effect of the protected attribute on a predictor.

    Args:
        probs_obs: Predictions in the observed world (each row's actual A).
        probs_cf: Predictions in the counterfactual world (flipped A).
        protected: Observed A per row. When given, each effect is oriented
            as (prediction under A=1) - (prediction under A=0); when None the
            raw difference obs - cf is returned.

    Returns:
        The effects, one per row.
    """
    obs, cf = _paired(probs_obs, probs_cf)
    if protected is None:
        return obs - cf
    A = np.asarray(protected)
    if A.shape != obs.shape:
        raise MetricError("protected attribute is misaligned with the predictions")
    if not np.isin(A, (0, 1)).all():
        raise MetricError("protected attribute must be binary")
    return np.where(A == 1, obs - cf, cf - obs)


def ate(probs_obs: ArrayLike, probs_cf: ArrayLike,
        protected: Optional[ArrayLike] = None) -> float:
    """
    Average treatment effect of the protected attribute on a predictor.

    Example: rows with A=(1, 0, 1), obs=(0.9, 0.2, 0.8) and cf=(0.1, 0.6, 0.8)
    give ((0.9-0.1) + (0.6-0.2) + 0) / 3 = 0.4.
    """
    return float(np.mean(individual_effects(probs_obs, probs_cf, protected)))


def absolute_error(probs_obs: ArrayLike, probs_cf: ArrayLike) -> np.ndarray:
    """Counterfactual absolute error |obs - cf| per row."""
    obs, cf = _paired(probs_obs, probs_cf)
    return np.abs(obs - cf)


class AESummary(NamedTuple):
    """Distribution summary of counterfactual absolute errors."""
    median: float
    mean: float
    max: float
    histogram: Tuple[int, ...]
    bin_edges: Tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "median": self.median,
            "mean": self.mean,
            "max": self.max,
            "histogram": list(self.histogram),
            "bin_edges": list(self.bin_edges),
        }


def summarize_absolute_error(errors: ArrayLike,
                             bins: int = config.AE_HISTOGRAM_BINS) -> AESummary:
    """Median, mean, maximum and a histogram over [0, 1] of absolute errors."""
    values = _unit_vector(errors, "errors")
    if values.size == 0:
        raise MetricError("no absolute errors to summarize")
    counts, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    return AESummary(
        median=float(np.median(values)),
        mean=float(np.mean(values)),
        max=float(np.max(values)),
        histogram=tuple(int(c) for c in counts),
        bin_edges=tuple(float(e) for e in edges),
    )


class DifferenceSummary(NamedTuple):
    """Signed row-wise difference of a candidate to a reference predictor."""
    mean: float
    std: float
    outlier_pct: float
    n_rows: int

    def __str__(self) -> str:
        return f"{self.mean:.2f}±{self.std:.2f} ({self.outlier_pct:.2f}%)"


def prediction_differences(candidate: Union[PredictionSet, ArrayLike],
                           reference: Union[PredictionSet, ArrayLike]) -> np.ndarray:
    """Signed per-row difference candidate - reference."""
    cand = candidate.probs if isinstance(candidate, PredictionSet) else candidate
    ref = reference.probs if isinstance(reference, PredictionSet) else reference
    if isinstance(candidate, PredictionSet) and isinstance(reference, PredictionSet):
        if candidate.row_ids is not None and reference.row_ids is not None and not np.array_equal(
            candidate.row_ids, reference.row_ids
        ):
            raise MetricError("candidate and reference cover different rows")
    obs, ref_values = _paired(cand, ref)
    return obs - ref_values


def summarize_differences(differences: ArrayLike,
                          outlier_stds: float = config.OUTLIER_STDS) -> DifferenceSummary:
    """
    Mean, population standard deviation and outlier share of differences.

    A row is an outlier when it lies more than `outlier_stds` standard
    deviations from the mean; the share is reported in percent.
    """
    diffs = np.asarray(differences, dtype=np.float64)
    if diffs.ndim != 1 or diffs.size == 0:
        raise MetricError("differences must be a non-empty vector")
    mean = float(np.mean(diffs))
    std = float(np.std(diffs))
    outliers = np.abs(diffs - mean) > outlier_stds * std
    return DifferenceSummary(mean=mean, std=std,
                             outlier_pct=float(100.0 * np.mean(outliers)),
                             n_rows=int(diffs.size))


def difference_to_reference(candidate: Union[PredictionSet, ArrayLike],
                            reference: Union[PredictionSet, ArrayLike]) -> DifferenceSummary:
    """Summarize how far a candidate's predictions lie from a reference's."""
    return summarize_differences(prediction_differences(candidate, reference))

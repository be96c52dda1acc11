"""
Ranking statistics module.

Rank-based accuracy and association measures: AUC as a Mann-Whitney
statistic with midranks, Kendall's tau-b, and the average rank of methods
across datasets.
"""
from typing import Dict, List, Mapping, Sequence, Union

import numpy as np
from scipy.stats import kendalltau, rankdata, spearmanr

from ..errors import MetricError

ArrayLike = Union[np.ndarray, list, tuple]


def auc(scores: ArrayLike, labels: ArrayLike) -> float:
    """
    Area under the ROC curve.

    Computed as the Mann-Whitney U statistic of the positive class divided by
    n1 * n0, with tied scores sharing their midrank, so all-equal scores give
    exactly 0.5.

    Raises:
        MetricError: On misaligned inputs or labels with a single class.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.ndim != 1 or s.shape != y.shape:
        raise MetricError(f"scores {s.shape} and labels {y.shape} are misaligned")
    if not np.all(np.isfinite(s)):
        raise MetricError("scores contain non-finite values")
    if not np.isin(y, (0, 1)).all():
        raise MetricError("labels must be binary")
    positives = y == 1
    n1 = int(positives.sum())
    n0 = int(y.size - n1)
    if n1 == 0 or n0 == 0:
        raise MetricError("AUC needs both label classes")
    ranks = rankdata(s, method="average")
    u = ranks[positives].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


def kendall_tau(x: ArrayLike, y: ArrayLike) -> float:
    """
    Kendall's tau-b between two vectors.

    Raises:
        MetricError: When fewer than two pairs are given, the inputs are
            misaligned, or tau is undefined (a constant input).
    """
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise MetricError(f"inputs {a.shape} and {b.shape} are misaligned")
    if a.size < 2:
        raise MetricError("Kendall's tau needs at least two observations")
    if a.min() == a.max() or b.min() == b.max():
        raise MetricError("Kendall's tau is undefined for a constant input")
    tau, _ = kendalltau(a, b, variant="b")
    if not np.isfinite(tau):
        raise MetricError("Kendall's tau is undefined for these inputs")
    return float(tau)


def spearman(x: ArrayLike, y: ArrayLike) -> float:
    """Spearman rank correlation, used on bucket medians of ablations."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape or a.size < 2:
        raise MetricError("Spearman correlation needs two aligned vectors of length >= 2")
    rho, _ = spearmanr(a, b)
    if not np.isfinite(rho):
        raise MetricError("Spearman correlation is undefined for a constant input")
    return float(rho)


def average_rank(table: ArrayLike) -> np.ndarray:
    """
    Mean rank of each method across datasets.

    Args:
        table: Costs of shape (methods, datasets), lower is better. On every
            dataset the best method gets rank 1 and ties share midranks.

    Returns:
        One mean rank per method.

    Raises:
        MetricError: On an empty table or missing (non-finite) cells.
    """
    costs = np.asarray(table, dtype=np.float64)
    if costs.ndim == 1:
        costs = costs[:, None]
    if costs.ndim != 2 or costs.size == 0:
        raise MetricError(f"rank table must be a non-empty matrix, got shape {costs.shape}")
    if not np.all(np.isfinite(costs)):
        raise MetricError("rank table has missing cells")
    ranks = rankdata(costs, method="average", axis=0)
    return ranks.mean(axis=1)


def correlation_table(columns: Mapping[str, ArrayLike],
                      targets: Mapping[str, ArrayLike]) -> List[Dict[str, object]]:
    """
    Kendall's tau of every target (predictions, labels) with every column.

    Undefined pairs are reported as NaN rather than raised, so one constant
    prediction vector does not drop a whole table.
    """
    rows: List[Dict[str, object]] = []
    for target, values in targets.items():
        row: Dict[str, object] = {"target": target}
        for name, column in columns.items():
            try:
                row[name] = kendall_tau(column, values)
            except MetricError:
                row[name] = float("nan")
        rows.append(row)
    return rows


def rank_methods(costs: Mapping[str, Sequence[float]]) -> Dict[str, float]:
    """`average_rank` keyed by method name."""
    names = list(costs)
    if not names:
        return {}
    lengths = {len(costs[name]) for name in names}
    if len(lengths) != 1:
        raise MetricError("every method must be scored on the same datasets")
    ranks = average_rank(np.array([costs[name] for name in names], dtype=np.float64))
    return {name: float(rank) for name, rank in zip(names, ranks)}

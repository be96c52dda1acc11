"""
Pareto front module.

Finds the non-dominated points of a two-objective trade-off where both
objectives (fairness cost and predictive error) are minimized.
"""
from typing import Dict, Sequence, Union

import numpy as np

from ..errors import MetricError


def pareto_front(points: Union[np.ndarray, Sequence[Sequence[float]]]) -> np.ndarray:
    """
    Flag the points on the Pareto front.

    A point is on the front iff no other point is <= in every coordinate and
    < in at least one. Duplicated points do not dominate each other.

    Args:
        points: Array of shape (k, d), lower is better on every axis.

    Returns:
        Boolean membership flags, shape (k,).
    """
    P = np.asarray(points, dtype=np.float64)
    if P.size == 0:
        return np.zeros(0, dtype=bool)
    if P.ndim != 2:
        raise MetricError(f"points must have shape (k, d), got {P.shape}")
    if not np.all(np.isfinite(P)):
        raise MetricError("points contain non-finite coordinates")
    # [i, j] compares candidate dominator j against point i.
    no_worse = (P[None, :, :] <= P[:, None, :]).all(axis=-1)
    better = (P[None, :, :] < P[:, None, :]).any(axis=-1)
    dominated = (no_worse & better).any(axis=1)
    return ~dominated


def pareto_share(methods: Sequence[str], on_front: Sequence[bool]) -> Dict[str, float]:
    """Fraction of each method's points that lie on the front."""
    if len(methods) != len(on_front):
        raise MetricError("methods and front flags are misaligned")
    shares: Dict[str, float] = {}
    for name in dict.fromkeys(methods):
        flags = [bool(f) for m, f in zip(methods, on_front) if m == name]
        shares[name] = sum(flags) / len(flags)
    return shares

"""
Tabular data primitives.

Defines `TabularDataset`, the (A, X, y) triple every module exchanges, and
`PredictionSet`, the probabilities a method produces on a set of query rows,
optionally paired with its predictions on the rows' counterfactual twins.
"""
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionError, SchemaError


def _as_binary(values: np.ndarray, name: str) -> np.ndarray:
    array = np.asarray(values)
    if array.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {array.shape}")
    if array.size and not np.isin(array, (0, 1)).all():
        raise SchemaError(f"{name} must be binary (0/1)")
    return array.astype(np.int64)


@dataclass(frozen=True)
class TabularDataset:
    """
    Rows of a protected attribute, features and an optional binary target.

    `column_names` lists the m+1 input columns in their original order, the
    protected column included at `protected_index`; `X` holds the remaining m
    columns in that order.

    Attributes:
        A: Binary protected attribute, shape (n,).
        X: Real feature matrix, shape (n, m).
        y: Binary target, shape (n,), or None for unlabeled query rows.
        column_names: Names of the m+1 input columns.
        protected_index: Position of the protected column in `column_names`.
        target_name: Name of the target column.
    """

    A: np.ndarray
    X: np.ndarray
    y: Optional[np.ndarray]
    column_names: Tuple[str, ...]
    protected_index: int = 0
    target_name: str = "y"

    def __post_init__(self) -> None:
        A = _as_binary(self.A, "A")
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(len(A), 0)
        if X.ndim != 2 or X.shape[0] != A.shape[0]:
            raise DimensionError(
                f"X must have one row per protected value: {X.shape} vs {A.shape}"
            )
        y = None if self.y is None else _as_binary(self.y, "y")
        if y is not None and y.shape[0] != A.shape[0]:
            raise DimensionError(f"y has {y.shape[0]} rows, expected {A.shape[0]}")
        names = tuple(self.column_names)
        if len(names) != X.shape[1] + 1:
            raise SchemaError(
                f"expected {X.shape[1] + 1} column names, got {len(names)}"
            )
        if not 0 <= self.protected_index < len(names):
            raise SchemaError(f"protected_index {self.protected_index} out of range")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", names)

    @property
    def n_rows(self) -> int:
        return int(self.A.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.X.shape[1])

    @property
    def protected_name(self) -> str:
        return self.column_names[self.protected_index]

    @property
    def feature_names(self) -> Tuple[str, ...]:
        names = list(self.column_names)
        del names[self.protected_index]
        return tuple(names)

    def full_matrix(self) -> np.ndarray:
        """Return the (n, m+1) input matrix with A at `protected_index`."""
        return np.insert(self.X, self.protected_index, self.A.astype(np.float64), axis=1)

    def take(self, rows: Sequence[int]) -> "TabularDataset":
        """Return the subset of rows given by integer indices."""
        rows = np.asarray(rows, dtype=np.int64)
        return TabularDataset(
            A=self.A[rows],
            X=self.X[rows],
            y=None if self.y is None else self.y[rows],
            column_names=self.column_names,
            protected_index=self.protected_index,
            target_name=self.target_name,
        )

    def with_protected(self, A: np.ndarray) -> "TabularDataset":
        """Return a copy with the protected column replaced."""
        return TabularDataset(
            A=A,
            X=self.X,
            y=self.y,
            column_names=self.column_names,
            protected_index=self.protected_index,
            target_name=self.target_name,
        )

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, y: Optional[np.ndarray],
                    column_names: Sequence[str], protected_index: int,
                    target_name: str = "y") -> "TabularDataset":
        """Build a dataset from an (n, m+1) matrix holding A at `protected_index`."""
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != len(column_names):
            raise SchemaError(
                f"matrix shape {matrix.shape} does not match {len(column_names)} columns"
            )
        return cls(
            A=matrix[:, protected_index],
            X=np.delete(matrix, protected_index, axis=1),
            y=y,
            column_names=tuple(column_names),
            protected_index=protected_index,
            target_name=target_name,
        )


@dataclass(frozen=True)
class PredictionSet:
    """
    Predicted probabilities on a set of query rows.

    Attributes:
        probs: Probabilities in [0, 1], shape (n,).
        A: Binary protected attribute of the rows, shape (n,).
        labels: True binary labels of the rows, if known.
        probs_cf: Predictions on the rows' counterfactual twins, if available.
        row_ids: Identifiers of the rows inside their source dataset.
    """

    probs: np.ndarray
    A: np.ndarray
    labels: Optional[np.ndarray] = None
    probs_cf: Optional[np.ndarray] = None
    row_ids: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        A = _as_binary(self.A, "A")
        if probs.shape != A.shape:
            raise DimensionError(f"probs {probs.shape} and A {A.shape} are misaligned")
        _check_probabilities(probs, "probs")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "A", A)
        if self.labels is not None:
            labels = _as_binary(self.labels, "labels")
            if labels.shape != A.shape:
                raise DimensionError("labels are misaligned with probs")
            object.__setattr__(self, "labels", labels)
        if self.probs_cf is not None:
            probs_cf = np.asarray(self.probs_cf, dtype=np.float64)
            if probs_cf.shape != probs.shape:
                raise DimensionError("probs_cf are misaligned with probs")
            _check_probabilities(probs_cf, "probs_cf")
            object.__setattr__(self, "probs_cf", probs_cf)

    @property
    def n_rows(self) -> int:
        return int(self.probs.shape[0])

    @property
    def has_counterfactual(self) -> bool:
        return self.probs_cf is not None


def _check_probabilities(values: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(values)):
        raise SchemaError(f"{name} contains non-finite values")
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise SchemaError(f"{name} must lie within [0, 1]")

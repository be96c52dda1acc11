"""K-fold splits for the real-world evaluation."""
from typing import List, NamedTuple

import numpy as np
from sklearn.model_selection import KFold

from .. import config
from ..errors import ConfigurationError


class FoldSplit(NamedTuple):
    """Row ids of one cross-validation fold."""
    fold: int
    train: np.ndarray
    validation: np.ndarray


def kfold(n_rows: int, k: int = config.KFOLD_SPLITS, seed: int = 0) -> List[FoldSplit]:
    """
    Shuffled K-fold partition of `n_rows` rows.

    Validation sets are pairwise disjoint and cover every row once; the
    partition depends only on (n_rows, k, seed).
    """
    if k < 2:
        raise ConfigurationError("k must be at least 2")
    if n_rows < k:
        raise ConfigurationError(f"cannot split {n_rows} rows into {k} folds")
    splitter = KFold(n_splits=k, shuffle=True, random_state=int(seed) % 2**32)
    return [
        FoldSplit(fold=i, train=np.sort(train), validation=np.sort(validation))
        for i, (train, validation) in enumerate(splitter.split(np.zeros((n_rows, 1))))
    ]

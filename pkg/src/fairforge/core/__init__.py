from .random import derive_seed, log_uniform, rng_for
from .tabular import PredictionSet, TabularDataset

__all__ = ["PredictionSet", "TabularDataset", "derive_seed", "log_uniform", "rng_for"]

"""
Seeded random streams.

Every stochastic routine derives its own generator from a root seed and a
path of integer indices, so work items can run in any order or in parallel
and still reproduce bit for bit.
"""
from typing import Tuple

import numpy as np

from ..errors import ConfigurationError

_SEED_MASK = (1 << 64) - 1


def derive_seed(seed: int, *path: int) -> int:
    """Derive a 64-bit sub-seed from a root seed and an index path."""
    entropy = [int(seed) & _SEED_MASK, *(int(p) & _SEED_MASK for p in path)]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def rng_for(seed: int, *path: int) -> np.random.Generator:
    """Return an independent Philox generator for (seed, *path)."""
    entropy = [int(seed) & _SEED_MASK, *(int(p) & _SEED_MASK for p in path)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def log_uniform(rng: np.random.Generator, bounds: Tuple[float, float]) -> float:
    """Draw one value log-uniformly from [low, high]."""
    low, high = check_range(bounds, "log-uniform range", positive=True)
    if low == high:
        return float(low)
    return float(np.exp(rng.uniform(np.log(low), np.log(high))))


def check_range(bounds: Tuple[float, float], name: str,
                positive: bool = False) -> Tuple[float, float]:
    """Validate a (low, high) pair and return it as floats."""
    try:
        low, high = (float(b) for b in bounds)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{name} must be a (low, high) pair") from exc
    if not (np.isfinite(low) and np.isfinite(high)):
        raise ConfigurationError(f"{name} must be finite, got ({low}, {high})")
    if low > high:
        raise ConfigurationError(f"{name} has low > high: ({low}, {high})")
    if positive and low <= 0:
        raise ConfigurationError(f"{name} must be positive, got ({low}, {high})")
    return low, high

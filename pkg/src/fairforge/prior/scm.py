"""
Sparse-MLP structural causal model prior.

Samples layered MLPs whose nodes play the role of variables in a structural
causal model: layer 0 holds the exogenous causes (one of them the protected
attribute A), later layers hold endogenous variables computed as

    X_{i+1} = z_i(P_i * W_i^T X_i + eps_{i+1})

Each sample is propagated twice on identical exogenous and noise draws: once
as is (biased world) and once with the outgoing edges of A removed from the
first weight matrix (fair world). Features are read from the biased pass, the
fair target from the masked pass.
"""
import dataclasses
import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.stats import norm

from .. import config
from ..core.random import check_range, derive_seed, log_uniform, rng_for
from ..core.tabular import TabularDataset
from ..errors import (
    ConfigurationError,
    DegenerateSampleError,
    DimensionError,
    NumericError,
    SchemaError,
)

logger = logging.getLogger(__name__)

Activation = Callable[[np.ndarray], np.ndarray]

NONLINEARITIES: Dict[str, Activation] = {
    "identity": lambda x: x,
    "relu": lambda x: np.maximum(x, 0.0),
    "tanh": np.tanh,
}


def available_feature_count(width: int, depth: int) -> int:
    """Number of endogenous nodes features may be drawn from."""
    first = _first_feature_layer(depth)
    return width * (depth - first) - 1


def _first_feature_layer(depth: int) -> int:
    # Layer 2 onwards when it exists; with two layers only layer 1 is endogenous.
    return 2 if depth >= 3 else 1


@dataclass(frozen=True)
class PriorConfig:
    """
    Settings of the synthetic data prior.

    The four optional ranges switch on per-dataset variation in
    `sample_prior_batch`; when left as None the fixed value is used.
    `PriorConfig.varied` fills them from the configured defaults.
    """

    num_exogenous: int = config.PRIOR_NUM_EXOGENOUS
    depth: int = config.PRIOR_DEPTH
    num_features: int = config.PRIOR_NUM_FEATURES
    num_samples: int = config.PRIOR_NUM_SAMPLES
    sparsity_log_range: Tuple[float, float] = config.PRIOR_SPARSITY_LOG_RANGE
    noise_std_range: Tuple[float, float] = config.PRIOR_NOISE_STD_RANGE
    nonlinearity_set: Tuple[str, ...] = config.PRIOR_NONLINEARITIES
    seed: int = 0
    sample_size_range: Optional[Tuple[int, int]] = None
    feature_range: Optional[Tuple[int, int]] = None
    width_range: Optional[Tuple[int, int]] = None
    depth_range: Optional[Tuple[int, int]] = None

    def validate(self) -> "PriorConfig":
        """Check the invariants and return self, raising `ConfigurationError`."""
        if self.num_exogenous < 2:
            raise ConfigurationError("num_exogenous must be at least 2")
        if self.depth < 2:
            raise ConfigurationError("depth must be at least 2")
        if self.num_features < 1:
            raise ConfigurationError("num_features must be positive")
        if self.num_samples < 2:
            raise ConfigurationError("num_samples must be at least 2")
        available = available_feature_count(self.num_exogenous, self.depth)
        if self.num_features > available:
            raise ConfigurationError(
                f"num_features={self.num_features} exceeds the {available} "
                f"endogenous nodes available for U={self.num_exogenous}, H={self.depth}"
            )
        low, high = check_range(self.sparsity_log_range, "sparsity_log_range", positive=True)
        if high > 1.0:
            raise ConfigurationError("sparsity_log_range must lie within (0, 1]")
        check_range(self.noise_std_range, "noise_std_range", positive=True)
        if not self.nonlinearity_set:
            raise ConfigurationError("nonlinearity_set is empty")
        unknown = set(self.nonlinearity_set) - set(NONLINEARITIES)
        if unknown:
            raise ConfigurationError(f"unknown nonlinearities: {sorted(unknown)}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        for name, minimum in (("sample_size_range", 2), ("feature_range", 1),
                              ("width_range", 2), ("depth_range", 2)):
            bounds = getattr(self, name)
            if bounds is not None:
                low, _ = check_range(bounds, name)
                if low < minimum:
                    raise ConfigurationError(f"{name} must start at {minimum} or above")
        return self

    @classmethod
    def varied(cls, max_features: int = config.MAX_FEATURES, seed: int = 0) -> "PriorConfig":
        """
        The pre-training prior: architecture, feature count and sample size
        vary per dataset over the configured ranges.

        The feature range is capped at `max_features` so every dataset fits
        the model.
        """
        low, high = config.PRIOR_FEATURE_RANGE
        high = min(high, max_features)
        return cls(
            seed=seed,
            sample_size_range=config.PRIOR_SAMPLE_SIZE_RANGE,
            feature_range=(min(low, high), high),
            width_range=config.PRIOR_WIDTH_RANGE,
            depth_range=config.PRIOR_DEPTH_RANGE,
        ).validate()

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: _jsonable(getattr(self, f.name)) for f in dataclasses.fields(self)}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "PriorConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ConfigurationError(f"unknown prior config keys: {sorted(unknown)}")
        values = {k: tuple(v) if isinstance(v, list) else v for k, v in payload.items()}
        return cls(**values).validate()

    def digest(self) -> str:
        """Short content hash used for checkpoint provenance."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _jsonable(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass(frozen=True, eq=False)
class ScmSpec:
    """
    A sampled sparse-MLP structural causal model.

    Attributes:
        weights: Edge weights W, shape (U, U, H-1); W[:, :, i] maps layer i to i+1.
        masks: 0/1 sparsity masks P, same shape as `weights`.
        nonlinearities: H activation tags; tag i is applied to layer i.
        protected_row: Index k of the protected attribute in layer 0.
        protected_threshold: Threshold a_t binarizing the raw protected draw.
        protected_values: Values (a_0, a_1) the protected node takes per class.
        feature_locations: (layer, index) of each of the m features.
        outcome_location: Index of the outcome node in the last layer.
        outcome_threshold: Threshold y_t binarizing both outcomes.
        noise_std: Standard deviation of the additive Gaussian noise.
    """

    weights: np.ndarray
    masks: np.ndarray
    nonlinearities: Tuple[str, ...]
    protected_row: int
    protected_threshold: float
    protected_values: Tuple[float, float]
    feature_locations: Tuple[Tuple[int, int], ...]
    outcome_location: int
    outcome_threshold: float
    noise_std: float

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=np.float64)
        masks = np.asarray(self.masks)
        if weights.ndim != 3 or weights.shape[0] != weights.shape[1]:
            raise DimensionError(f"weights must be (U, U, H-1), got {weights.shape}")
        if masks.shape != weights.shape:
            raise DimensionError(f"masks {masks.shape} do not match weights {weights.shape}")
        if not np.isin(masks, (0, 1)).all():
            raise ConfigurationError("masks must be 0/1 valued")
        width, _, transitions = weights.shape
        depth = transitions + 1
        if len(self.nonlinearities) != depth:
            raise DimensionError(f"expected {depth} nonlinearities, got {len(self.nonlinearities)}")
        unknown = set(self.nonlinearities) - set(NONLINEARITIES)
        if unknown:
            raise ConfigurationError(f"unknown nonlinearities: {sorted(unknown)}")
        if not 0 <= self.protected_row < width:
            raise DimensionError(f"protected_row {self.protected_row} out of range")
        if not 0 <= self.outcome_location < width:
            raise DimensionError(f"outcome_location {self.outcome_location} out of range")
        locations = tuple((int(layer), int(index)) for layer, index in self.feature_locations)
        for layer, index in locations:
            if not (1 <= layer <= depth - 1 and 0 <= index < width):
                raise DimensionError(f"feature location ({layer}, {index}) out of range")
        if not self.noise_std > 0:
            raise ConfigurationError("noise_std must be positive")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "masks", masks.astype(np.int8))
        object.__setattr__(self, "nonlinearities", tuple(self.nonlinearities))
        object.__setattr__(self, "feature_locations", locations)
        object.__setattr__(self, "protected_values",
                           (float(self.protected_values[0]), float(self.protected_values[1])))

    @property
    def width(self) -> int:
        return int(self.weights.shape[0])

    @property
    def depth(self) -> int:
        return int(self.weights.shape[2]) + 1

    @property
    def num_features(self) -> int:
        return len(self.feature_locations)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "weights": self.weights.tolist(),
            "masks": self.masks.tolist(),
            "nonlinearities": list(self.nonlinearities),
            "protected_row": self.protected_row,
            "protected_threshold": self.protected_threshold,
            "protected_values": list(self.protected_values),
            "feature_locations": [list(loc) for loc in self.feature_locations],
            "outcome_location": self.outcome_location,
            "outcome_threshold": self.outcome_threshold,
            "noise_std": self.noise_std,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ScmSpec":
        return cls(
            weights=np.asarray(payload["weights"], dtype=np.float64),
            masks=np.asarray(payload["masks"], dtype=np.int8),
            nonlinearities=tuple(payload["nonlinearities"]),
            protected_row=int(payload["protected_row"]),
            protected_threshold=float(payload["protected_threshold"]),
            protected_values=tuple(payload["protected_values"]),
            feature_locations=tuple(tuple(loc) for loc in payload["feature_locations"]),
            outcome_location=int(payload["outcome_location"]),
            outcome_threshold=float(payload["outcome_threshold"]),
            noise_std=float(payload["noise_std"]),
        )


class NoiseRecord(NamedTuple):
    """Per-sample draws behind a generated dataset, kept for oracle checks."""
    exogenous: np.ndarray
    raw_protected: np.ndarray
    noise: np.ndarray


@dataclass(frozen=True, eq=False)
class PriorSample:
    """A biased dataset, its fair targets and the SCM that produced both."""

    dataset: TabularDataset
    y_fair: np.ndarray
    scm: ScmSpec
    noise_draws: Optional[NoiseRecord] = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.y_fair.shape != (self.dataset.n_rows,):
            raise DimensionError("y_fair must have one label per dataset row")


class CounterfactualWorld(NamedTuple):
    """A prior sample re-propagated with every protected value flipped."""
    dataset: TabularDataset
    y_fair: np.ndarray


class DatasetShape(NamedTuple):
    width: int
    depth: int
    num_features: int
    num_samples: int


def sample_scm(prior: PriorConfig, seed: int) -> ScmSpec:
    """
    Sample a sparse-MLP SCM.

    Weights are standard normal scaled by 1/sqrt(U); every mask entry is kept
    with a probability drawn log-uniformly from `sparsity_log_range`. The
    outcome threshold is the quantile of a short pilot run at a level drawn
    uniformly from the configured quantile range.

    Args:
        prior: Prior settings; validated before sampling.
        seed: Seed of this SCM.

    Returns:
        The sampled `ScmSpec`, deterministic for fixed (prior, seed).
    """
    prior.validate()
    rng = rng_for(seed, 0)
    width, depth = prior.num_exogenous, prior.depth

    weights = rng.standard_normal((width, width, depth - 1)) / np.sqrt(width)
    density = log_uniform(rng, prior.sparsity_log_range)
    masks = (rng.random(weights.shape) < density).astype(np.int8)
    choices = sorted(prior.nonlinearity_set)
    nonlinearities = tuple(choices[i] for i in rng.integers(len(choices), size=depth))

    protected_row = int(rng.integers(width))
    protected_values = tuple(float(v) for v in rng.standard_normal(2))
    q_low, q_high = config.PRIOR_THRESHOLD_QUANTILE_RANGE
    protected_threshold = float(norm.ppf(rng.uniform(q_low, q_high)))

    outcome_location = int(rng.integers(width))
    first = _first_feature_layer(depth)
    candidates = [
        (layer, index)
        for layer in range(first, depth)
        for index in range(width)
        if not (layer == depth - 1 and index == outcome_location)
    ]
    picked = rng.choice(len(candidates), size=prior.num_features, replace=False)
    feature_locations = tuple(candidates[i] for i in picked)
    noise_std = log_uniform(rng, prior.noise_std_range)

    scm = ScmSpec(
        weights=weights,
        masks=masks,
        nonlinearities=nonlinearities,
        protected_row=protected_row,
        protected_threshold=protected_threshold,
        protected_values=protected_values,
        feature_locations=feature_locations,
        outcome_location=outcome_location,
        outcome_threshold=0.0,
        noise_std=noise_std,
    )
    pilot_rng = rng_for(seed, 1)
    exogenous, raw, noise = _draw(scm, config.PRIOR_PILOT_SAMPLES, pilot_rng)
    _set_protected(scm, exogenous, (raw > protected_threshold).astype(np.int64))
    outcome = propagate(scm, exogenous, noise)[:, outcome_location, -1]
    threshold = float(np.quantile(outcome, rng.uniform(q_low, q_high)))
    return dataclasses.replace(scm, outcome_threshold=threshold)


def propagate(scm: ScmSpec, exogenous: np.ndarray, noise: np.ndarray,
              protected_masked: bool = False) -> np.ndarray:
    """
    Run the MLP on a batch of samples.

    Args:
        scm: The SCM to evaluate.
        exogenous: Exogenous values, shape (n, U).
        noise: Additive noise, shape (n, U, H); column i feeds layer i.
        protected_masked: Treat row k of the first weight matrix as zero.

    Returns:
        Activations of every layer, shape (n, U, H).

    Raises:
        DimensionError: If the input shapes do not match the SCM.
        NumericError: If a layer produces a non-finite value.
    """
    width, depth = scm.width, scm.depth
    exogenous = np.asarray(exogenous, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if exogenous.ndim != 2 or exogenous.shape[1] != width:
        raise DimensionError(f"exogenous must be (n, {width}), got {exogenous.shape}")
    if noise.shape != (exogenous.shape[0], width, depth):
        raise DimensionError(
            f"noise must be ({exogenous.shape[0]}, {width}, {depth}), got {noise.shape}"
        )
    if not np.all(np.isfinite(noise)):
        raise NumericError("noise contains non-finite values")

    effective = scm.masks * scm.weights
    if protected_masked:
        effective = effective.copy()
        effective[scm.protected_row, :, 0] = 0.0

    activations = np.empty((exogenous.shape[0], width, depth))
    layer = NONLINEARITIES[scm.nonlinearities[0]](exogenous + noise[:, :, 0])
    activations[:, :, 0] = _checked(layer, 0)
    for i in range(depth - 1):
        pre = activations[:, :, i] @ effective[:, :, i] + noise[:, :, i + 1]
        layer = NONLINEARITIES[scm.nonlinearities[i + 1]](_checked(pre, i + 1))
        activations[:, :, i + 1] = _checked(layer, i + 1)
    return activations


def _checked(values: np.ndarray, layer: int) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NumericError("non-finite activation", layer=f"layer {layer}")
    return np.clip(values, -config.ACTIVATION_CLIP, config.ACTIVATION_CLIP)


def forward_pass(scm: ScmSpec, exogenous: np.ndarray, noise: np.ndarray,
                 protected_masked: bool = False) -> np.ndarray:
    """
    Evaluate the MLP for a single sample.

    Args:
        scm: The SCM to evaluate.
        exogenous: Exogenous values, shape (U,).
        noise: Additive noise, shape (U, H).
        protected_masked: Drop the outgoing edges of the protected node.

    Returns:
        Layer activations, shape (U, H).
    """
    exogenous = np.asarray(exogenous, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if exogenous.shape != (scm.width,):
        raise DimensionError(f"exogenous must have shape ({scm.width},), got {exogenous.shape}")
    if noise.shape != (scm.width, scm.depth):
        raise DimensionError(
            f"noise must have shape ({scm.width}, {scm.depth}), got {noise.shape}"
        )
    return propagate(scm, exogenous[None, :], noise[None, :, :], protected_masked)[0]


def _draw(scm: ScmSpec, n: int,
          rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    exogenous = rng.standard_normal((n, scm.width))
    noise = rng.normal(0.0, scm.noise_std, size=(n, scm.width, scm.depth))
    # A is an exogenous binary variable without its own noise term.
    noise[:, scm.protected_row, 0] = 0.0
    raw = exogenous[:, scm.protected_row].copy()
    return exogenous, raw, noise


def _set_protected(scm: ScmSpec, exogenous: np.ndarray, A: np.ndarray) -> None:
    a0, a1 = scm.protected_values
    exogenous[:, scm.protected_row] = np.where(A == 1, a1, a0)


def _both_classes(values: np.ndarray) -> bool:
    return bool(values.min() != values.max())


def _features(scm: ScmSpec, activations: np.ndarray) -> np.ndarray:
    layers = [layer for layer, _ in scm.feature_locations]
    indices = [index for _, index in scm.feature_locations]
    return activations[:, indices, layers]


def _column_names(m: int) -> Tuple[str, ...]:
    return ("A", *(f"x{j + 1}" for j in range(m)))


def generate_pair(scm: ScmSpec, n: int, seed: int, keep_noise: bool = True) -> PriorSample:
    """
    Generate a biased dataset and its fair targets from one SCM.

    Exogenous values and noise are drawn once per sample and shared by the
    biased pass and the masked (fair) pass. Thresholds are redrawn from the
    empirical quantiles of the current sample until A, y_bias and y_fair all
    contain both classes.

    Args:
        scm: The SCM to sample from.
        n: Number of rows, at least 2.
        seed: Seed of the exogenous and noise draws.
        keep_noise: Retain the draws in the returned sample.

    Returns:
        A `PriorSample` whose `scm` carries the thresholds actually used.

    Raises:
        DegenerateSampleError: If a column stays constant after
            `config.PRIOR_RESAMPLE_ATTEMPTS` threshold draws.
    """
    if n < 2:
        raise ConfigurationError("n must be at least 2")
    rng = rng_for(seed, 0)
    exogenous, raw, noise = _draw(scm, n, rng)
    a_t, y_t = scm.protected_threshold, scm.outcome_threshold
    q_low, q_high = config.PRIOR_THRESHOLD_QUANTILE_RANGE
    out = scm.outcome_location

    for attempt in range(config.PRIOR_RESAMPLE_ATTEMPTS):
        A = (raw > a_t).astype(np.int64)
        _set_protected(scm, exogenous, A)
        biased = propagate(scm, exogenous, noise)
        fair = propagate(scm, exogenous, noise, protected_masked=True)
        y_bias = (biased[:, out, -1] > y_t).astype(np.int64)
        y_fair = (fair[:, out, -1] > y_t).astype(np.int64)
        if _both_classes(A) and _both_classes(y_bias) and _both_classes(y_fair):
            break
        logger.debug("Degenerate columns on attempt %d; resampling thresholds", attempt)
        a_t = float(np.quantile(raw, rng.uniform(q_low, q_high)))
        y_t = float(np.quantile(biased[:, out, -1], rng.uniform(q_low, q_high)))
    else:
        raise DegenerateSampleError(
            f"constant column after {config.PRIOR_RESAMPLE_ATTEMPTS} threshold draws"
        )

    dataset = TabularDataset(
        A=A,
        X=_features(scm, biased),
        y=y_bias,
        column_names=_column_names(scm.num_features),
        protected_index=0,
    )
    final = dataclasses.replace(scm, protected_threshold=a_t, outcome_threshold=y_t)
    record = NoiseRecord(exogenous, raw, noise) if keep_noise else None
    return PriorSample(dataset=dataset, y_fair=y_fair, scm=final, noise_draws=record, seed=seed)


def counterfactual_world(sample: PriorSample) -> CounterfactualWorld:
    """
    Re-propagate a prior sample with every protected value flipped.

    Noise and the other exogenous draws are held fixed, so the result is the
    exact counterfactual twin of `sample.dataset` and of its fair targets.
    """
    if sample.noise_draws is None:
        raise SchemaError("counterfactuals need the sample's noise draws")
    scm = sample.scm
    exogenous = sample.noise_draws.exogenous.copy()
    A_cf = 1 - sample.dataset.A
    _set_protected(scm, exogenous, A_cf)
    noise = sample.noise_draws.noise
    biased = propagate(scm, exogenous, noise)
    fair = propagate(scm, exogenous, noise, protected_masked=True)
    out = scm.outcome_location
    dataset = TabularDataset(
        A=A_cf,
        X=_features(scm, biased),
        y=(biased[:, out, -1] > scm.outcome_threshold).astype(np.int64),
        column_names=sample.dataset.column_names,
        protected_index=0,
    )
    y_fair = (fair[:, out, -1] > scm.outcome_threshold).astype(np.int64)
    return CounterfactualWorld(dataset=dataset, y_fair=y_fair)


def draw_dataset_shape(prior: PriorConfig, seed: int, index: int) -> DatasetShape:
    """
    Draw the architecture and size of the `index`-th dataset of a batch.

    Width and depth are uniform over their ranges, the sample size
    log-uniform and the feature count uniform, capped by the endogenous nodes
    the drawn architecture offers.
    """
    rng = rng_for(seed, index, 0)

    def uniform_int(bounds: Optional[Tuple[int, int]], fixed: int, cap: Optional[int] = None) -> int:
        if bounds is None:
            return fixed if cap is None else min(fixed, cap)
        low, high = int(bounds[0]), int(bounds[1])
        if cap is not None:
            high = min(high, cap)
            low = min(low, high)
        return int(rng.integers(low, high + 1))

    width = uniform_int(prior.width_range, prior.num_exogenous)
    depth = uniform_int(prior.depth_range, prior.depth)
    if prior.sample_size_range is None:
        n = prior.num_samples
    else:
        n = int(round(log_uniform(rng, prior.sample_size_range)))
    m = uniform_int(prior.feature_range, prior.num_features,
                    cap=available_feature_count(width, depth))
    return DatasetShape(width=width, depth=depth, num_features=m, num_samples=max(n, 2))


def sample_prior_batch(prior: PriorConfig, batch_size: int, seed: int,
                       workers: int = 1, keep_noise: bool = True) -> List[PriorSample]:
    """
    Sample a batch of independent prior datasets.

    Element i derives its seeds from (seed, i, attempt); degenerate draws are
    skipped and redrawn up to `config.PRIOR_RETRY_BUDGET` times.

    Args:
        prior: Prior settings.
        batch_size: Number of datasets, at least 1.
        seed: Root seed of the batch.
        workers: Threads generating elements concurrently.
        keep_noise: Retain per-sample draws.

    Returns:
        `batch_size` samples in index order.
    """
    if batch_size < 1:
        raise ConfigurationError("batch_size must be at least 1")
    prior.validate()

    def element(index: int) -> PriorSample:
        shape = draw_dataset_shape(prior, seed, index)
        element_prior = dataclasses.replace(
            prior,
            num_exogenous=shape.width,
            depth=shape.depth,
            num_features=shape.num_features,
            num_samples=shape.num_samples,
        )
        for attempt in range(config.PRIOR_RETRY_BUDGET):
            sub_seed = derive_seed(seed, index, attempt)
            try:
                scm = sample_scm(element_prior, sub_seed)
                return generate_pair(scm, shape.num_samples, derive_seed(sub_seed, 1),
                                     keep_noise=keep_noise)
            except (DegenerateSampleError, NumericError) as exc:
                logger.debug("Prior element %d attempt %d rejected: %s", index, attempt, exc)
        raise DegenerateSampleError(
            f"prior element {index} failed {config.PRIOR_RETRY_BUDGET} attempts"
        )

    if workers <= 1:
        return [element(i) for i in range(batch_size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(element, range(batch_size)))


__all__ = [
    "CounterfactualWorld",
    "DatasetShape",
    "NoiseRecord",
    "PriorConfig",
    "PriorSample",
    "ScmSpec",
    "available_feature_count",
    "counterfactual_world",
    "draw_dataset_shape",
    "forward_pass",
    "generate_pair",
    "propagate",
    "sample_prior_batch",
    "sample_scm",
]

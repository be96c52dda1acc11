"""
In-context transformer over tabular rows.

Every row of a dataset becomes one token. Context rows carry their label,
query rows do not; attention lets each token see the context tokens and
itself, never another query token, so predictions for one query row cannot
depend on the other query rows. There is no positional encoding, which makes
the model invariant to the order of the context rows.

Token of row i (features zero-padded to `max_features`):

    t_i = x_i @ W_feat + b_feat + (a_i * w_prot + b_prot) + c_i * (y_i * w_label + b_label)

with c_i = 1 for context rows and 0 for query rows. The protected column is
routed only through its dedicated encoder (w_prot, b_prot), never through
W_feat.
"""
import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from .. import config
from ..core.random import rng_for
from ..core.tabular import TabularDataset
from ..errors import ConfigurationError, DimensionError, NumericError, SchemaError
from .autodiff import (
    Tensor,
    as_tensor,
    binary_cross_entropy,
    gelu,
    layer_norm,
    masked_softmax,
    sigmoid,
    take_rows,
)

logger = logging.getLogger(__name__)

Params = Mapping[str, Tensor]


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and pre-training hyperparameters."""

    embed_dim: int = config.EMBED_DIM
    num_layers: int = config.NUM_LAYERS
    num_heads: int = config.NUM_HEADS
    ff_dim: int = config.FF_DIM
    max_features: int = config.MAX_FEATURES
    max_rows: int = config.MAX_ROWS
    learning_rate: float = config.LEARNING_RATE
    batch_datasets: int = config.BATCH_DATASETS
    steps: int = config.PRETRAIN_STEPS
    epochs: int = config.PRETRAIN_EPOCHS
    seed: int = 0
    init_scale: float = config.INIT_SCALE
    grad_clip: float = config.GRAD_CLIP_NORM
    split_fraction_range: Tuple[float, float] = config.SPLIT_FRACTION_RANGE

    def validate(self) -> "ModelConfig":
        for name in ("embed_dim", "num_layers", "num_heads", "ff_dim", "max_features",
                     "batch_datasets", "steps", "epochs"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if self.embed_dim % self.num_heads:
            raise ConfigurationError(
                f"embed_dim={self.embed_dim} is not divisible by num_heads={self.num_heads}"
            )
        if self.max_rows < 2:
            raise ConfigurationError("max_rows must be at least 2")
        if self.learning_rate < 0 or self.grad_clip <= 0 or self.init_scale <= 0:
            raise ConfigurationError("learning_rate, grad_clip and init_scale must be positive")
        low, high = self.split_fraction_range
        if not 0.0 < low <= high < 1.0:
            raise ConfigurationError("split_fraction_range must lie inside (0, 1)")
        return self

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.num_heads

    @property
    def total_steps(self) -> int:
        return self.epochs * self.steps

    def to_dict(self) -> Dict[str, Any]:
        payload = dataclasses.asdict(self)
        payload["split_fraction_range"] = list(self.split_fraction_range)
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ModelConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ConfigurationError(f"unknown model config keys: {sorted(unknown)}")
        values = dict(payload)
        if "split_fraction_range" in values:
            values["split_fraction_range"] = tuple(values["split_fraction_range"])
        return cls(**values).validate()


def parameter_shapes(cfg: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    """Names and shapes of every parameter tensor, in a fixed order."""
    D, F = cfg.embed_dim, cfg.ff_dim
    shapes: Dict[str, Tuple[int, ...]] = {
        "embed.feature.weight": (cfg.max_features, D),
        "embed.feature.bias": (D,),
        "embed.protected.weight": (1, D),
        "embed.protected.bias": (D,),
        "embed.label.weight": (1, D),
        "embed.label.bias": (D,),
    }
    for layer in range(cfg.num_layers):
        p = f"layers.{layer}"
        shapes.update({
            f"{p}.attn.query": (D, D),
            f"{p}.attn.key": (D, D),
            f"{p}.attn.value": (D, D),
            f"{p}.attn.out.weight": (D, D),
            f"{p}.attn.out.bias": (D,),
            f"{p}.norm1.gain": (D,),
            f"{p}.norm1.bias": (D,),
            f"{p}.ff.in.weight": (D, F),
            f"{p}.ff.in.bias": (F,),
            f"{p}.ff.out.weight": (F, D),
            f"{p}.ff.out.bias": (D,),
            f"{p}.norm2.gain": (D,),
            f"{p}.norm2.bias": (D,),
        })
    shapes["head.weight"] = (D, 1)
    shapes["head.bias"] = (1,)
    return shapes


def init_params(cfg: ModelConfig, seed: Optional[int] = None) -> Dict[str, np.ndarray]:
    """
    Initialize parameters.

    Matrices are Gaussian with std init_scale / sqrt(fan_in); biases start at
    zero and layer-norm gains at one.
    """
    cfg.validate()
    rng = rng_for(cfg.seed if seed is None else seed, 7)
    params: Dict[str, np.ndarray] = {}
    for name, shape in parameter_shapes(cfg).items():
        if name.endswith(".gain"):
            params[name] = np.ones(shape)
        elif len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            params[name] = rng.standard_normal(shape) * (cfg.init_scale / np.sqrt(shape[0]))
    return params


@dataclass(frozen=True)
class TrainingProvenance:
    steps_completed: int = 0
    final_loss: Optional[float] = None
    initial_loss: Optional[float] = None
    skipped_steps: int = 0
    prior_digest: str = ""
    format_version: int = config.CHECKPOINT_VERSION

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "TrainingProvenance":
        return cls(**payload)


@dataclass(frozen=True)
class OptimizerState:
    """Adam moments per parameter, the update count and skipped steps."""

    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    skipped: int = 0

    @classmethod
    def zeros(cls, params: Mapping[str, np.ndarray]) -> "OptimizerState":
        return cls(step=0,
                   m={k: np.zeros_like(v) for k, v in params.items()},
                   v={k: np.zeros_like(v) for k, v in params.items()})


@dataclass(frozen=True, eq=False)
class ModelCheckpoint:
    """
    Trained parameters with their architecture and provenance.

    Attributes:
        params: Parameter arrays by name.
        config: Architecture and training hyperparameters.
        provenance: Steps completed, losses and the prior digest.
        optimizer: Optimizer state for resuming, if saved.
    """

    params: Dict[str, np.ndarray]
    config: ModelConfig
    provenance: TrainingProvenance = field(default_factory=TrainingProvenance)
    optimizer: Optional[OptimizerState] = None

    def __post_init__(self) -> None:
        expected = parameter_shapes(self.config)
        if set(expected) != set(self.params):
            missing = sorted(set(expected) - set(self.params))
            extra = sorted(set(self.params) - set(expected))
            raise DimensionError(f"parameter set mismatch: missing {missing}, unexpected {extra}")
        for name, shape in expected.items():
            if tuple(self.params[name].shape) != shape:
                raise DimensionError(
                    f"{name} has shape {self.params[name].shape}, expected {shape}"
                )


@dataclass(frozen=True, eq=False)
class ContextBatch:
    """
    Labelled context rows and unlabelled query rows sharing one column schema.

    `column_names` lists the m+1 input columns, the protected one at
    `protected_index`; the X matrices hold the other m columns.
    """

    context_X: np.ndarray
    context_A: np.ndarray
    context_y: np.ndarray
    query_X: np.ndarray
    query_A: np.ndarray
    column_names: Tuple[str, ...]
    protected_index: int = 0

    def __post_init__(self) -> None:
        cX = np.asarray(self.context_X, dtype=np.float64)
        qX = np.asarray(self.query_X, dtype=np.float64)
        if cX.ndim != 2 or qX.ndim != 2 or cX.shape[1] != qX.shape[1]:
            raise SchemaError(f"context {cX.shape} and query {qX.shape} columns differ")
        if len(self.column_names) != cX.shape[1] + 1:
            raise SchemaError("column_names must list the features plus the protected column")
        if not 0 <= self.protected_index < len(self.column_names):
            raise SchemaError("protected_index out of range")
        for name, values, rows in (("context_A", self.context_A, cX.shape[0]),
                                   ("context_y", self.context_y, cX.shape[0]),
                                   ("query_A", self.query_A, qX.shape[0])):
            if np.asarray(values).shape != (rows,):
                raise DimensionError(f"{name} must have {rows} entries")
        if cX.shape[0] < 1:
            raise SchemaError("the context needs at least one labelled row")
        object.__setattr__(self, "context_X", cX)
        object.__setattr__(self, "query_X", qX)
        object.__setattr__(self, "context_A", np.asarray(self.context_A, dtype=np.float64))
        object.__setattr__(self, "context_y", np.asarray(self.context_y, dtype=np.float64))
        object.__setattr__(self, "query_A", np.asarray(self.query_A, dtype=np.float64))
        object.__setattr__(self, "column_names", tuple(self.column_names))

    @property
    def n_context(self) -> int:
        return int(self.context_X.shape[0])

    @property
    def n_query(self) -> int:
        return int(self.query_X.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.context_X.shape[1])

    @classmethod
    def from_datasets(cls, context: TabularDataset, query: TabularDataset) -> "ContextBatch":
        if context.y is None:
            raise SchemaError("context rows need labels")
        if tuple(context.column_names) != tuple(query.column_names):
            raise SchemaError(
                f"query columns {query.column_names} do not match context {context.column_names}"
            )
        if context.protected_index != query.protected_index:
            raise SchemaError("context and query flag different protected columns")
        return cls(context.X, context.A, context.y, query.X, query.A,
                   context.column_names, context.protected_index)

    def standardized(self) -> "ContextBatch":
        """Standardize features column-wise with context mean and population std."""
        mean = self.context_X.mean(axis=0)
        std = self.context_X.std(axis=0)
        std = np.where(std > 1e-12, std, 1.0)
        clip = config.STANDARDIZE_CLIP

        def scale(X: np.ndarray) -> np.ndarray:
            return np.clip((X - mean) / std, -clip, clip)
        return dataclasses.replace(self, context_X=scale(self.context_X),
                                   query_X=scale(self.query_X))

    def query_slice(self, start: int, stop: int) -> "ContextBatch":
        return dataclasses.replace(self, query_X=self.query_X[start:stop],
                                   query_A=self.query_A[start:stop])


def as_tensors(params: Mapping[str, np.ndarray], trainable: bool = False) -> Dict[str, Tensor]:
    """Wrap parameter arrays for a forward pass."""
    return {name: Tensor(value, requires_grad=trainable, op="param")
            for name, value in params.items()}


def _checked(t: Tensor, layer: str) -> Tensor:
    if not np.all(np.isfinite(t.data)):
        raise NumericError("non-finite activation", layer=layer)
    return t


def embed(batch: ContextBatch, params: Params, max_features: int, max_rows: int) -> Tensor:
    """
    Turn every row of the batch into one token, context rows first.

    Returns:
        Tokens of shape (n_context + n_query, embed_dim).
    """
    if batch.n_features > max_features:
        raise DimensionError(
            f"{batch.n_features} features exceed the model's max_features={max_features}"
        )
    rows = batch.n_context + batch.n_query
    if rows > max_rows:
        raise DimensionError(f"{rows} rows exceed the model's max_rows={max_rows}")
    X = np.zeros((rows, max_features))
    X[:batch.n_context, :batch.n_features] = batch.context_X
    X[batch.n_context:, :batch.n_features] = batch.query_X
    A = np.concatenate([batch.context_A, batch.query_A])[:, None]
    is_context = np.zeros((rows, 1))
    is_context[:batch.n_context] = 1.0
    y = np.zeros((rows, 1))
    y[:batch.n_context, 0] = batch.context_y

    tokens = as_tensor(X) @ params["embed.feature.weight"] + params["embed.feature.bias"]
    tokens = tokens + (as_tensor(A) @ params["embed.protected.weight"]
                       + params["embed.protected.bias"])
    label = as_tensor(y) @ params["embed.label.weight"] + params["embed.label.bias"]
    return _checked(tokens + label * is_context, "embed")


def attention_mask(n_context: int, n_query: int) -> np.ndarray:
    """allowed[i, j]: token i may attend to token j (a context row, or itself)."""
    rows = n_context + n_query
    allowed = np.zeros((rows, rows), dtype=bool)
    allowed[:, :n_context] = True
    np.fill_diagonal(allowed, True)
    return allowed


def _attention(x: Tensor, params: Params, prefix: str, heads: int,
               allowed: np.ndarray) -> Tensor:
    rows, dim = x.shape
    head_dim = dim // heads

    def split(t: Tensor) -> Tensor:
        return t.reshape(rows, heads, head_dim).transpose(1, 0, 2)

    q = split(x @ params[f"{prefix}.query"])
    k = split(x @ params[f"{prefix}.key"])
    v = split(x @ params[f"{prefix}.value"])
    scores = (q @ k.transpose(0, 2, 1)) * (1.0 / np.sqrt(head_dim))
    mixed = masked_softmax(scores, allowed[None, :, :]) @ v
    merged = mixed.transpose(1, 0, 2).reshape(rows, dim)
    return merged @ params[f"{prefix}.out.weight"] + params[f"{prefix}.out.bias"]


def encode(batch: ContextBatch, params: Params, cfg: ModelConfig) -> Tensor:
    """Run the embedding and every post-norm transformer layer."""
    h = embed(batch, params, cfg.max_features, cfg.max_rows)
    allowed = attention_mask(batch.n_context, batch.n_query)
    for layer in range(cfg.num_layers):
        p = f"layers.{layer}"
        a = _attention(h, params, f"{p}.attn", cfg.num_heads, allowed)
        h = layer_norm(h + a) * params[f"{p}.norm1.gain"] + params[f"{p}.norm1.bias"]
        f = gelu(h @ params[f"{p}.ff.in.weight"] + params[f"{p}.ff.in.bias"])
        f = f @ params[f"{p}.ff.out.weight"] + params[f"{p}.ff.out.bias"]
        h = layer_norm(h + f) * params[f"{p}.norm2.gain"] + params[f"{p}.norm2.bias"]
        h = _checked(h, p)
    return h


def forward(batch: ContextBatch, params: Params, cfg: ModelConfig) -> Tensor:
    """
    Probabilities of the query rows.

    Returns:
        A tensor of shape (n_query,) with values in (0, 1).
    """
    h = encode(batch, params, cfg)
    queries = take_rows(h, np.arange(batch.n_context, batch.n_context + batch.n_query))
    logits = queries @ params["head.weight"] + params["head.bias"]
    logits = _checked(logits, "head")
    return sigmoid(logits.reshape(batch.n_query))


def loss(pred: Tensor, targets: np.ndarray) -> Tensor:
    """Mean binary cross-entropy of query predictions against the fair targets."""
    return binary_cross_entropy(pred, targets)


def predict_batch(batch: ContextBatch, params: Mapping[str, np.ndarray],
                  cfg: ModelConfig, standardize: bool = True) -> np.ndarray:
    """
    Predict every query row of a batch without recording gradients.

    Queries are processed in chunks so that context plus chunk never exceeds
    `max_rows`; chunking does not change the result because query rows never
    see each other.
    """
    if batch.n_context >= cfg.max_rows:
        raise DimensionError(
            f"context of {batch.n_context} rows leaves no room for queries "
            f"(max_rows={cfg.max_rows})"
        )
    if standardize:
        batch = batch.standardized()
    tensors = as_tensors(params)
    chunk = cfg.max_rows - batch.n_context
    logger.debug("Predicting %d query rows against %d context rows in chunks of %d",
                 batch.n_query, batch.n_context, chunk)
    out: List[np.ndarray] = []
    for start in range(0, batch.n_query, chunk):
        part = batch.query_slice(start, min(start + chunk, batch.n_query))
        out.append(forward(part, tensors, cfg).data)
    return np.concatenate(out) if out else np.zeros(0)


def predict(checkpoint: ModelCheckpoint, context: TabularDataset,
            query: Union[TabularDataset, np.ndarray],
            protected_index: Optional[int] = None) -> np.ndarray:
    """
    Predict fair probabilities for query rows in one forward pass.

    Args:
        checkpoint: Trained model; never modified.
        context: Labelled rows the model conditions on.
        query: Query rows, as a dataset with the context's columns or as an
            (n, m+1) matrix holding the protected column at `protected_index`.
        protected_index: Protected column of a matrix query; defaults to the
            context's.

    Returns:
        Probabilities, one per query row.
    """
    if isinstance(query, np.ndarray):
        index = context.protected_index if protected_index is None else protected_index
        if index != context.protected_index:
            raise SchemaError(
                f"query flags column {index} as protected, context flags "
                f"{context.protected_index}"
            )
        query = TabularDataset.from_matrix(query, None, context.column_names, index,
                                           context.target_name)
    batch = ContextBatch.from_datasets(context, query)
    return predict_batch(batch, checkpoint.params, checkpoint.config)


__all__ = [
    "ContextBatch",
    "ModelCheckpoint",
    "ModelConfig",
    "OptimizerState",
    "TrainingProvenance",
    "attention_mask",
    "embed",
    "encode",
    "forward",
    "init_params",
    "loss",
    "parameter_shapes",
    "predict",
    "predict_batch",
]

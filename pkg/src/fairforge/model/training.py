"""
Pre-training on the synthetic prior.

Every step draws fresh prior datasets, splits each into labelled context rows
(biased labels revealed) and query rows, and fits the query predictions to the
fair targets. The data of step t depends only on (model seed, t), so a run
resumed from a checkpoint continues with exactly the batches it would have
seen without the interruption.
"""
import dataclasses
import logging
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Deque, Dict, List, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from .. import config
from ..core.random import derive_seed, rng_for
from ..errors import ConfigurationError, NumericError
from ..io.checkpoint import save_checkpoint
from ..prior.scm import PriorConfig, PriorSample, sample_prior_batch
from .autodiff import Tensor, total
from .transformer import (
    ContextBatch,
    ModelCheckpoint,
    ModelConfig,
    OptimizerState,
    TrainingProvenance,
    as_tensors,
    forward,
    init_params,
    loss,
    parameter_shapes,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TrainingExample:
    """A standardized context/query split and the fair targets of its queries."""

    batch: ContextBatch
    targets: np.ndarray


class StepResult(NamedTuple):
    params: Dict[str, np.ndarray]
    state: OptimizerState
    loss: float


def make_example(sample: PriorSample, cfg: ModelConfig, seed: int) -> TrainingExample:
    """
    Split a prior sample into context and query rows.

    At most `max_rows` rows are used; the context share is drawn uniformly
    from `split_fraction_range` and always leaves one row on each side.
    """
    data = sample.dataset
    rng = rng_for(seed, 2)
    order = rng.permutation(data.n_rows)[:cfg.max_rows]
    rows = len(order)
    low, high = cfg.split_fraction_range
    n_context = int(np.clip(round(rng.uniform(low, high) * rows), 1, rows - 1))
    context, query = order[:n_context], order[n_context:]
    batch = ContextBatch(
        context_X=data.X[context], context_A=data.A[context], context_y=data.y[context],
        query_X=data.X[query], query_A=data.A[query],
        column_names=data.column_names, protected_index=data.protected_index,
    )
    return TrainingExample(batch=batch.standardized(), targets=sample.y_fair[query])


def batch_loss(params: Mapping[str, Tensor], examples: Sequence[TrainingExample],
               cfg: ModelConfig) -> Tensor:
    """Mean over datasets of the query BCE against the fair targets."""
    losses = [loss(forward(ex.batch, params, cfg), ex.targets) for ex in examples]
    return total(losses) * (1.0 / len(losses))


def adam_update(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray],
                state: OptimizerState, learning_rate: float,
                clip_norm: float = config.GRAD_CLIP_NORM,
                beta1: float = config.ADAM_BETA1, beta2: float = config.ADAM_BETA2,
                eps: float = config.ADAM_EPS) -> StepResult:
    """One Adam update with gradients clipped to a global norm."""
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    scale = clip_norm / norm if norm > clip_norm else 1.0
    step = state.step + 1
    m: Dict[str, np.ndarray] = {}
    v: Dict[str, np.ndarray] = {}
    updated: Dict[str, np.ndarray] = {}
    for name, value in params.items():
        g = grads[name] * scale
        m[name] = beta1 * state.m[name] + (1.0 - beta1) * g
        v[name] = beta2 * state.v[name] + (1.0 - beta2) * g * g
        if learning_rate == 0.0:
            updated[name] = value.copy()
            continue
        m_hat = m[name] / (1.0 - beta1 ** step)
        v_hat = v[name] / (1.0 - beta2 ** step)
        updated[name] = value - learning_rate * m_hat / (np.sqrt(v_hat) + eps)
    return StepResult(updated, OptimizerState(step=step, m=m, v=v, skipped=state.skipped),
                      float("nan"))


def train_step(params: Mapping[str, np.ndarray], state: OptimizerState,
               examples: Sequence[TrainingExample], cfg: ModelConfig) -> StepResult:
    """
    Compute the loss of a batch, backpropagate and apply one Adam update.

    A step whose forward pass or gradient is non-finite leaves the parameters
    untouched and increments `state.skipped`.
    """
    tensors = as_tensors(params, trainable=True)
    skipped = dataclasses.replace(state, skipped=state.skipped + 1)
    try:
        objective = batch_loss(tensors, examples, cfg)
    except NumericError as exc:
        logger.warning("Step %d skipped: %s", state.step + 1, exc)
        return StepResult(dict(params), skipped, float("nan"))
    objective.backward()
    value = float(objective.data)
    grads = {name: np.zeros_like(t.data) if t.grad is None else t.grad
             for name, t in tensors.items()}
    if not np.isfinite(value) or not all(np.all(np.isfinite(g)) for g in grads.values()):
        logger.warning("Step %d skipped: non-finite gradient", state.step + 1)
        return StepResult(dict(params), skipped, value)
    result = adam_update(params, grads, state, cfg.learning_rate, cfg.grad_clip)
    return result._replace(loss=value)


def training_prior(prior: PriorConfig, cfg: ModelConfig) -> PriorConfig:
    """Check that the prior's datasets fit the model."""
    prior.validate()
    widest = prior.num_features if prior.feature_range is None else int(prior.feature_range[1])
    if widest > cfg.max_features:
        raise ConfigurationError(
            f"prior yields up to {widest} features, model max_features={cfg.max_features}"
        )
    return prior


def examples_for_step(prior: PriorConfig, cfg: ModelConfig, step: int) -> List[TrainingExample]:
    """The training examples of step `step` (0-based)."""
    samples = sample_prior_batch(prior, cfg.batch_datasets, derive_seed(cfg.seed, 1, step),
                                 keep_noise=False)
    return [make_example(sample, cfg, derive_seed(cfg.seed, 2, step, i))
            for i, sample in enumerate(samples)]


def write_loss_log(rows: Sequence[Sequence[float]], path: Union[str, Path],
                   append: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(list(rows), columns=["step", "loss"])
    frame["step"] = frame["step"].astype(int)
    write_header = not (append and path.exists())
    frame.to_csv(path, index=False, mode="a" if append else "w", header=write_header,
                 float_format=config.CSV_FLOAT_FORMAT)
    return path


def pretrain(model_config: ModelConfig, prior_config: PriorConfig,
             out_dir: Optional[Union[str, Path]] = None,
             resume: Optional[ModelCheckpoint] = None,
             stop_after: Optional[int] = None,
             workers: int = 1,
             checkpoint_every: int = config.CHECKPOINT_EVERY,
             progress: bool = True,
             on_step: Optional[Callable[[int, float], None]] = None) -> ModelCheckpoint:
    """
    Pre-train the transformer for epochs * steps updates.

    Args:
        model_config: Architecture and optimizer settings.
        prior_config: The prior the training datasets are drawn from.
        out_dir: Where periodic checkpoints, the final `model.ckpt` and
            `loss_log.csv` are written; nothing is written when None.
        resume: Checkpoint to continue from; its optimizer state is reused.
        stop_after: Stop after this many completed steps (for staged runs).
        workers: Threads producing prior batches ahead of the optimizer.
        checkpoint_every: Save a numbered checkpoint every this many steps.
        progress: Show a progress bar.
        on_step: Called with (step, loss) after every step.

    Returns:
        The checkpoint after the last completed step.
    """
    cfg = model_config.validate()
    prior = training_prior(prior_config, cfg)
    if resume is not None:
        shapes = {k: tuple(v.shape) for k, v in resume.params.items()}
        if shapes != parameter_shapes(cfg):
            raise ConfigurationError("resume checkpoint does not match the model architecture")
        params = {k: v.copy() for k, v in resume.params.items()}
        state = resume.optimizer or OptimizerState.zeros(params)
        start = resume.provenance.steps_completed
        initial_loss = resume.provenance.initial_loss
        final_loss = resume.provenance.final_loss
    else:
        params = init_params(cfg)
        state = OptimizerState.zeros(params)
        start, initial_loss, final_loss = 0, None, None

    end = cfg.total_steps if stop_after is None else min(cfg.total_steps, stop_after)
    out_path = None if out_dir is None else Path(out_dir)
    log: List[List[float]] = []
    logger.info("Pre-training steps %d..%d (%d datasets per step)", start + 1, end,
                cfg.batch_datasets)

    def snapshot(done: int) -> ModelCheckpoint:
        provenance = TrainingProvenance(
            steps_completed=done, final_loss=final_loss, initial_loss=initial_loss,
            skipped_steps=state.skipped, prior_digest=prior.digest(),
        )
        return ModelCheckpoint(params=params, config=cfg, provenance=provenance, optimizer=state)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool, \
            tqdm(total=end, initial=start, desc="pretrain", disable=not progress) as bar:
        pending: Deque[Future] = deque()
        queued = start
        for step in range(start, end):
            while queued < end and len(pending) < config.PREFETCH_BATCHES:
                pending.append(pool.submit(examples_for_step, prior, cfg, queued))
                queued += 1
            examples = pending.popleft().result()
            params, state, value = train_step(params, state, examples, cfg)
            if initial_loss is None:
                initial_loss = value
            final_loss = value
            log.append([step + 1, value])
            if on_step is not None:
                on_step(step + 1, value)
            bar.update(1)
            bar.set_postfix(loss=f"{value:.4f}")
            if out_path is not None and checkpoint_every and (step + 1) % checkpoint_every == 0:
                save_checkpoint(snapshot(step + 1), out_path / f"step_{step + 1:07d}.ckpt")

    checkpoint = snapshot(max(end, start))
    if out_path is not None:
        save_checkpoint(checkpoint, out_path / "model.ckpt")
        write_loss_log(log, out_path / "loss_log.csv", append=resume is not None)
    if state.skipped:
        logger.warning("%d steps were skipped on non-finite values", state.skipped)
    logger.info("Pre-training finished at step %d, loss %.4f", checkpoint.provenance.steps_completed,
                final_loss if final_loss is not None else float("nan"))
    return checkpoint


def evaluate_prior_loss(params: Mapping[str, np.ndarray], cfg: ModelConfig,
                        prior_config: PriorConfig, count: int, seed: int) -> float:
    """Mean query BCE against fair targets on `count` held-out prior datasets."""
    prior = training_prior(prior_config, cfg)
    samples = sample_prior_batch(prior, count, derive_seed(seed, 3), keep_noise=False)
    tensors = as_tensors(params)
    values = [
        float(loss(forward(ex.batch, tensors, cfg), ex.targets).data)
        for ex in (make_example(s, cfg, derive_seed(seed, 4, i)) for i, s in enumerate(samples))
    ]
    return float(np.mean(values))

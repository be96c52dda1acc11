from .transformer import (
    ContextBatch,
    ModelCheckpoint,
    ModelConfig,
    OptimizerState,
    TrainingProvenance,
    embed,
    forward,
    init_params,
    loss,
    predict,
    predict_batch,
)

__all__ = [
    "ContextBatch",
    "ModelCheckpoint",
    "ModelConfig",
    "OptimizerState",
    "TrainingProvenance",
    "embed",
    "forward",
    "init_params",
    "loss",
    "predict",
    "predict_batch",
]

"""
Configuration module for fairforge.

Defines the defaults used throughout the package: synthetic prior ranges,
case-study grids, transformer architecture, optimizer settings, evaluation
protocol and artifact formats. Structured configs (`PriorConfig`,
`ModelConfig`, ...) take their defaults from here.
"""

from typing import Tuple

# Synthetic prior
PRIOR_NUM_EXOGENOUS: int = 8
PRIOR_DEPTH: int = 4
PRIOR_NUM_FEATURES: int = 6
PRIOR_NUM_SAMPLES: int = 512
PRIOR_SPARSITY_LOG_RANGE: Tuple[float, float] = (0.1, 1.0)
PRIOR_NOISE_STD_RANGE: Tuple[float, float] = (0.01, 1.0)
PRIOR_NONLINEARITIES: Tuple[str, ...] = ("identity", "relu", "tanh")
PRIOR_THRESHOLD_QUANTILE_RANGE: Tuple[float, float] = (0.2, 0.8)
PRIOR_PILOT_SAMPLES: int = 256
PRIOR_RESAMPLE_ATTEMPTS: int = 64
PRIOR_RETRY_BUDGET: int = 16
ACTIVATION_CLIP: float = 1e6

# Prior batch variation (architecture, features and sample size per dataset)
PRIOR_SAMPLE_SIZE_RANGE: Tuple[int, int] = (100, 1024)
PRIOR_FEATURE_RANGE: Tuple[int, int] = (1, 16)
PRIOR_WIDTH_RANGE: Tuple[int, int] = (4, 16)
PRIOR_DEPTH_RANGE: Tuple[int, int] = (2, 5)

# Causal case studies
CASE_N_RANGE: Tuple[int, int] = (100, 10000)
CASE_SIGMA_RANGE: Tuple[float, float] = (0.01, 1.0)
CASE_WEIGHT_RANGE: Tuple[float, float] = (0.25, 4.0)
CASE_PROTECTED_RATE: float = 0.5
CASE_RESAMPLE_ATTEMPTS: int = 64
QUINTILE_COUNT: int = 5

# Transformer architecture (desk scale)
EMBED_DIM: int = 64
NUM_LAYERS: int = 4
NUM_HEADS: int = 4
FF_DIM: int = 128
MAX_FEATURES: int = 16
MAX_ROWS: int = 1024
INIT_SCALE: float = 1.0

# Optimizer and pre-training
LEARNING_RATE: float = 3e-4
ADAM_BETA1: float = 0.9
ADAM_BETA2: float = 0.99
ADAM_EPS: float = 1e-8
GRAD_CLIP_NORM: float = 1.0
BATCH_DATASETS: int = 8
PRETRAIN_EPOCHS: int = 50
PRETRAIN_STEPS: int = 125
SPLIT_FRACTION_RANGE: Tuple[float, float] = (0.5, 0.8)
CHECKPOINT_EVERY: int = 500
PREFETCH_BATCHES: int = 4
BCE_CLAMP: float = 1e-7
STANDARDIZE_CLIP: float = 100.0

# Evaluation protocol
EVAL_TRAIN_FRACTION: float = 0.5
EVAL_MAX_CONTEXT: int = 512
DSP_THRESHOLD: float = 0.5
OUTLIER_STDS: float = 3.0
AE_HISTOGRAM_BINS: int = 20
KFOLD_SPLITS: int = 5
SMOKE_PER_GROUP: int = 10
FULL_PER_GROUP: int = 100
COMPLEXITY_WIDTHS: Tuple[int, ...] = (4, 6, 8, 12, 16)

# Desk-scale acceptance run
ACCEPTANCE_PER_GROUP: int = 10
ACCEPTANCE_N_RANGE: Tuple[int, int] = (1000, 10000)
ACCEPTANCE_REVERSION_BUNDLES: int = 20
ACCEPT_ATE_RATIO: float = 0.5
ACCEPT_MEDIAN_ATE: float = 0.15
ACCEPT_AUC_MARGIN: float = 0.1
ACCEPT_DIFFERENCE: float = 0.05
ACCEPT_QUINTILE_RATIO: float = 1.5
ACCEPT_REVERSION_GAP: float = 0.05

# Artifact formats
CHECKPOINT_MAGIC: bytes = b"FFCKPT"
CHECKPOINT_VERSION: int = 1
CSV_FLOAT_FORMAT: str = "%.17g"
REPORT_DIRNAME: str = "plot_data"

# Environment overrides
ENV_SEED: str = "FORGE_SEED"
ENV_THREADS: str = "FORGE_THREADS"
ENV_LOG_LEVEL: str = "FORGE_LOG_LEVEL"
ENV_ACCEPTANCE_CKPT: str = "FORGE_ACCEPTANCE_CKPT"
DEFAULT_SEED: int = 0
DEFAULT_THREADS: int = 1
DEFAULT_LOG_LEVEL: str = "INFO"

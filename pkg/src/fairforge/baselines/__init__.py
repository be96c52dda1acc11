from .methods import (
    DEFAULT_METHODS,
    METHODS,
    BaselineSpec,
    EvaluationTask,
    InContextPredictor,
    applicable,
    avg_cntf,
    cfp,
    cfp_columns,
    constant,
    drop_protected,
    fairpfn,
    parse_methods,
    random_guess,
    run_method,
    split_bundle,
    split_dataset,
    split_prior_sample,
    split_rows,
    unaware,
    unfair,
)

__all__ = [
    "DEFAULT_METHODS",
    "METHODS",
    "BaselineSpec",
    "EvaluationTask",
    "InContextPredictor",
    "applicable",
    "avg_cntf",
    "cfp",
    "cfp_columns",
    "constant",
    "drop_protected",
    "fairpfn",
    "parse_methods",
    "random_guess",
    "run_method",
    "split_bundle",
    "split_dataset",
    "split_prior_sample",
    "split_rows",
    "unaware",
    "unfair",
]

"""
Baselines and the shared evaluation task.

Every method receives the same `EvaluationTask` (labelled training rows used
as in-context data, test rows, and when available the test rows'
counterfactual twins and ground-truth fair columns) and returns a
`PredictionSet` over the identical test rows, so all methods flow through one
scoring pipeline.

The base predictor of the baselines is the pre-trained transformer with a
random binary noise column in its protected slot, which turns it into an
ordinary in-context classifier.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .. import config
from ..core.random import rng_for
from ..core.tabular import PredictionSet, TabularDataset
from ..errors import ConfigurationError, SchemaError
from ..model.transformer import ModelCheckpoint, predict
from ..prior.case_studies import FAIR_LEVELS, CaseBundle
from ..prior.scm import PriorSample, counterfactual_world

logger = logging.getLogger(__name__)

ProtectedMode = str
PROTECTED_MODES: Tuple[ProtectedMode, ...] = ("attribute", "feature", "drop")


@dataclass(frozen=True, eq=False)
class EvaluationTask:
    """
    One train/test split every method is evaluated on.

    Attributes:
        dataset_id: Identifier of the bundle, dataset or fold.
        group: Benchmark group or real-world dataset name.
        train: Labelled rows the in-context predictors condition on.
        test: Rows to predict, labels kept for scoring.
        test_cf: Counterfactual twins of the test rows, if known.
        fair_train: Ground-truth fair columns of the training rows, if known.
        fair_test: Ground-truth fair columns of the test rows, if known.
        y_fair_test: Fair targets of the test rows, if known.
        test_rows: Positions of the test rows in the source dataset.
        seed: Seed of every stochastic choice a method makes on this task.
        extras: Provenance copied onto the reports.
    """

    dataset_id: str
    group: str
    train: TabularDataset
    test: TabularDataset
    test_cf: Optional[TabularDataset] = None
    fair_train: Optional[Dict[str, np.ndarray]] = None
    fair_test: Optional[Dict[str, np.ndarray]] = None
    y_fair_test: Optional[np.ndarray] = None
    test_rows: Optional[np.ndarray] = None
    seed: int = 0
    extras: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.train.y is None:
            raise SchemaError(f"{self.dataset_id}: training rows need labels")
        if self.test_cf is not None:
            if self.test_cf.n_rows != self.test.n_rows:
                raise SchemaError(f"{self.dataset_id}: counterfactual rows are misaligned")
            if not np.array_equal(self.test_cf.A, 1 - self.test.A):
                raise SchemaError(f"{self.dataset_id}: counterfactual A is not the flipped A")

    @property
    def has_counterfactual(self) -> bool:
        return self.test_cf is not None


def split_rows(n_rows: int, seed: int, train_fraction: float = config.EVAL_TRAIN_FRACTION,
               max_context: int = config.EVAL_MAX_CONTEXT) -> Tuple[np.ndarray, np.ndarray]:
    """Random train/test partition; the training part is capped at `max_context` rows."""
    if n_rows < 2:
        raise ConfigurationError("need at least two rows to split")
    order = rng_for(seed, 0).permutation(n_rows)
    n_train = int(np.clip(round(train_fraction * n_rows), 1, n_rows - 1))
    train = np.sort(order[:min(n_train, max_context)])
    test = np.sort(order[n_train:])
    return train, test


def _fair_subset(columns: Optional[Mapping[str, np.ndarray]],
                 rows: np.ndarray) -> Optional[Dict[str, np.ndarray]]:
    if not columns:
        return None
    return {name: np.asarray(values)[rows] for name, values in columns.items()}


def split_bundle(bundle: CaseBundle, seed: int,
                 train_fraction: float = config.EVAL_TRAIN_FRACTION,
                 max_context: int = config.EVAL_MAX_CONTEXT) -> EvaluationTask:
    """Build the evaluation task of a case-study bundle."""
    train, test = split_rows(bundle.observational.n_rows, seed, train_fraction, max_context)
    extras = {
        "base_ate": bundle.base_ate,
        "sigma": bundle.config.sigma,
        "n": bundle.config.n,
        "w_A": bundle.config.w_A,
        "violates_prior": bundle.violates_prior,
    }
    return EvaluationTask(
        dataset_id=bundle.bundle_id or bundle.group.value,
        group=bundle.group.value,
        train=bundle.observational.take(train),
        test=bundle.observational.take(test),
        test_cf=bundle.counterfactual.take(test),
        fair_train=_fair_subset(bundle.fair_variables, train),
        fair_test=_fair_subset(bundle.fair_variables, test),
        y_fair_test=bundle.y_fair[test],
        test_rows=test,
        seed=seed,
        extras=extras,
    )


def split_dataset(dataset_id: str, group: str, data: TabularDataset,
                  train_rows: np.ndarray, test_rows: np.ndarray, seed: int,
                  counterfactual: Optional[TabularDataset] = None,
                  fair_columns: Optional[Mapping[str, np.ndarray]] = None,
                  max_context: int = config.EVAL_MAX_CONTEXT,
                  extras: Optional[Dict[str, Any]] = None) -> EvaluationTask:
    """Build the evaluation task of a real-world fold."""
    train_rows = np.asarray(train_rows)
    if train_rows.size > max_context:
        keep = rng_for(seed, 1).choice(train_rows.size, size=max_context, replace=False)
        train_rows = np.sort(train_rows[keep])
    return EvaluationTask(
        dataset_id=dataset_id,
        group=group,
        train=data.take(train_rows),
        test=data.take(test_rows),
        test_cf=None if counterfactual is None else counterfactual.take(test_rows),
        fair_train=_fair_subset(fair_columns, train_rows),
        fair_test=_fair_subset(fair_columns, test_rows),
        test_rows=np.asarray(test_rows),
        seed=seed,
        extras=dict(extras or {}),
    )


def split_prior_sample(sample: PriorSample, seed: int, dataset_id: str = "",
                       train_fraction: float = config.EVAL_TRAIN_FRACTION,
                       max_context: int = config.EVAL_MAX_CONTEXT) -> EvaluationTask:
    """Build the evaluation task of a prior sample; it needs the sample's noise draws."""
    world = counterfactual_world(sample)
    train, test = split_rows(sample.dataset.n_rows, seed, train_fraction, max_context)
    return EvaluationTask(
        dataset_id=dataset_id or f"prior-{sample.seed}",
        group="Prior",
        train=sample.dataset.take(train),
        test=sample.dataset.take(test),
        test_cf=world.dataset.take(test),
        y_fair_test=sample.y_fair[test],
        test_rows=test,
        seed=seed,
        extras={"width": sample.scm.width, "depth": sample.scm.depth,
                "noise_std": sample.scm.noise_std},
    )


class InContextPredictor:
    """
    The pre-trained transformer used as a predictor.

    Modes of the protected slot:
        attribute: the real protected column (the fair model itself);
        feature: a noise column, with A appended as an ordinary feature;
        drop: a noise column, with A removed from the inputs.

    The noise columns depend only on the seed, so observational and
    counterfactual queries of one task see the same noise.
    """

    def __init__(self, checkpoint: ModelCheckpoint):
        self.checkpoint = checkpoint

    def _noise(self, n: int, seed: int, stream: int) -> np.ndarray:
        return rng_for(seed, 11, stream).integers(0, 2, size=n)

    def _recode(self, data: TabularDataset, mode: ProtectedMode, seed: int,
                stream: int) -> TabularDataset:
        if mode == "attribute":
            return data
        noise = self._noise(data.n_rows, seed, stream)
        if mode == "feature":
            X = np.column_stack([data.X, data.A.astype(np.float64)])
            names = ("noise", *data.feature_names, data.protected_name)
        elif mode == "drop":
            X = data.X
            names = ("noise", *data.feature_names)
        else:
            raise ConfigurationError(f"unknown protected mode {mode!r}")
        return TabularDataset(A=noise, X=X, y=data.y, column_names=names,
                              protected_index=0, target_name=data.target_name)

    def predict(self, context: TabularDataset, query: TabularDataset,
                mode: ProtectedMode = "attribute", seed: int = 0) -> np.ndarray:
        """Probabilities for `query` given the labelled `context`."""
        ctx = self._recode(context, mode, seed, stream=0)
        qry = self._recode(query, mode, seed, stream=1)
        return predict(self.checkpoint, ctx, qry)


def _require_cf(task: EvaluationTask, method: str) -> TabularDataset:
    if task.test_cf is None:
        raise SchemaError(f"{method} needs counterfactual test rows ({task.dataset_id})")
    return task.test_cf


def _result(task: EvaluationTask, probs: np.ndarray,
            probs_cf: Optional[np.ndarray]) -> PredictionSet:
    return PredictionSet(probs=np.clip(probs, 0.0, 1.0), A=task.test.A, labels=task.test.y,
                         probs_cf=None if probs_cf is None else np.clip(probs_cf, 0.0, 1.0),
                         row_ids=task.test_rows)


def _both_worlds(task: EvaluationTask,
                 run: Callable[[TabularDataset], np.ndarray]) -> PredictionSet:
    probs = run(task.test)
    probs_cf = None if task.test_cf is None else run(task.test_cf)
    return _result(task, probs, probs_cf)


def fairpfn(task: EvaluationTask, predictor: InContextPredictor) -> PredictionSet:
    """The pre-trained model with the real protected attribute in its protected slot."""
    return _both_worlds(task, lambda rows: predictor.predict(task.train, rows, "attribute",
                                                             task.seed))


def unfair(task: EvaluationTask, predictor: InContextPredictor) -> PredictionSet:
    """Base predictor on (X, A), A being an ordinary feature."""
    return _both_worlds(task, lambda rows: predictor.predict(task.train, rows, "feature",
                                                             task.seed))


def unaware(task: EvaluationTask, predictor: InContextPredictor) -> PredictionSet:
    """Average of the base predictor on (X, A) and on (X, 1 - A); X is left untouched."""
    def run(rows: TabularDataset) -> np.ndarray:
        as_is = predictor.predict(task.train, rows, "feature", task.seed)
        flipped = predictor.predict(task.train, rows.with_protected(1 - rows.A), "feature",
                                    task.seed)
        return 0.5 * (as_is + flipped)
    return _both_worlds(task, run)


def avg_cntf(task: EvaluationTask, predictor: InContextPredictor) -> PredictionSet:
    """
    Average of the base predictor on the test rows and on their counterfactual twins.

    The same average is reported in both worlds, so its ATE and AE are exactly 0.
    """
    twins = _require_cf(task, "avgcntf")
    observed = predictor.predict(task.train, task.test, "feature", task.seed)
    counterfactual = predictor.predict(task.train, twins, "feature", task.seed)
    probs = 0.5 * (observed + counterfactual)
    return _result(task, probs, probs)


def constant(task: EvaluationTask, predictor: Optional[InContextPredictor] = None) -> PredictionSet:
    """Always the majority class of the training labels (class 1 on a tie)."""
    y = task.train.y
    majority = 1.0 if 2 * int(y.sum()) >= y.size else 0.0
    probs = np.full(task.test.n_rows, majority)
    return _result(task, probs, probs.copy() if task.has_counterfactual else None)


def random_guess(task: EvaluationTask,
                 predictor: Optional[InContextPredictor] = None) -> PredictionSet:
    """Independent uniform probabilities in each world."""
    rng = rng_for(task.seed, 13)
    probs = rng.random(task.test.n_rows)
    probs_cf = rng.random(task.test.n_rows) if task.has_counterfactual else None
    return _result(task, probs, probs_cf)


def _fair_dataset(columns: Mapping[str, np.ndarray], names: Sequence[str],
                  A: np.ndarray, y: Optional[np.ndarray]) -> TabularDataset:
    X = np.column_stack([np.asarray(columns[name], dtype=np.float64) for name in names])
    return TabularDataset(A=A, X=X, y=y, column_names=("A", *names), protected_index=0)


def cfp_columns(task: EvaluationTask, level: Optional[int] = None) -> List[str]:
    """
    Fair columns CFP uses at `level`; None combines every available level.

    Raises:
        SchemaError: When the task exposes none of the requested columns.
    """
    available = list(task.fair_train or {})
    if level is None:
        known = [name for lvl in sorted(FAIR_LEVELS) for name in FAIR_LEVELS[lvl]]
        names = [n for n in known if n in available]
        names += [n for n in available if n not in names]
    elif level in FAIR_LEVELS:
        names = [n for n in FAIR_LEVELS[level] if n in available]
    else:
        raise ConfigurationError(f"unknown CFP level {level}")
    if not names:
        raise SchemaError(f"{task.dataset_id}: no fair columns for CFP level {level}")
    return names


def cfp(task: EvaluationTask, predictor: InContextPredictor,
        level: Optional[int] = None) -> PredictionSet:
    """
    Counterfactually fair prediction: the base predictor on ground-truth fair columns only.

    Fair columns do not change when A is flipped, so the counterfactual
    prediction equals the observational one.
    """
    names = cfp_columns(task, level)
    train = _fair_dataset(task.fair_train, names, task.train.A, task.train.y)
    test = _fair_dataset(task.fair_test, names, task.test.A, None)
    probs = predictor.predict(train, test, "drop", task.seed)
    return _result(task, probs, probs.copy() if task.has_counterfactual else None)


def drop_protected(task: EvaluationTask, predictor: InContextPredictor) -> PredictionSet:
    """Base predictor on X alone, the protected column removed."""
    return _both_worlds(task, lambda rows: predictor.predict(task.train, rows, "drop",
                                                             task.seed))


@dataclass(frozen=True)
class BaselineSpec:
    """
    A registered method.

    Attributes:
        kind: Method name used on the command line and in reports.
        run: Callable (task, predictor) -> PredictionSet.
        causal_information: Uses ground-truth causal quantities.
        needs_model: Requires a checkpoint.
        needs_counterfactual: Requires counterfactual test rows.
        needs_fair_columns: Requires ground-truth fair columns.
    """

    kind: str
    run: Callable[..., PredictionSet]
    causal_information: bool = False
    needs_model: bool = True
    needs_counterfactual: bool = False
    needs_fair_columns: bool = False


def _cfp_level(level: Optional[int]) -> Callable[..., PredictionSet]:
    return lambda task, predictor: cfp(task, predictor, level)


METHODS: Dict[str, BaselineSpec] = {
    "fairpfn": BaselineSpec("fairpfn", fairpfn),
    "unfair": BaselineSpec("unfair", unfair),
    "unaware": BaselineSpec("unaware", unaware),
    "avgcntf": BaselineSpec("avgcntf", avg_cntf, causal_information=True,
                            needs_counterfactual=True),
    "constant": BaselineSpec("constant", constant, needs_model=False),
    "random": BaselineSpec("random", random_guess, needs_model=False),
    "cfp": BaselineSpec("cfp", _cfp_level(None), causal_information=True,
                        needs_fair_columns=True),
    "cfp1": BaselineSpec("cfp1", _cfp_level(1), causal_information=True,
                         needs_fair_columns=True),
    "cfp2": BaselineSpec("cfp2", _cfp_level(2), causal_information=True,
                         needs_fair_columns=True),
    "cfp3": BaselineSpec("cfp3", _cfp_level(3), causal_information=True,
                         needs_fair_columns=True),
    "drop_protected": BaselineSpec("drop_protected", drop_protected),
}

DEFAULT_METHODS: Tuple[str, ...] = ("fairpfn", "unfair", "unaware", "avgcntf", "constant",
                                    "random", "cfp")


def parse_methods(spec: Sequence[str]) -> List[str]:
    """Validate method names (comma-separated strings are split)."""
    names: List[str] = []
    for item in spec:
        names += [part.strip().lower() for part in str(item).split(",") if part.strip()]
    unknown = [name for name in names if name not in METHODS]
    if unknown:
        raise ConfigurationError(f"unknown methods: {unknown}; known: {sorted(METHODS)}")
    return list(dict.fromkeys(names))


def applicable(spec: BaselineSpec, task: EvaluationTask) -> bool:
    """Whether the task carries the inputs a method needs."""
    if spec.needs_counterfactual and not task.has_counterfactual:
        return False
    if spec.needs_fair_columns and not task.fair_train:
        return False
    return True


def run_method(name: str, task: EvaluationTask,
               predictor: Optional[InContextPredictor]) -> PredictionSet:
    """Run a registered method on a task."""
    spec = METHODS[name]
    if spec.needs_model and predictor is None:
        raise ConfigurationError(f"method {name!r} needs a checkpoint")
    if spec.needs_counterfactual:
        _require_cf(task, name)
    logger.debug("Running %s on %s", name, task.dataset_id)
    return spec.run(task, predictor)

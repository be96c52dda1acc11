"""
src/fairforge/app.py
Experiment orchestration.

The `Experiment` class coordinates the components of a benchmark run: it
generates or loads case-study suites, turns every dataset into an
`EvaluationTask`, runs the requested methods through one scoring pipeline and
assembles the trade-off, ablation, stress and real-world tables the command
line writes to disk.
"""
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import config
from .algorithms.causal_effects import prediction_differences, summarize_differences
from .algorithms.evaluation import MetricsReport, score_predictions
from .algorithms.pareto import pareto_front, pareto_share
from .algorithms.scoring import auc, correlation_table, rank_methods, spearman
from .baselines.methods import (
    DEFAULT_METHODS,
    METHODS,
    EvaluationTask,
    InContextPredictor,
    applicable,
    parse_methods,
    run_method,
    split_bundle,
    split_dataset,
    split_prior_sample,
)
from .core.random import derive_seed
from .core.tabular import PredictionSet
from .errors import ConfigurationError, MetricError, SchemaError
from .io.checkpoint import load_checkpoint
from .io.folds import kfold
from .io.manifest import DatasetManifest, LoadedDataset, load_manifest
from .io.reports import import_predictions
from .model.transformer import ModelCheckpoint
from .prior.case_studies import (
    BENCHMARK_GROUPS,
    STRESS_GROUPS,
    CaseBundle,
    CaseGroup,
    generate_suite,
    quintile_split,
)
from .prior.scm import PriorConfig, available_feature_count, sample_prior_batch

logger = logging.getLogger(__name__)

ABLATION_AXES: Tuple[str, ...] = ("base_ate", "sigma", "n", "complexity")
FAIRNESS_AXES: Tuple[str, ...] = ("ate", "dsp")
REFERENCE_METHOD = "avgcntf"
COMPLEXITY_DEPTH = 3


@dataclass(frozen=True)
class ExperimentPlan:
    """
    Everything a benchmark run needs besides the data.

    Attributes:
        groups: Case-study groups of the synthetic suite.
        per_group: Bundles per group.
        seed: Root seed; every bundle, split and method seed derives from it.
        methods: Method names, see `baselines.METHODS`.
        checkpoint: Trained model, required by the in-context methods.
        axes: Ablation axes to sweep.
        out_dir: Directory reports are written to.
        workers: Threads evaluating datasets concurrently.
        imported: External predictions as (method name, CSV file or directory).
        n_range: Sample sizes of generated bundles.
        sigma_range: Noise levels of generated bundles.
        weight_range: |w_A| of generated bundles.
        train_fraction: Share of each bundle used as in-context training rows.
        max_context: Cap on in-context training rows.
    """

    groups: Tuple[str, ...] = tuple(g.value for g in BENCHMARK_GROUPS)
    per_group: int = config.SMOKE_PER_GROUP
    seed: int = config.DEFAULT_SEED
    methods: Tuple[str, ...] = DEFAULT_METHODS
    checkpoint: Optional[Path] = None
    axes: Tuple[str, ...] = ("base_ate",)
    out_dir: Path = Path("results")
    workers: int = config.DEFAULT_THREADS
    imported: Tuple[Tuple[str, Path], ...] = ()
    n_range: Tuple[float, float] = config.CASE_N_RANGE
    sigma_range: Tuple[float, float] = config.CASE_SIGMA_RANGE
    weight_range: Tuple[float, float] = config.CASE_WEIGHT_RANGE
    train_fraction: float = config.EVAL_TRAIN_FRACTION
    max_context: int = config.EVAL_MAX_CONTEXT

    def validate(self) -> "ExperimentPlan":
        """Check names, counts and referenced paths; raise `ConfigurationError`."""
        parse_methods(self.methods)
        for group in self.groups:
            CaseGroup.parse(group)
        if self.per_group < 1:
            raise ConfigurationError("per_group must be at least 1")
        unknown = [a for a in self.axes if a not in ABLATION_AXES]
        if unknown:
            raise ConfigurationError(f"unknown ablation axes {unknown}; known: {ABLATION_AXES}")
        if self.checkpoint is not None and not Path(self.checkpoint).exists():
            raise ConfigurationError(f"checkpoint {self.checkpoint} does not exist")
        for name, path in self.imported:
            if name in METHODS:
                raise ConfigurationError(f"imported method {name!r} shadows a built-in method")
            if not Path(path).exists():
                raise ConfigurationError(f"imported predictions {path} do not exist")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigurationError("train_fraction must lie in (0, 1)")
        if self.max_context < 1:
            raise ConfigurationError("max_context must be positive")
        return self

    def to_dict(self) -> Dict[str, Any]:
        payload = dataclasses.asdict(self)
        payload["checkpoint"] = None if self.checkpoint is None else str(self.checkpoint)
        payload["out_dir"] = str(self.out_dir)
        payload["imported"] = {name: str(path) for name, path in self.imported}
        return payload

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "ExperimentPlan":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ConfigurationError(f"unknown plan keys: {sorted(unknown)}")
        values = dict(payload)
        for key in ("groups", "methods", "axes", "n_range", "sigma_range", "weight_range"):
            if key in values:
                values[key] = tuple(values[key])
        if values.get("groups") == ("all",):
            values["groups"] = tuple(g.value for g in BENCHMARK_GROUPS)
        if "methods" in values:
            values["methods"] = tuple(parse_methods(values["methods"]))
        if values.get("checkpoint") is not None:
            values["checkpoint"] = Path(values["checkpoint"])
        if "out_dir" in values:
            values["out_dir"] = Path(values["out_dir"])
        if "imported" in values:
            values["imported"] = tuple((k, Path(v)) for k, v in dict(values["imported"]).items())
        return cls(**values).validate()


class MethodOutcome(NamedTuple):
    """Predictions of one method on one task, and their scores."""
    task: EvaluationTask
    method: str
    predictions: PredictionSet
    report: MetricsReport


class TradeoffResult(NamedTuple):
    outcomes: List[MethodOutcome]
    points: pd.DataFrame
    shares: Dict[str, float]

    @property
    def reports(self) -> List[MetricsReport]:
        return [o.report for o in self.outcomes]


class TableResult(NamedTuple):
    outcomes: List[MethodOutcome]
    table: pd.DataFrame
    summary: Dict[str, Any]

    @property
    def reports(self) -> List[MetricsReport]:
        return [o.report for o in self.outcomes]


class RealWorldResult(NamedTuple):
    fold_outcomes: List[MethodOutcome]
    pooled: List[MetricsReport]
    correlations: Optional[pd.DataFrame]
    loaded: LoadedDataset

    @property
    def reports(self) -> List[MetricsReport]:
        return [o.report for o in self.fold_outcomes] + list(self.pooled)


def _quartiles(values: Sequence[float]) -> Dict[str, float]:
    data = np.asarray([v for v in values if v is not None], dtype=np.float64)
    if data.size == 0:
        return {"median": float("nan"), "q1": float("nan"), "q3": float("nan"),
                "iqr": float("nan")}
    q1, median, q3 = np.percentile(data, [25, 50, 75])
    return {"median": float(median), "q1": float(q1), "q3": float(q3), "iqr": float(q3 - q1)}


def _mean(values: Iterable[Optional[float]]) -> float:
    data = [v for v in values if v is not None]
    return float(np.mean(data)) if data else float("nan")


class Experiment:
    """
    Runs the benchmark suite described by an `ExperimentPlan`.

    Attributes:
        plan: The validated plan.
        checkpoint: The trained model, or None when only model-free methods run.
        predictor: In-context predictor wrapping the checkpoint.
        methods: Built-in methods to run, in plan order.
    """

    def __init__(self, plan: ExperimentPlan, checkpoint: Optional[ModelCheckpoint] = None):
        self.plan = plan
        self.methods = parse_methods(plan.methods)
        if checkpoint is None and plan.checkpoint is not None:
            checkpoint = load_checkpoint(plan.checkpoint)
        needing = [m for m in self.methods if METHODS[m].needs_model]
        if checkpoint is None and needing:
            raise ConfigurationError(f"methods {needing} need a checkpoint")
        self.checkpoint = checkpoint
        self.predictor = None if checkpoint is None else InContextPredictor(checkpoint)
        self.imported: Dict[str, Path] = {name: Path(path) for name, path in plan.imported}

    # Data

    def suite(self, groups: Optional[Sequence[str]] = None,
              per_group: Optional[int] = None) -> List[CaseBundle]:
        """Generate the plan's case-study suite (or the given groups of it)."""
        return generate_suite(
            per_group or self.plan.per_group,
            self.plan.seed,
            groups=groups or self.plan.groups,
            n_range=self.plan.n_range,
            sigma_range=self.plan.sigma_range,
            weight_range=self.plan.weight_range,
            workers=self.plan.workers,
        )

    def task_for(self, bundle: CaseBundle, index: int) -> EvaluationTask:
        return split_bundle(bundle, derive_seed(self.plan.seed, 5, index),
                            self.plan.train_fraction, self.plan.max_context)

    # Evaluation

    def _imported_predictions(self, name: str, task: EvaluationTask) -> PredictionSet:
        path = self.imported[name]
        if path.is_dir():
            path = path / f"{task.dataset_id}.csv"
        rows = task.test_rows if task.test_rows is not None else np.arange(task.test.n_rows)
        return import_predictions(path, task.test.A, task.test.y, rows)

    def evaluate_task(self, task: EvaluationTask, fold: Optional[int] = None,
                      methods: Optional[Sequence[str]] = None) -> List[MethodOutcome]:
        """Run every applicable method on one task and score the predictions."""
        outcomes: List[MethodOutcome] = []
        for name in methods or self.methods:
            spec = METHODS[name]
            if not applicable(spec, task):
                logger.debug("Skipping %s on %s: inputs unavailable", name, task.dataset_id)
                continue
            predictions = run_method(name, task, self.predictor)
            outcomes.append(self._score(task, name, predictions, spec.causal_information, fold))
        for name in self.imported:
            predictions = self._imported_predictions(name, task)
            outcomes.append(self._score(task, name, predictions, False, fold))
        return outcomes

    def _score(self, task: EvaluationTask, name: str, predictions: PredictionSet,
               causal_information: bool, fold: Optional[int]) -> MethodOutcome:
        extras = dict(task.extras)
        y_fair = task.y_fair_test
        if y_fair is not None and y_fair.min() != y_fair.max():
            extras["auc_fair"] = auc(predictions.probs, y_fair)
        report = score_predictions(predictions, task.dataset_id, name, group=task.group,
                                   causal_information=causal_information, fold=fold,
                                   extras=extras)
        return MethodOutcome(task, name, predictions, report)

    def evaluate_tasks(self, tasks: Sequence[EvaluationTask],
                       methods: Optional[Sequence[str]] = None) -> List[MethodOutcome]:
        """Evaluate tasks on the worker pool; results keep task order."""
        def run(task: EvaluationTask) -> List[MethodOutcome]:
            return self.evaluate_task(task, methods=methods)

        if self.plan.workers <= 1:
            nested = [run(task) for task in tasks]
        else:
            with ThreadPoolExecutor(max_workers=self.plan.workers) as pool:
                nested = list(pool.map(run, tasks))
        return [outcome for chunk in nested for outcome in chunk]

    def evaluate_bundles(self, bundles: Sequence[CaseBundle],
                         methods: Optional[Sequence[str]] = None) -> List[MethodOutcome]:
        tasks = [self.task_for(bundle, i) for i, bundle in enumerate(bundles)]
        logger.info("Evaluating %d datasets with %s", len(tasks),
                    ", ".join(list(methods or self.methods) + list(self.imported)))
        return self.evaluate_tasks(tasks, methods)

    # Experiments

    def run_tradeoff(self, bundles: Optional[Sequence[CaseBundle]] = None,
                     fairness: str = "ate") -> TradeoffResult:
        """
        Fairness/accuracy trade-off with per-dataset Pareto membership.

        The fairness cost is |ATE| (`fairness="ate"`) or DSP (`"dsp"`); the
        error is 1 - AUC. On every dataset the front is taken over the methods
        scored there, and a method's share is the fraction of its datasets on
        which it lies on the front.
        """
        if fairness not in FAIRNESS_AXES:
            raise ConfigurationError(f"fairness must be one of {FAIRNESS_AXES}")
        bundles = list(bundles) if bundles is not None else self.suite()
        outcomes = self.evaluate_bundles(bundles)
        points = tradeoff_points(outcomes, fairness)
        shares = pareto_share(points["method"].tolist(), points["pareto"].tolist()) \
            if len(points) else {}
        for method, share in shares.items():
            logger.info("Pareto share of %s: %.1f%%", method, 100.0 * share)
        return TradeoffResult(outcomes, points, shares)

    def run_ablation(self, axis: str, bundles: Optional[Sequence[CaseBundle]] = None,
                     methods: Optional[Sequence[str]] = None,
                     outcomes: Optional[Sequence[MethodOutcome]] = None) -> TableResult:
        """
        Prediction-ATE distributions per quintile of `axis`.

        `base_ate`, `sigma` and `n` bucket the case-study suite by quintiles;
        `complexity` evaluates prior SCMs of increasing width instead.
        Outcomes already computed on `bundles` are reused instead of
        evaluating them again.
        """
        if axis not in ABLATION_AXES:
            raise ConfigurationError(f"unknown ablation axis {axis!r}")
        methods = list(methods or [m for m in ("fairpfn", "unfair") if m in self.methods]
                       or self.methods)
        if axis == "complexity":
            return self._run_complexity(methods)
        bundles = list(bundles) if bundles is not None else self.suite()
        if outcomes is None:
            outcomes = self.evaluate_bundles(bundles, methods)
        else:
            outcomes = [o for o in outcomes if o.method in methods]
        by_dataset = _group_outcomes(outcomes)
        rows = []
        for bucket in quintile_split(bundles, axis):
            ids = [b.bundle_id for b in bucket.members]
            rows += _bucket_rows(axis, bucket.label, bucket.low, bucket.high,
                                 [o for i in ids for o in by_dataset.get(i, [])], methods)
        table = pd.DataFrame(rows)
        return TableResult(outcomes, table, _ablation_summary(axis, table, bundles, by_dataset,
                                                              methods))

    def complexity_widths(self) -> List[int]:
        """SCM widths of the complexity sweep, capped at the model's feature capacity."""
        widths = list(config.COMPLEXITY_WIDTHS)
        if self.checkpoint is not None:
            cap = self.checkpoint.config.max_features
            capped = [w for w in widths if w <= cap]
            if len(capped) < len(widths):
                logger.warning("Complexity sweep capped at width %d (model max_features)", cap)
            widths = capped or [min(widths)]
        return widths

    def _run_complexity(self, methods: Sequence[str]) -> TableResult:
        outcomes: List[MethodOutcome] = []
        rows = []
        for ordinal, width in enumerate(self.complexity_widths()):
            limit = available_feature_count(width, COMPLEXITY_DEPTH)
            if self.checkpoint is not None:
                limit = min(limit, self.checkpoint.config.max_features)
            prior = PriorConfig(num_exogenous=width, depth=COMPLEXITY_DEPTH,
                                num_features=min(config.PRIOR_NUM_FEATURES, limit),
                                seed=derive_seed(self.plan.seed, 8, ordinal))
            samples = sample_prior_batch(prior, self.plan.per_group,
                                         derive_seed(self.plan.seed, 9, ordinal),
                                         workers=self.plan.workers, keep_noise=True)
            tasks = [
                split_prior_sample(sample, derive_seed(self.plan.seed, 10, ordinal, i),
                                   dataset_id=f"U{width}-{i:03d}",
                                   train_fraction=self.plan.train_fraction,
                                   max_context=self.plan.max_context)
                for i, sample in enumerate(samples)
            ]
            chunk = self.evaluate_tasks(tasks, methods)
            outcomes += chunk
            rows += _bucket_rows("complexity", f"U={width}", float(width), float(width),
                                 chunk, methods)
        return TableResult(outcomes, pd.DataFrame(rows), {"axis": "complexity",
                                                          "widths": self.complexity_widths()})

    def run_stress(self, bundles: Optional[Sequence[CaseBundle]] = None) -> TableResult:
        """
        Side-by-side ATE and AUC distributions on the prior-violating groups.

        Only measurements are reported; nothing is asserted about them.
        """
        if bundles is None:
            bundles = self.suite(groups=[g.value for g in STRESS_GROUPS])
        outcomes = self.evaluate_bundles(bundles)
        rows = []
        for group in dict.fromkeys(b.group.value for b in bundles):
            members = [o for o in outcomes if o.task.group == group]
            for method in dict.fromkeys(o.method for o in members):
                reports = [o.report for o in members if o.method == method]
                ate_stats = _quartiles([r.ate for r in reports])
                auc_stats = _quartiles([r.auc for r in reports])
                rows.append({
                    "group": group, "method": method, "n_datasets": len(reports),
                    **{f"ate_{k}": v for k, v in ate_stats.items()},
                    "abs_ate_mean": _mean(r.fairness_cost for r in reports),
                    **{f"auc_{k}": v for k, v in auc_stats.items()},
                    "auc_mean": _mean(r.auc for r in reports),
                })
        summary = {"groups": sorted({b.group.value for b in bundles}),
                   "bundles": len(bundles)}
        return TableResult(outcomes, pd.DataFrame(rows), summary)

    def run_realworld(self, manifest: Any) -> RealWorldResult:
        """
        K-fold evaluation of a real-world dataset.

        Each fold's validation rows are predicted with the other folds as
        in-context data. Pooled reports score the concatenated validation
        predictions of all folds. ATE and AE appear only when the manifest
        supplies counterfactual twins; the Kendall table is emitted when it
        supplies fair noise columns.
        """
        loaded = manifest if isinstance(manifest, LoadedDataset) else load_manifest(manifest)
        info: DatasetManifest = loaded.manifest
        name = info.dataset_name
        data = loaded.dataset
        extras = {"manifest_digest": loaded.digest}
        outcomes: List[MethodOutcome] = []
        for split in kfold(data.n_rows, info.folds, self.plan.seed):
            task = split_dataset(f"{name}-fold{split.fold}", name, data, split.train,
                                 split.validation, derive_seed(self.plan.seed, 6, split.fold),
                                 counterfactual=loaded.counterfactual,
                                 fair_columns=loaded.fair_noise,
                                 max_context=self.plan.max_context, extras=extras)
            outcomes += self.evaluate_task(task, fold=split.fold)

        pooled: List[MetricsReport] = []
        pooled_probs: Dict[str, np.ndarray] = {}
        for method in dict.fromkeys(o.method for o in outcomes):
            merged = pool_predictions([o.predictions for o in outcomes if o.method == method])
            causal = METHODS[method].causal_information if method in METHODS else False
            pooled.append(score_predictions(merged, name, method, group=name,
                                            causal_information=causal, extras=extras))
            pooled_probs[method] = merged.probs

        correlations = None
        if loaded.fair_noise:
            columns: Dict[str, np.ndarray] = {data.protected_name: data.A}
            columns.update({n: data.X[:, j] for j, n in enumerate(data.feature_names)})
            columns.update(loaded.fair_noise)
            targets: Dict[str, np.ndarray] = {data.target_name: data.y}
            targets.update(pooled_probs)
            correlations = pd.DataFrame(correlation_table(columns, targets))
        return RealWorldResult(outcomes, pooled, correlations, loaded)


def pool_predictions(parts: Sequence[PredictionSet]) -> PredictionSet:
    """Concatenate fold predictions, ordered by row id."""
    if not parts:
        raise MetricError("nothing to pool")
    ids = np.concatenate([p.row_ids if p.row_ids is not None else np.arange(p.n_rows)
                          for p in parts])
    order = np.argsort(ids, kind="stable")
    has_labels = all(p.labels is not None for p in parts)
    has_cf = all(p.probs_cf is not None for p in parts)
    return PredictionSet(
        probs=np.concatenate([p.probs for p in parts])[order],
        A=np.concatenate([p.A for p in parts])[order],
        labels=np.concatenate([p.labels for p in parts])[order] if has_labels else None,
        probs_cf=np.concatenate([p.probs_cf for p in parts])[order] if has_cf else None,
        row_ids=ids[order],
    )


def _group_outcomes(outcomes: Sequence[MethodOutcome]) -> Dict[str, List[MethodOutcome]]:
    grouped: Dict[str, List[MethodOutcome]] = {}
    for outcome in outcomes:
        grouped.setdefault(outcome.task.dataset_id, []).append(outcome)
    return grouped


def tradeoff_points(outcomes: Sequence[MethodOutcome], fairness: str = "ate") -> pd.DataFrame:
    """One row per (dataset, method) with its costs and Pareto membership."""
    rows = []
    for dataset_id, members in _group_outcomes(outcomes).items():
        scored = []
        for o in members:
            cost = o.report.fairness_cost if fairness == "ate" else o.report.dsp
            if cost is None or o.report.error is None:
                continue
            scored.append((o, cost, o.report.error))
        flags = pareto_front([[c, e] for _, c, e in scored])
        for (o, cost, error), flag in zip(scored, flags):
            rows.append({"dataset_id": dataset_id, "group": o.report.group,
                         "method": o.method, "fairness": fairness, "fairness_cost": cost,
                         "error": error, "pareto": bool(flag),
                         "causal_information": o.report.causal_information})
    return pd.DataFrame(rows, columns=["dataset_id", "group", "method", "fairness",
                                       "fairness_cost", "error", "pareto",
                                       "causal_information"])


def _bucket_rows(axis: str, label: str, low: float, high: float,
                 outcomes: Sequence[MethodOutcome], methods: Sequence[str]) -> List[Dict[str, Any]]:
    rows = []
    for method in methods:
        reports = [o.report for o in outcomes if o.method == method]
        if not reports:
            continue
        stats = _quartiles([r.ate for r in reports])
        abs_stats = _quartiles([r.fairness_cost for r in reports])
        rows.append({
            "axis": axis, "bucket": label, "low": low, "high": high, "method": method,
            "n_datasets": len(reports),
            **{f"ate_{k}": v for k, v in stats.items()},
            "abs_ate_median": abs_stats["median"],
            "auc_mean": _mean(r.auc for r in reports),
        })
    return rows


def _ablation_summary(axis: str, table: pd.DataFrame, bundles: Sequence[CaseBundle],
                      by_dataset: Mapping[str, List[MethodOutcome]],
                      methods: Sequence[str]) -> Dict[str, Any]:
    summary: Dict[str, Any] = {"axis": axis, "bundles": len(bundles)}
    if not len(table):
        return summary
    labels = list(dict.fromkeys(table["bucket"]))
    for method in methods:
        rows = table[table["method"] == method].set_index("bucket")
        if len(rows) != len(labels):
            continue
        medians = rows.loc[labels, "abs_ate_median"].to_numpy(dtype=np.float64)
        entry: Dict[str, Any] = {"abs_ate_medians": medians.tolist()}
        try:
            entry["trend_spearman"] = spearman(np.arange(len(labels)), medians)
        except MetricError:
            entry["trend_spearman"] = None
        if medians[0] > 0:
            entry["last_to_first_ratio"] = float(medians[-1] / medians[0])
        iqr = rows.loc[labels, "ate_iqr"].to_numpy(dtype=np.float64)
        entry["iqr_first"], entry["iqr_last"] = float(iqr[0]), float(iqr[-1])
        if axis == "n":
            entry["iqr_nonincreasing"] = bool(iqr[-1] <= iqr[0])
            if method == "fairpfn" and not entry["iqr_nonincreasing"]:
                logger.warning("fairpfn ATE spread grows with sample size (IQR %.3f -> %.3f)",
                               iqr[0], iqr[-1])
        summary[method] = entry
    return summary


def difference_table(outcomes: Sequence[MethodOutcome],
                     reference: str = REFERENCE_METHOD) -> pd.DataFrame:
    """
    Signed difference of every method's predictions to a reference method's.

    Rows are grouped by benchmark group (or real-world dataset), with an
    "Average" row per method pooling every group.
    """
    refs = {o.task.dataset_id + f"/{o.report.fold}": o.predictions
            for o in outcomes if o.method == reference}
    if not refs:
        raise SchemaError(f"no {reference} predictions to compare against")
    diffs: Dict[Tuple[str, str], List[np.ndarray]] = {}
    for o in outcomes:
        key = o.task.dataset_id + f"/{o.report.fold}"
        if o.method == reference or key not in refs:
            continue
        values = prediction_differences(o.predictions, refs[key])
        diffs.setdefault((o.task.group, o.method), []).append(values)
        diffs.setdefault(("Average", o.method), []).append(values)
    rows = []
    for (group, method), parts in diffs.items():
        summary = summarize_differences(np.concatenate(parts))
        rows.append({"group": group, "method": method, "mean": summary.mean,
                     "std": summary.std, "outlier_pct": summary.outlier_pct,
                     "n_rows": summary.n_rows, "cell": str(summary)})
    frame = pd.DataFrame(rows, columns=["group", "method", "mean", "std", "outlier_pct",
                                        "n_rows", "cell"])
    order = {g: i for i, g in enumerate(dict.fromkeys(o.task.group for o in outcomes))}
    order["Average"] = len(order)
    frame["_order"] = frame["group"].map(order)
    return frame.sort_values(["_order", "method"], kind="stable").drop(columns="_order") \
        .reset_index(drop=True)


def rank_table(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    """
    Average rank of each method on |ATE|, 1 - AUC and DSP.

    Each metric is ranked over the datasets on which every method has a value.
    """
    methods = list(dict.fromkeys(r.method for r in reports))
    result: Dict[str, Dict[str, float]] = {m: {} for m in methods}
    metrics = {"abs_ate": lambda r: r.fairness_cost, "error": lambda r: r.error,
               "dsp": lambda r: r.dsp}
    for metric, getter in metrics.items():
        cells: Dict[str, Dict[str, float]] = {}
        for r in reports:
            value = getter(r)
            if value is not None:
                cells.setdefault(f"{r.dataset_id}/{r.fold}", {})[r.method] = value
        complete = [d for d, row in cells.items() if all(m in row for m in methods)]
        if not complete:
            continue
        ranks = rank_methods({m: [cells[d][m] for d in complete] for m in methods})
        for m, rank in ranks.items():
            result[m][f"rank_{metric}"] = rank
    return pd.DataFrame([{"method": m, **values} for m, values in result.items()])


def pareto_summary(result: TradeoffResult) -> Dict[str, Any]:
    return {"pareto_share": result.shares,
            "datasets": int(result.points["dataset_id"].nunique()) if len(result.points) else 0}


__all__ = [
    "ABLATION_AXES",
    "Experiment",
    "ExperimentPlan",
    "MethodOutcome",
    "RealWorldResult",
    "TableResult",
    "TradeoffResult",
    "difference_table",
    "pareto_summary",
    "pool_predictions",
    "rank_table",
    "tradeoff_points",
]

"""
Desk-scale acceptance checks for a trained checkpoint.

A checkpoint passes when, on a held-out case-study suite with large samples:

- its median |ATE| is well below the Unfair baseline's and small in absolute
  terms, its AUC clearly beats random guessing and its predictions stay close
  to the AvgCntf reference;
- Unfair's |ATE| grows with the base-ATE quintile while the model's stays flat,
  and the model's ATE spread does not grow with sample size;
- with a pure-noise protected column it scores about the same AUC as Unfair.

Each check records the measured value, its threshold and the verdict.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np
import pandas as pd

from . import config
from .algorithms.evaluation import MetricsReport
from .app import (
    Experiment,
    ExperimentPlan,
    MethodOutcome,
    TableResult,
    TradeoffResult,
    difference_table,
)
from .model.transformer import ModelCheckpoint

logger = logging.getLogger(__name__)

MODEL_METHOD = "fairpfn"
ACCEPTANCE_METHODS = (MODEL_METHOD, "unfair", "avgcntf", "random")
REVERSION_METHODS = ("unfair", "drop_protected")


class Check(NamedTuple):
    """One acceptance criterion; `value` is None when it could not be measured."""
    name: str
    value: Optional[float]
    threshold: float
    passed: bool


class AcceptanceResult(NamedTuple):
    checks: List[Check]
    tradeoff: TradeoffResult
    ablations: Dict[str, TableResult]
    reversion: List[MethodOutcome]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def table(self) -> pd.DataFrame:
        return pd.DataFrame([c._asdict() for c in self.checks],
                            columns=["name", "value", "threshold", "passed"])

    @property
    def reversion_table(self) -> pd.DataFrame:
        return pd.DataFrame([{"dataset_id": o.report.dataset_id, "group": o.report.group,
                              "method": o.method, "auc": o.report.auc}
                             for o in self.reversion],
                            columns=["dataset_id", "group", "method", "auc"])


def _at_most(name: str, value: Optional[float], threshold: float) -> Check:
    return Check(name, value, threshold, value is not None and value <= threshold)


def _at_least(name: str, value: Optional[float], threshold: float) -> Check:
    return Check(name, value, threshold, value is not None and value >= threshold)


def _values(reports: Sequence[MetricsReport], method: str, field: str) -> List[float]:
    return [getattr(r, field) for r in reports
            if r.method == method and getattr(r, field) is not None]


def _median(values: Sequence[float]) -> Optional[float]:
    return float(np.median(values)) if values else None


def _mean(values: Sequence[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def comparison_checks(reports: Sequence[MetricsReport], differences: pd.DataFrame,
                      model: str = MODEL_METHOD) -> List[Check]:
    """
    Fairness and accuracy of the model against Unfair, Random and AvgCntf.

    Args:
        reports: Per-dataset reports of the model and the baselines.
        differences: `difference_table` output against AvgCntf.
        model: Method name of the trained model.
    """
    model_ate = _median(_values(reports, model, "fairness_cost"))
    unfair_ate = _median(_values(reports, "unfair", "fairness_cost"))
    ratio = None
    if model_ate is not None and unfair_ate:
        ratio = model_ate / unfair_ate
    ratio_check = Check("ate_ratio_to_unfair", ratio, config.ACCEPT_ATE_RATIO,
                        ratio is not None and ratio < config.ACCEPT_ATE_RATIO)

    model_auc = _mean(_values(reports, model, "auc"))
    random_auc = _mean(_values(reports, "random", "auc"))
    margin = None if model_auc is None or random_auc is None else model_auc - random_auc

    row = differences[(differences["group"] == "Average") & (differences["method"] == model)]
    difference = abs(float(row["mean"].iloc[0])) if len(row) else None
    return [
        ratio_check,
        _at_most("median_abs_ate", model_ate, config.ACCEPT_MEDIAN_ATE),
        _at_least("auc_margin_over_random", margin, config.ACCEPT_AUC_MARGIN),
        _at_most("abs_difference_to_avgcntf", difference, config.ACCEPT_DIFFERENCE),
    ]


def ablation_checks(base_ate: Mapping[str, Any], sample_size: Mapping[str, Any],
                    model: str = MODEL_METHOD) -> List[Check]:
    """
    Directionality of the base-ATE and sample-size ablations.

    Args:
        base_ate: Summary of the `base_ate` ablation.
        sample_size: Summary of the `n` ablation.
        model: Method name of the trained model.
    """
    trend = base_ate.get("unfair", {}).get("trend_spearman")
    trend_check = Check("unfair_ate_trend", trend, 0.0, trend is not None and trend > 0.0)
    ratio = base_ate.get(model, {}).get("last_to_first_ratio")
    spread = sample_size.get(model, {})
    growth = None
    if "iqr_first" in spread and "iqr_last" in spread:
        growth = spread["iqr_last"] - spread["iqr_first"]
    return [
        trend_check,
        _at_most("quintile_ratio", ratio, config.ACCEPT_QUINTILE_RATIO),
        _at_most("iqr_growth_with_n", growth, 0.0),
    ]


def reversion_check(reports: Sequence[MetricsReport]) -> Check:
    """Mean AUC gap between the noise-protected model and Unfair on the same bundles."""
    noise_auc = _mean(_values(reports, "drop_protected", "auc"))
    unfair_auc = _mean(_values(reports, "unfair", "auc"))
    gap = None if noise_auc is None or unfair_auc is None else abs(noise_auc - unfair_auc)
    return _at_most("noise_protected_auc_gap", gap, config.ACCEPT_REVERSION_GAP)


def acceptance_plan(checkpoint: Union[str, Path], seed: int = config.DEFAULT_SEED,
                    per_group: int = config.ACCEPTANCE_PER_GROUP,
                    workers: int = config.DEFAULT_THREADS) -> ExperimentPlan:
    """The held-out suite of the acceptance run: large samples, every benchmark group."""
    return ExperimentPlan(per_group=per_group, seed=seed, methods=ACCEPTANCE_METHODS,
                          checkpoint=Path(checkpoint), n_range=config.ACCEPTANCE_N_RANGE,
                          workers=workers).validate()


def run_acceptance(plan: ExperimentPlan, checkpoint: Optional[ModelCheckpoint] = None,
                   reversion_bundles: int = config.ACCEPTANCE_REVERSION_BUNDLES
                   ) -> AcceptanceResult:
    """
    Run every acceptance check on the plan's suite.

    The ablations reuse the trade-off predictions. The reversion check runs
    on `reversion_bundles` bundles spread evenly over the suite.
    """
    experiment = Experiment(plan, checkpoint)
    bundles = experiment.suite()
    tradeoff = experiment.run_tradeoff(bundles)
    checks = comparison_checks(tradeoff.reports, difference_table(tradeoff.outcomes))

    ablations = {
        axis: experiment.run_ablation(axis, bundles, methods=(MODEL_METHOD, "unfair"),
                                      outcomes=tradeoff.outcomes)
        for axis in ("base_ate", "n")
    }
    checks += ablation_checks(ablations["base_ate"].summary, ablations["n"].summary)

    count = min(reversion_bundles, len(bundles))
    picks = np.linspace(0, len(bundles) - 1, count).round().astype(int)
    subset = [bundles[i] for i in dict.fromkeys(picks.tolist())]
    reversion = experiment.evaluate_bundles(subset, REVERSION_METHODS)
    checks.append(reversion_check([o.report for o in reversion]))

    for check in checks:
        logger.info("Acceptance %s: %s (value %s, threshold %s)", check.name,
                    "pass" if check.passed else "FAIL", check.value, check.threshold)
    return AcceptanceResult(checks, tradeoff, ablations, reversion)


__all__ = [
    "AcceptanceResult",
    "Check",
    "ablation_checks",
    "acceptance_plan",
    "comparison_checks",
    "reversion_check",
    "run_acceptance",
]

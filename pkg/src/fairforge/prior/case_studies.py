"""
Hand-crafted causal case studies.

Six benchmark families with known structural equations, plus two stress
families that break the prior's assumptions (an endogenous protected
attribute, and a second protected attribute). Every bundle carries its exact
counterfactual twin, the fair target, the ground-truth fair variables and the
base average treatment effect.

Notation of the exported columns: A is the protected attribute, X_b a biased
observable, X_f (or X_p) a fair observable, U a fair unobservable and eps_*
additive noise terms. Outcomes are discretized as Y = 1(Y* >= Ybar) with Ybar
the observational mean.
"""
import logging
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .. import config
from ..core.random import check_range, derive_seed, log_uniform, rng_for
from ..core.tabular import TabularDataset
from ..errors import ConfigurationError, DegenerateSampleError, SchemaError


logger = logging.getLogger(__name__)


class CaseGroup(str, Enum):
    """Benchmark families; the last two violate the prior's assumptions."""

    BIASED = "Biased"
    DIRECT_EFFECT = "DirectEffect"
    INDIRECT_EFFECT = "IndirectEffect"
    FAIR_OBSERVABLE = "FairObservable"
    FAIR_UNOBSERVABLE = "FairUnobservable"
    FAIR_ADDITIVE_NOISE = "FairAdditiveNoise"
    ENDOGENOUS_A = "EndogenousA"
    MULTIPLE_A = "MultipleA"

    @property
    def is_stress(self) -> bool:
        return self in STRESS_GROUPS

    @classmethod
    def parse(cls, tag: Union[str, "CaseGroup"]) -> "CaseGroup":
        """Resolve a group tag, accepting case-insensitive names and aliases."""
        if isinstance(tag, CaseGroup):
            return tag
        key = str(tag).replace("_", "").replace("-", "").replace(" ", "").lower()
        for group in cls:
            if group.value.lower() == key or group.name.replace("_", "").lower() == key:
                return group
        if key in _ALIASES:
            return _ALIASES[key]
        raise ConfigurationError(f"unknown case-study group: {tag!r}")


_ALIASES: Dict[str, CaseGroup] = {
    "leveltwo": CaseGroup.FAIR_UNOBSERVABLE,
    "levelthree": CaseGroup.FAIR_ADDITIVE_NOISE,
}

BENCHMARK_GROUPS: Tuple[CaseGroup, ...] = (
    CaseGroup.BIASED,
    CaseGroup.DIRECT_EFFECT,
    CaseGroup.INDIRECT_EFFECT,
    CaseGroup.FAIR_OBSERVABLE,
    CaseGroup.FAIR_UNOBSERVABLE,
    CaseGroup.FAIR_ADDITIVE_NOISE,
)
STRESS_GROUPS: Tuple[CaseGroup, ...] = (CaseGroup.ENDOGENOUS_A, CaseGroup.MULTIPLE_A)

# Fair columns available to counterfactually fair prediction, by level:
# 1) fair observables, 2) fair unobservables, 3) additive noise terms.
FAIR_LEVELS: Dict[int, Tuple[str, ...]] = {
    1: ("X_f", "X_p"),
    2: ("U",),
    3: ("eps_X", "eps_Z"),
}


_EXPORTED_FAIR: Dict[CaseGroup, Tuple[str, ...]] = {
    CaseGroup.BIASED: ("eps_X",),
    CaseGroup.DIRECT_EFFECT: ("X_f", "eps_X"),
    CaseGroup.INDIRECT_EFFECT: ("eps_X",),
    CaseGroup.FAIR_OBSERVABLE: ("X_f", "eps_X", "eps_Z"),
    CaseGroup.FAIR_UNOBSERVABLE: ("U", "eps_X"),
    CaseGroup.FAIR_ADDITIVE_NOISE: ("eps_X",),
    CaseGroup.ENDOGENOUS_A: ("X_p", "eps_X"),
    CaseGroup.MULTIPLE_A: ("eps_X",),
}


@dataclass(frozen=True)
class CaseStudyConfig:
    """
    Parameters of one case-study dataset.

    Attributes:
        group: Benchmark family.
        w_A: Base causal weight of the protected attribute.
        sigma: Standard deviation of the additive noise terms.
        n: Number of rows.
        seed: Seed of every draw in the dataset.
    """

    group: CaseGroup
    w_A: float
    sigma: float
    n: int
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "group", CaseGroup.parse(self.group))

    def validate(self) -> "CaseStudyConfig":
        low, high = config.CASE_N_RANGE
        if not low <= self.n <= high:
            raise ConfigurationError(f"n must lie in [{low}, {high}], got {self.n}")
        if not 0.0 < self.sigma <= 1.0:
            raise ConfigurationError(f"sigma must lie in (0, 1], got {self.sigma}")
        if not np.isfinite(self.w_A):
            raise ConfigurationError("w_A must be finite")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {"group": self.group.value, "w_A": self.w_A, "sigma": self.sigma,
                "n": self.n, "seed": self.seed}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "CaseStudyConfig":
        return cls(group=payload["group"], w_A=float(payload["w_A"]),
                   sigma=float(payload["sigma"]), n=int(payload["n"]),
                   seed=int(payload.get("seed", 0)))


@dataclass(frozen=True, eq=False)
class CaseBundle:
    """
    Paired observational and counterfactual datasets from one case study.

    Attributes:
        observational: The observed rows with their outcome.
        counterfactual: The same units with A flipped and noise held fixed.
        y_fair: Outcome with the protected pathway removed (identical in both worlds).
        fair_variables: Ground-truth fair columns, hidden from the models.
        base_ate: Exact average effect of A on the observed outcome.
        config: Parameters the bundle was generated from.
        bundle_id: Stable identifier inside a suite.
    """

    observational: TabularDataset
    counterfactual: TabularDataset
    y_fair: np.ndarray
    fair_variables: Dict[str, np.ndarray]
    base_ate: float
    config: CaseStudyConfig
    bundle_id: str = ""

    @property
    def group(self) -> CaseGroup:
        return self.config.group

    @property
    def violates_prior(self) -> bool:
        return self.config.group.is_stress

    @property
    def extra_protected(self) -> Tuple[str, ...]:
        return ("A2",) if self.config.group is CaseGroup.MULTIPLE_A else ()

    def fair_columns(self, level: Optional[int] = None) -> "OrderedDict[str, np.ndarray]":
        """
        Return the fair columns available at a CFP level.

        With `level=None` all exported fair columns of the bundle are returned,
        the combination of the three levels.
        """
        if level is None:
            names = [name for lvl in sorted(FAIR_LEVELS) for name in FAIR_LEVELS[lvl]]
        elif level in FAIR_LEVELS:
            names = list(FAIR_LEVELS[level])
        else:
            raise ConfigurationError(f"unknown CFP level: {level}")
        selected = OrderedDict(
            (name, self.fair_variables[name]) for name in names if name in self.fair_variables
        )
        if not selected:
            raise SchemaError(
                f"bundle {self.bundle_id or self.group.value} exposes no fair columns "
                f"for level {level}"
            )
        return selected


Equations = Callable[[np.ndarray, float, Dict[str, np.ndarray]],
                     Tuple["OrderedDict[str, np.ndarray]", np.ndarray]]


def _biased(A, w, e):
    X_b = np.exp(w * A + e["eps_X"])
    return OrderedDict(X_b=X_b), w * A + X_b + e["eps_Y"]


def _direct_effect(A, w, e):
    X_f = np.exp(e["eps_X"])
    return OrderedDict(X_f=X_f), w * A + X_f + e["eps_Y"]


def _indirect_effect(A, w, e):
    X_b = np.exp(w * A + e["eps_X"])
    return OrderedDict(X_b=X_b), X_b + e["eps_Y"]


def _fair_observable(A, w, e):
    X_f = np.exp(e["eps_X"])
    X_b = np.exp(w * A + e["eps_Z"])
    return OrderedDict(X_f=X_f, X_b=X_b), X_f + X_b + e["eps_Y"]


def _fair_unobservable(A, w, e):
    X_b = np.exp(w * A + e["U"] + e["eps_X"])
    return OrderedDict(X_b=X_b), e["U"] + e["eps_Y"]


def _fair_additive_noise(A, w, e):
    X_b = np.exp(w * A) + e["eps_X"]
    return OrderedDict(X_b=X_b), e["eps_X"] + e["eps_Y"]


def _endogenous_a(A, w, e):
    X_p = np.exp(e["eps_P"])
    X_b = np.exp(w * A + e["eps_X"])
    return OrderedDict(X_p=X_p, X_b=X_b), w * A + X_b + X_p + e["eps_Y"]


def _multiple_a(A, w, e):
    # The second protected attribute keeps its weight in the fair world.
    A2, w2 = e["A2"], e["w_A2"]
    X_b = np.exp(w * A + w2 * A2 + e["eps_X"])
    return OrderedDict(A2=A2, X_b=X_b), w * A + w2 * A2 + X_b + e["eps_Y"]


STRUCTURAL_EQUATIONS: Dict[CaseGroup, Equations] = {
    CaseGroup.BIASED: _biased,
    CaseGroup.DIRECT_EFFECT: _direct_effect,
    CaseGroup.INDIRECT_EFFECT: _indirect_effect,
    CaseGroup.FAIR_OBSERVABLE: _fair_observable,
    CaseGroup.FAIR_UNOBSERVABLE: _fair_unobservable,
    CaseGroup.FAIR_ADDITIVE_NOISE: _fair_additive_noise,
    CaseGroup.ENDOGENOUS_A: _endogenous_a,
    CaseGroup.MULTIPLE_A: _multiple_a,
}


def _draw_exogenous(case: CaseStudyConfig,
                    rng: np.random.Generator) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    n, sigma = case.n, case.sigma
    draws = {
        "eps_X": rng.normal(0.0, sigma, n),
        "eps_Z": rng.normal(0.0, sigma, n),
        "eps_Y": rng.normal(0.0, sigma, n),
        "eps_P": rng.normal(0.0, sigma, n),
        "U": rng.standard_normal(n),
        "A2": (rng.random(n) < config.CASE_PROTECTED_RATE).astype(np.float64),
        "w_A2": np.full(n, case.w_A),
    }
    for _ in range(config.CASE_RESAMPLE_ATTEMPTS):
        if case.group is CaseGroup.ENDOGENOUS_A:
            # A has the observed parent X_p = exp(eps_P).
            A = (draws["eps_P"] / sigma + rng.standard_normal(n) > 0).astype(np.int64)
        else:
            A = (rng.random(n) < config.CASE_PROTECTED_RATE).astype(np.int64)
        if A.min() != A.max():
            return A, draws
    raise DegenerateSampleError("protected attribute stayed single-class")


def generate_case(case: CaseStudyConfig, bundle_id: str = "") -> CaseBundle:
    """
    Generate one case-study bundle.

    The observational world uses the drawn A, the counterfactual world the
    flipped A with every noise term held fixed, and the fair world the same
    equations with w_A set to 0. All three share the threshold computed on
    the observational outcome.

    Args:
        case: Group and parameters of the dataset.
        bundle_id: Identifier stored on the bundle.

    Returns:
        The generated `CaseBundle`.

    Raises:
        ConfigurationError: On invalid parameters.
        DegenerateSampleError: If an outcome stays constant after resampling
            the threshold `config.CASE_RESAMPLE_ATTEMPTS` times.
    """
    case.validate()
    equations = STRUCTURAL_EQUATIONS[case.group]
    rng = rng_for(case.seed, 0)
    A, draws = _draw_exogenous(case, rng)
    A_cf = 1 - A

    observed, y_star = equations(A.astype(np.float64), case.w_A, draws)
    observed_cf, y_star_cf = equations(A_cf.astype(np.float64), case.w_A, draws)
    _, y_star_fair = equations(A.astype(np.float64), 0.0, draws)

    threshold = float(np.mean(y_star))
    q_low, q_high = config.PRIOR_THRESHOLD_QUANTILE_RANGE
    for attempt in range(config.CASE_RESAMPLE_ATTEMPTS):
        y = (y_star >= threshold).astype(np.int64)
        y_fair = (y_star_fair >= threshold).astype(np.int64)
        if y.min() != y.max() and y_fair.min() != y_fair.max():
            break
        logger.debug("Constant outcome on attempt %d; resampling threshold", attempt)
        threshold = float(np.quantile(y_star, rng.uniform(q_low, q_high)))
    else:
        raise DegenerateSampleError(
            f"{case.group.value}: outcome constant after "
            f"{config.CASE_RESAMPLE_ATTEMPTS} thresholds"
        )
    y_cf = (y_star_cf >= threshold).astype(np.int64)

    names = ("A", *observed.keys())
    observational = TabularDataset(
        A=A, X=np.column_stack(list(observed.values())), y=y,
        column_names=names, protected_index=0, target_name="Y",
    )
    counterfactual = TabularDataset(
        A=A_cf, X=np.column_stack(list(observed_cf.values())), y=y_cf,
        column_names=names, protected_index=0, target_name="Y",
    )

    fair_variables: Dict[str, np.ndarray] = {}
    for name in _EXPORTED_FAIR[case.group]:
        if name in draws:
            fair_variables[name] = draws[name].copy()
        else:
            fair_variables[name] = observed[name].copy()

    y_do_1 = np.where(A == 1, y, y_cf)
    y_do_0 = np.where(A == 1, y_cf, y)
    base_ate = float(np.mean(y_do_1 - y_do_0))

    return CaseBundle(
        observational=observational,
        counterfactual=counterfactual,
        y_fair=y_fair,
        fair_variables=fair_variables,
        base_ate=base_ate,
        config=case,
        bundle_id=bundle_id,
    )


def generate_suite(per_group: int, seed: int,
                   groups: Sequence[Union[str, CaseGroup]] = BENCHMARK_GROUPS,
                   n_range: Tuple[float, float] = config.CASE_N_RANGE,
                   sigma_range: Tuple[float, float] = config.CASE_SIGMA_RANGE,
                   weight_range: Tuple[float, float] = config.CASE_WEIGHT_RANGE,
                   workers: int = 1) -> List[CaseBundle]:
    """
    Generate `per_group` bundles for each requested group.

    Sample sizes and noise levels are drawn log-uniformly; the magnitude of
    w_A is log-uniform over `weight_range` with a random sign.

    Args:
        per_group: Bundles per group, at least 1.
        seed: Root seed of the suite.
        groups: Groups to generate, the six benchmark families by default.
        n_range: Range of sample sizes.
        sigma_range: Range of noise standard deviations.
        weight_range: Range of |w_A|.
        workers: Threads generating bundles concurrently.

    Returns:
        Bundles ordered by group, then by index within the group.
    """
    if per_group < 1:
        raise ConfigurationError("per_group must be at least 1")
    check_range(n_range, "n_range", positive=True)
    check_range(sigma_range, "sigma_range", positive=True)
    check_range(weight_range, "weight_range", positive=True)
    parsed = [CaseGroup.parse(g) for g in groups]
    ordinals = {group: i for i, group in enumerate(CaseGroup)}

    def make(item: Tuple[CaseGroup, int]) -> CaseBundle:
        group, index = item
        rng = rng_for(seed, ordinals[group], index)
        magnitude = log_uniform(rng, weight_range)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        n = int(round(log_uniform(rng, n_range)))
        sigma = log_uniform(rng, sigma_range)
        case = CaseStudyConfig(group=group, w_A=sign * magnitude, sigma=sigma, n=n,
                               seed=derive_seed(seed, ordinals[group], index, 1))
        return generate_case(case, bundle_id=f"{group.value}-{index:03d}")

    items = [(group, index) for group in parsed for index in range(per_group)]
    if workers <= 1:
        return [make(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(make, items))


class QuintileBucket(NamedTuple):
    """One of the five buckets of a suite partitioned by a key."""
    label: str
    members: List[Any]
    indices: List[int]
    low: float
    high: float


SUITE_KEYS: Dict[str, Callable[[CaseBundle], float]] = {
    "base_ate": lambda bundle: abs(bundle.base_ate),
    "sigma": lambda bundle: bundle.config.sigma,
    "n": lambda bundle: float(bundle.config.n),
}


def quintile_split(suite: Sequence[Any],
                   key: Union[str, Callable[[Any], float]],
                   buckets: int = config.QUINTILE_COUNT) -> List[QuintileBucket]:
    """
    Partition a suite into near-equal buckets by the empirical quantiles of a key.

    Items are sorted by key with a stable sort, so ties keep their suite
    order; bucket sizes differ by at most one.

    Args:
        suite: Bundles (or any items when `key` is a callable).
        key: One of "base_ate" (absolute value), "sigma", "n", or a callable.
        buckets: Number of buckets.

    Returns:
        Buckets labelled Q1..Q5 from the lowest key values up.
    """
    if not suite:
        raise ConfigurationError("cannot split an empty suite")
    if isinstance(key, str):
        if key not in SUITE_KEYS:
            raise ConfigurationError(f"unknown quintile key {key!r}")
        key_fn = SUITE_KEYS[key]
    else:
        key_fn = key
    values = np.array([key_fn(item) for item in suite], dtype=np.float64)
    order = np.argsort(values, kind="stable")
    result = []
    for i, chunk in enumerate(np.array_split(order, buckets)):
        indices = [int(j) for j in chunk]
        chunk_values = values[chunk] if len(chunk) else np.array([np.nan])
        result.append(QuintileBucket(
            label=f"Q{i + 1}",
            members=[suite[j] for j in indices],
            indices=indices,
            low=float(np.min(chunk_values)),
            high=float(np.max(chunk_values)),
        ))
    return result


__all__ = [
    "FAIR_LEVELS",
    "BENCHMARK_GROUPS",
    "STRESS_GROUPS",
    "CaseBundle",
    "CaseGroup",
    "CaseStudyConfig",
    "QuintileBucket",
    "generate_case",
    "generate_suite",
    "quintile_split",
]

from .case_studies import (
    BENCHMARK_GROUPS,
    STRESS_GROUPS,
    CaseBundle,
    CaseGroup,
    CaseStudyConfig,
    generate_case,
    generate_suite,
    quintile_split,
)
from .scm import (
    PriorConfig,
    PriorSample,
    ScmSpec,
    counterfactual_world,
    forward_pass,
    generate_pair,
    sample_prior_batch,
    sample_scm,
)

__all__ = [
    "BENCHMARK_GROUPS",
    "STRESS_GROUPS",
    "CaseBundle",
    "CaseGroup",
    "CaseStudyConfig",
    "PriorConfig",
    "PriorSample",
    "ScmSpec",
    "counterfactual_world",
    "forward_pass",
    "generate_case",
    "generate_pair",
    "generate_suite",
    "quintile_split",
    "sample_prior_batch",
    "sample_scm",
]

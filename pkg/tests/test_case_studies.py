import numpy as np
import pytest

from fairforge.errors import ConfigurationError, SchemaError
from fairforge.prior.case_studies import (
    BENCHMARK_GROUPS,
    STRESS_GROUPS,
    CaseGroup,
    CaseStudyConfig,
    generate_case,
    generate_suite,
    quintile_split,
)

from .conftest import make_bundle


class TestCaseGroup:
    """Group tags."""

    @pytest.mark.parametrize("tag, expected", [
        ("Biased", CaseGroup.BIASED),
        ("fair_observable", CaseGroup.FAIR_OBSERVABLE),
        ("Direct-Effect", CaseGroup.DIRECT_EFFECT),
        ("leveltwo", CaseGroup.FAIR_UNOBSERVABLE),
        (CaseGroup.MULTIPLE_A, CaseGroup.MULTIPLE_A),
    ])
    def test_parse(self, tag, expected):
        assert CaseGroup.parse(tag) is expected

    def test_unknown_tag(self):
        with pytest.raises(ConfigurationError):
            CaseGroup.parse("Confounded")

    def test_stress_flags(self):
        assert all(g.is_stress for g in STRESS_GROUPS)
        assert not any(g.is_stress for g in BENCHMARK_GROUPS)


class TestCaseStudyConfig:
    """Parameter validation."""

    @pytest.mark.parametrize("changes", [{"n": 50}, {"n": 20000}, {"sigma": 0.0},
                                         {"sigma": 1.5}, {"w_A": float("inf")}])
    def test_invalid(self, changes):
        values = {"group": "Biased", "w_A": 1.0, "sigma": 0.5, "n": 200, **changes}
        with pytest.raises(ConfigurationError):
            generate_case(CaseStudyConfig(**values))

    def test_dict_round_trip(self):
        case = CaseStudyConfig(group="Biased", w_A=-1.5, sigma=0.2, n=300, seed=4)
        assert CaseStudyConfig.from_dict(case.to_dict()) == case


class TestGenerateCase:
    """Structural equations and the paired worlds."""

    def test_biased_equations(self, biased_bundle):
        obs, cf = biased_bundle.observational, biased_bundle.counterfactual
        eps = biased_bundle.fair_variables["eps_X"]
        assert obs.column_names == ("A", "X_b")
        np.testing.assert_allclose(obs.X[:, 0], np.exp(2.0 * obs.A + eps), rtol=1e-14)
        np.testing.assert_allclose(cf.X[:, 0], np.exp(2.0 * (1 - obs.A) + eps), rtol=1e-14)
        np.testing.assert_array_equal(cf.A, 1 - obs.A)

    def test_deterministic(self):
        a, b = make_bundle(seed=7), make_bundle(seed=7)
        np.testing.assert_array_equal(a.observational.X, b.observational.X)
        np.testing.assert_array_equal(a.y_fair, b.y_fair)
        assert a.base_ate == b.base_ate

    @pytest.mark.parametrize("group", list(CaseGroup))
    def test_zero_weight_has_no_effect(self, group):
        bundle = make_bundle(group=group, w_A=0.0)
        assert bundle.base_ate == 0.0
        np.testing.assert_array_equal(bundle.observational.y, bundle.y_fair)
        np.testing.assert_array_equal(bundle.observational.y, bundle.counterfactual.y)

    def test_sign_of_base_ate(self):
        assert make_bundle(w_A=2.0).base_ate > 0.0
        assert make_bundle(w_A=-2.0).base_ate < 0.0

    @pytest.mark.parametrize("group", [CaseGroup.FAIR_UNOBSERVABLE,
                                       CaseGroup.FAIR_ADDITIVE_NOISE])
    def test_outcome_without_protected_pathway(self, group):
        bundle = make_bundle(group=group, w_A=3.0)
        assert bundle.base_ate == 0.0
        np.testing.assert_array_equal(bundle.observational.y, bundle.y_fair)

    def test_direct_effect_features_ignore_protected(self):
        bundle = make_bundle(group=CaseGroup.DIRECT_EFFECT)
        np.testing.assert_array_equal(bundle.observational.X, bundle.counterfactual.X)
        assert bundle.base_ate > 0.0

    def test_fair_variables_are_hidden_from_features(self):
        bundle = make_bundle(group=CaseGroup.FAIR_UNOBSERVABLE)
        assert "U" in bundle.fair_variables
        assert "U" not in bundle.observational.column_names

    def test_both_outcome_classes(self, bundle_factory):
        for group in CaseGroup:
            bundle = bundle_factory(group=group)
            assert set(np.unique(bundle.observational.y)) == {0, 1}
            assert set(np.unique(bundle.y_fair)) == {0, 1}


class TestFairColumns:
    """Fair columns by counterfactually-fair-prediction level."""

    def test_level_one(self):
        bundle = make_bundle(group=CaseGroup.FAIR_OBSERVABLE)
        columns = bundle.fair_columns(1)
        assert list(columns) == ["X_f"]
        np.testing.assert_array_equal(columns["X_f"], bundle.observational.X[:, 0])

    def test_all_levels(self):
        bundle = make_bundle(group=CaseGroup.FAIR_OBSERVABLE)
        assert list(bundle.fair_columns()) == ["X_f", "eps_X", "eps_Z"]

    def test_missing_level(self, biased_bundle):
        with pytest.raises(SchemaError):
            biased_bundle.fair_columns(2)

    def test_unknown_level(self, biased_bundle):
        with pytest.raises(ConfigurationError):
            biased_bundle.fair_columns(7)


class TestStressGroups:
    """Families that break the prior's assumptions."""

    def test_endogenous_protected_attribute(self):
        bundle = make_bundle(group=CaseGroup.ENDOGENOUS_A, n=2000)
        assert bundle.violates_prior
        X_p = bundle.fair_variables["X_p"]
        A = bundle.observational.A
        assert X_p[A == 1].mean() > X_p[A == 0].mean()

    def test_second_protected_attribute(self):
        bundle = make_bundle(group=CaseGroup.MULTIPLE_A)
        assert bundle.violates_prior
        assert bundle.extra_protected == ("A2",)
        assert "A2" in bundle.observational.column_names
        index = bundle.observational.feature_names.index("A2")
        np.testing.assert_array_equal(bundle.observational.X[:, index],
                                      bundle.counterfactual.X[:, index])


class TestGenerateSuite:
    """Suites of bundles across groups."""

    def test_counts_and_ids(self):
        suite = generate_suite(2, seed=3, n_range=(100, 300))
        assert len(suite) == 2 * len(BENCHMARK_GROUPS)
        assert suite[0].bundle_id == "Biased-000"
        assert suite[1].bundle_id == "Biased-001"
        assert [b.group for b in suite[::2]] == list(BENCHMARK_GROUPS)

    def test_deterministic_across_threads(self):
        serial = generate_suite(1, seed=5, n_range=(100, 300))
        threaded = generate_suite(1, seed=5, n_range=(100, 300), workers=4)
        for a, b in zip(serial, threaded):
            np.testing.assert_array_equal(a.observational.X, b.observational.X)
            assert a.config == b.config

    def test_ranges_are_respected(self):
        suite = generate_suite(3, seed=1, groups=["Biased"], n_range=(100, 200),
                               sigma_range=(0.1, 0.2), weight_range=(1.0, 2.0))
        for bundle in suite:
            assert 100 <= bundle.config.n <= 200
            assert 0.1 <= bundle.config.sigma <= 0.2
            assert 1.0 <= abs(bundle.config.w_A) <= 2.0

    def test_stress_suite(self):
        suite = generate_suite(1, seed=0, groups=STRESS_GROUPS, n_range=(100, 200))
        assert [b.group for b in suite] == list(STRESS_GROUPS)

    def test_rejects_zero_per_group(self):
        with pytest.raises(ConfigurationError):
            generate_suite(0, seed=0)


class TestQuintileSplit:
    """Partitioning a suite into five buckets."""

    def test_partition(self):
        items = list(range(23))
        buckets = quintile_split(items, key=lambda x: -x)
        assert [b.label for b in buckets] == ["Q1", "Q2", "Q3", "Q4", "Q5"]
        assert [len(b.members) for b in buckets] == [5, 5, 5, 4, 4]
        assert sorted(i for b in buckets for i in b.indices) == items
        assert buckets[0].members == [22, 21, 20, 19, 18]

    def test_hundred_items(self):
        buckets = quintile_split(list(range(100)), key=float)
        assert [len(b.members) for b in buckets] == [20] * 5

    def test_ties_keep_suite_order(self):
        buckets = quintile_split(list("abcdefghij"), key=lambda _: 1.0)
        assert [b.members for b in buckets] == [["a", "b"], ["c", "d"], ["e", "f"],
                                                ["g", "h"], ["i", "j"]]

    def test_bundle_keys(self):
        suite = generate_suite(2, seed=2, n_range=(100, 400))
        buckets = quintile_split(suite, "n")
        for lower, upper in zip(buckets, buckets[1:]):
            assert lower.high <= upper.low
        ate_buckets = quintile_split(suite, "base_ate")
        assert ate_buckets[0].low >= 0.0

    def test_invalid_input(self):
        with pytest.raises(ConfigurationError):
            quintile_split([], "n")
        with pytest.raises(ConfigurationError):
            quintile_split([make_bundle()], "depth")

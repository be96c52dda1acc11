import dataclasses

import numpy as np
import pytest

import fairforge.prior.scm as scm_module
from fairforge import config
from fairforge.errors import (
    ConfigurationError,
    DegenerateSampleError,
    DimensionError,
    NumericError,
    SchemaError,
)
from fairforge.prior.scm import (
    PriorConfig,
    ScmSpec,
    available_feature_count,
    counterfactual_world,
    draw_dataset_shape,
    forward_pass,
    generate_pair,
    propagate,
    sample_prior_batch,
    sample_scm,
)


def _single_node_scm(weight=1.0, nonlinearity="identity"):
    return ScmSpec(
        weights=np.full((1, 1, 1), weight),
        masks=np.ones((1, 1, 1), dtype=np.int8),
        nonlinearities=(nonlinearity, nonlinearity),
        protected_row=0,
        protected_threshold=0.0,
        protected_values=(0.0, 1.0),
        feature_locations=(),
        outcome_location=0,
        outcome_threshold=0.0,
        noise_std=1.0,
    )


class TestPriorConfig:
    """Validation and serialization of the prior settings."""

    def test_defaults_are_valid(self):
        assert PriorConfig().validate() == PriorConfig()

    @pytest.mark.parametrize("changes", [
        {"num_exogenous": 1},
        {"depth": 1},
        {"num_features": 0},
        {"num_features": 50},
        {"sparsity_log_range": (0.5, 0.1)},
        {"sparsity_log_range": (0.1, 2.0)},
        {"noise_std_range": (0.0, 1.0)},
        {"nonlinearity_set": ("identity", "softsign")},
        {"sample_size_range": (1, 100)},
    ])
    def test_invalid_settings(self, changes):
        with pytest.raises(ConfigurationError):
            dataclasses.replace(PriorConfig(), **changes).validate()

    def test_round_trip_through_dict(self):
        prior = PriorConfig(num_exogenous=5, sample_size_range=(100, 400))
        assert PriorConfig.from_dict(prior.to_dict()) == prior

    def test_unknown_keys_are_rejected(self):
        with pytest.raises(ConfigurationError):
            PriorConfig.from_dict({"num_exogenous": 4, "layers": 3})

    def test_digest_tracks_content(self):
        assert PriorConfig().digest() == PriorConfig().digest()
        assert PriorConfig().digest() != PriorConfig(depth=3).digest()

    def test_varied_prior_caps_features(self):
        prior = PriorConfig.varied(max_features=8)
        assert prior.feature_range == (1, 8)
        assert prior.sample_size_range == config.PRIOR_SAMPLE_SIZE_RANGE
        assert PriorConfig.varied().feature_range[1] == config.MAX_FEATURES

    def test_available_feature_count(self):
        assert available_feature_count(4, 3) == 3
        assert available_feature_count(4, 2) == 3
        assert available_feature_count(8, 4) == 15


class TestSampleScm:
    """Sampling the sparse-MLP structure."""

    def test_weight_shape(self):
        spec = sample_scm(PriorConfig(num_exogenous=4, depth=3, num_features=2), seed=0)
        assert spec.weights.shape == (4, 4, 2)
        assert spec.masks.shape == (4, 4, 2)
        assert len(spec.nonlinearities) == 3

    def test_unit_sparsity_keeps_every_edge(self):
        prior = PriorConfig(num_exogenous=4, depth=3, num_features=2,
                            sparsity_log_range=(1.0, 1.0))
        assert sample_scm(prior, seed=1).masks.all()

    def test_mean_mask_density_matches_log_uniform_mean(self):
        prior = PriorConfig(num_exogenous=4, depth=3, num_features=2,
                            sparsity_log_range=(0.1, 0.9))
        densities = [sample_scm(prior, seed=s).masks.mean() for s in range(1000)]
        assert np.mean(densities) == pytest.approx(0.8 / np.log(9.0), abs=0.03)

    def test_deterministic(self):
        prior = PriorConfig(num_exogenous=5, depth=3, num_features=3)
        a, b = sample_scm(prior, seed=9), sample_scm(prior, seed=9)
        np.testing.assert_array_equal(a.weights, b.weights)
        assert a.to_dict() == b.to_dict()

    def test_features_avoid_exogenous_layer_and_outcome(self):
        prior = PriorConfig(num_exogenous=4, depth=4, num_features=6)
        spec = sample_scm(prior, seed=2)
        assert len(set(spec.feature_locations)) == 6
        for layer, index in spec.feature_locations:
            assert layer >= 2
            assert (layer, index) != (spec.depth - 1, spec.outcome_location)

    def test_dict_round_trip(self):
        spec = sample_scm(PriorConfig(num_exogenous=4, depth=3, num_features=2), seed=4)
        again = ScmSpec.from_dict(spec.to_dict())
        np.testing.assert_array_equal(again.weights, spec.weights)
        assert again.feature_locations == spec.feature_locations


class TestPropagate:
    """Evaluating the MLP."""

    def test_zero_everything_gives_zero(self):
        spec = dataclasses.replace(_single_node_scm(), weights=np.zeros((1, 1, 1)))
        out = propagate(spec, np.zeros((3, 1)), np.zeros((3, 1, 2)))
        np.testing.assert_array_equal(out, np.zeros((3, 1, 2)))

    def test_single_edge(self):
        noise = np.array([[0.0, 0.5]])
        out = forward_pass(_single_node_scm(), np.array([2.0]), noise)
        assert out[0, 1] == pytest.approx(2.5)

    def test_masked_protected_row(self):
        noise = np.zeros((1, 1, 2))
        out = propagate(_single_node_scm(), np.array([[2.0]]), noise, protected_masked=True)
        assert out[0, 0, 1] == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            propagate(_single_node_scm(), np.zeros((3, 2)), np.zeros((3, 1, 2)))
        with pytest.raises(DimensionError):
            forward_pass(_single_node_scm(), np.zeros(1), np.zeros((1, 3)))

    def test_non_finite_noise(self):
        noise = np.zeros((1, 1, 2))
        noise[0, 0, 1] = np.inf
        with pytest.raises(NumericError):
            propagate(_single_node_scm(), np.zeros((1, 1)), noise)

    def test_batch_matches_single_rows(self):
        spec = sample_scm(PriorConfig(num_exogenous=4, depth=3, num_features=2), seed=6)
        rng = np.random.default_rng(0)
        exogenous = rng.normal(size=(5, 4))
        noise = rng.normal(size=(5, 4, 3))
        batch = propagate(spec, exogenous, noise)
        for i in range(5):
            np.testing.assert_allclose(forward_pass(spec, exogenous[i], noise[i]), batch[i],
                                       rtol=1e-12, atol=1e-12)


class TestGeneratePair:
    """Biased datasets with fair targets from one SCM."""

    def test_columns_and_classes(self, prior_samples):
        for sample in prior_samples:
            data = sample.dataset
            assert data.column_names == ("A", *(f"x{j + 1}" for j in range(data.n_features)))
            for column in (data.A, data.y, sample.y_fair):
                assert set(np.unique(column)) == {0, 1}

    def test_zero_protected_row_gives_identical_targets(self, small_prior):
        spec = sample_scm(small_prior, seed=3)
        masks = spec.masks.copy()
        masks[spec.protected_row, :, 0] = 0
        spec = dataclasses.replace(spec, masks=masks)
        sample = generate_pair(spec, 300, seed=8)
        np.testing.assert_array_equal(sample.dataset.y, sample.y_fair)

    def test_fair_targets_survive_the_flip(self, prior_samples):
        for sample in prior_samples:
            world = counterfactual_world(sample)
            np.testing.assert_array_equal(world.y_fair, sample.y_fair)
            np.testing.assert_array_equal(world.dataset.A, 1 - sample.dataset.A)

    def test_counterfactual_needs_noise(self, small_prior):
        spec = sample_scm(small_prior, seed=3)
        sample = generate_pair(spec, 100, seed=1, keep_noise=False)
        with pytest.raises(SchemaError):
            counterfactual_world(sample)

    def test_too_few_rows(self, small_prior):
        with pytest.raises(ConfigurationError):
            generate_pair(sample_scm(small_prior, seed=0), 1, seed=0)

    def test_protected_effect_appears_over_seeds(self):
        prior = PriorConfig(num_exogenous=5, depth=3, num_features=2, num_samples=1000,
                            sparsity_log_range=(1.0, 1.0), nonlinearity_set=("identity",))
        effects = []
        for seed in range(20):
            sample = sample_prior_batch(prior, 1, seed=seed)[0]
            world = counterfactual_world(sample)
            A = sample.dataset.A
            y_do_1 = np.where(A == 1, sample.dataset.y, world.dataset.y)
            y_do_0 = np.where(A == 1, world.dataset.y, sample.dataset.y)
            effects.append(abs(np.mean(y_do_1 - y_do_0)))
        assert np.mean(np.array(effects) > 0.0) >= 0.8


class TestSamplePriorBatch:
    """Batches of independent prior datasets."""

    def test_deterministic_and_distinct(self, small_prior):
        a = sample_prior_batch(small_prior, 4, seed=21)
        b = sample_prior_batch(small_prior, 4, seed=21)
        assert len(a) == 4
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.dataset.X, y.dataset.X)
            np.testing.assert_array_equal(x.y_fair, y.y_fair)
        assert len({s.seed for s in a}) == 4

    def test_thread_count_does_not_change_results(self, small_prior):
        serial = sample_prior_batch(small_prior, 4, seed=2)
        threaded = sample_prior_batch(small_prior, 4, seed=2, workers=3)
        for x, y in zip(serial, threaded):
            np.testing.assert_array_equal(x.dataset.X, y.dataset.X)

    def test_shapes_follow_ranges(self):
        prior = PriorConfig(num_exogenous=4, depth=3, num_features=2, num_samples=100,
                            feature_range=(1, 16), width_range=(4, 8), depth_range=(2, 4),
                            sample_size_range=(100, 200))
        for sample in sample_prior_batch(prior, 5, seed=4):
            spec = sample.scm
            assert 4 <= spec.width <= 8
            assert 2 <= spec.depth <= 4
            assert 1 <= sample.dataset.n_features <= available_feature_count(spec.width,
                                                                              spec.depth)
            assert 100 <= sample.dataset.n_rows <= 200

    def test_log_uniform_sample_sizes(self):
        prior = PriorConfig(sample_size_range=(100, 10000))
        sizes = [draw_dataset_shape(prior, 0, i).num_samples for i in range(20000)]
        assert np.median(sizes) == pytest.approx(1000, rel=0.1)

    def test_training_prior_varies_dataset_shapes(self):
        batch = sample_prior_batch(PriorConfig.varied(), 12, seed=0, keep_noise=False)
        shapes = {(s.dataset.n_rows, s.dataset.n_features, s.scm.width, s.scm.depth)
                  for s in batch}
        assert len({n for n, _, _, _ in shapes}) > 1
        low, high = config.PRIOR_SAMPLE_SIZE_RANGE
        for sample in batch:
            assert sample.dataset.n_features <= config.MAX_FEATURES
            assert low <= sample.dataset.n_rows <= high

    def test_degenerate_draws_are_retried(self, small_prior, monkeypatch):
        calls = []
        original = scm_module.generate_pair

        def flaky(*args, **kwargs):
            calls.append(1)
            if len(calls) == 1:
                raise DegenerateSampleError("constant column")
            return original(*args, **kwargs)

        monkeypatch.setattr(scm_module, "generate_pair", flaky)
        batch = sample_prior_batch(small_prior, 1, seed=0)
        assert len(batch) == 1
        assert len(calls) == 2

    def test_retry_budget_exhausted(self, small_prior, monkeypatch):
        def always_degenerate(*args, **kwargs):
            raise DegenerateSampleError("constant column")

        monkeypatch.setattr(scm_module, "generate_pair", always_degenerate)
        with pytest.raises(DegenerateSampleError):
            sample_prior_batch(small_prior, 1, seed=0)

    def test_empty_batch_rejected(self, small_prior):
        with pytest.raises(ConfigurationError):
            sample_prior_batch(small_prior, 0, seed=0)

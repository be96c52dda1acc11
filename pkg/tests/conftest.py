"""Shared fixtures: a miniature model, small case-study bundles and prior samples."""
import numpy as np
import pytest

from fairforge.core.tabular import TabularDataset
from fairforge.model.transformer import ModelCheckpoint, ModelConfig, init_params
from fairforge.prior.case_studies import CaseGroup, CaseStudyConfig, generate_case
from fairforge.prior.scm import PriorConfig, sample_prior_batch


@pytest.fixture
def tiny_config():
    return ModelConfig(embed_dim=8, num_layers=1, num_heads=2, ff_dim=16, max_features=8,
                       max_rows=128, batch_datasets=2, steps=2, epochs=1, seed=3,
                       learning_rate=1e-2)


@pytest.fixture
def tiny_checkpoint(tiny_config):
    return ModelCheckpoint(params=init_params(tiny_config), config=tiny_config)


@pytest.fixture
def small_prior():
    return PriorConfig(num_exogenous=4, depth=3, num_features=3, num_samples=120, seed=5)


@pytest.fixture
def prior_samples(small_prior):
    return sample_prior_batch(small_prior, 3, seed=11, keep_noise=True)


def make_bundle(group=CaseGroup.BIASED, w_A=2.0, sigma=0.5, n=200, seed=1):
    case = CaseStudyConfig(group=group, w_A=w_A, sigma=sigma, n=n, seed=seed)
    return generate_case(case, bundle_id=f"{CaseGroup.parse(group).value}-000")


@pytest.fixture
def biased_bundle():
    return make_bundle()


@pytest.fixture
def toy_dataset():
    rng = np.random.default_rng(0)
    n = 60
    A = np.tile([0, 1], n // 2)
    X = rng.normal(size=(n, 2)) + A[:, None]
    y = (X[:, 0] + rng.normal(scale=0.5, size=n) > 0.5).astype(int)
    return TabularDataset(A=A, X=X, y=y, column_names=("A", "x1", "x2"))


@pytest.fixture
def bundle_factory():
    return make_bundle

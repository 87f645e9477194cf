"""Shared seeded fixtures: the default model and the constant/sine corpora."""

import pytest

from ts_lens.model import ModelConfig, forward, init_model
from ts_lens.synthgen import desk_spec, make_dataset

SEED = 7


@pytest.fixture(scope="session")
def weights():
    return init_model(ModelConfig())


@pytest.fixture(scope="session")
def corpus():
    """Default corpus: 512 constants + 512 sines, z-normalized."""
    return make_dataset([desk_spec("constant"), desk_spec("sine_constant")], 512, 128, SEED)


@pytest.fixture(scope="session")
def raw_corpus():
    """Same classes without normalization, so intercepts survive."""
    return make_dataset(
        [desk_spec("constant"), desk_spec("sine_constant")], 512, 128, SEED, normalize=False
    )


@pytest.fixture(scope="session")
def trend_corpus():
    """Constants, sines and increasing trends, raw amplitudes."""
    specs = [desk_spec("constant"), desk_spec("sine_constant"), desk_spec("increasing_slope")]
    return make_dataset(specs, 256, 128, SEED, normalize=False)


def _capture(weights, data):
    _, captures = forward(
        weights,
        data.series,
        labels=data.labels,
        dataset_checksum=data.checksum,
        class_names=data.class_names,
    )
    return captures


@pytest.fixture(scope="session")
def captures(weights, corpus):
    return _capture(weights, corpus)


@pytest.fixture(scope="session")
def raw_captures(weights, raw_corpus):
    return _capture(weights, raw_corpus)


@pytest.fixture(scope="session")
def trend_captures(weights, trend_corpus):
    return _capture(weights, trend_corpus)

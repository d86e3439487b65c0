from __future__ import annotations

import pytest

from taxadown.pipeline import StageConfig, run_pipeline
from taxadown.projection import TrainConfig
from taxadown.synth import default_spec, generate

# Small-but-complete config used across integration tests: enough anchors per
# species to form clusters, training cut down to keep the suite fast.
FAST_TRAIN = TrainConfig(epochs=4, batch_size=64, triplets_per_epoch=400, seed=7)


@pytest.fixture(scope="session")
def small_spec():
    return default_spec(seed=7, per_species_count=24)


@pytest.fixture(scope="session")
def small_dataset(small_spec):
    return generate(small_spec)


@pytest.fixture(scope="session")
def small_config():
    return StageConfig(train=FAST_TRAIN)


@pytest.fixture(scope="session")
def small_result(small_dataset, small_config):
    return run_pipeline(small_dataset, small_config)

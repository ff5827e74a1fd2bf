import hypothesis
import numpy as np
import pytest

from screen_rating.config import (FusionConfig, ImageEncoderConfig, ModelConfig,
                                  TextEncoderConfig)
from screen_rating.synthetic import generate_synthetic

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("ci", deadline=None)
hypothesis.settings.load_profile("ci")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running training runs")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    """32 px images and 16-wide embeddings; a few epochs finish in seconds"""
    return ModelConfig(
        image=ImageEncoderConfig(input_size=32, stem_channels=4, stage_channels=(4, 8, 8),
                                 embed_dim=16, expand_ratio=2),
        text=TextEncoderConfig(vocab_size=64, width=16, layers=1, heads=2, max_length=8,
                               output_dim=16, ff_multiplier=2),
        fusion=FusionConfig(embed_dim=16, hidden_dim=16, dropout=0.1),
        learning_rate=1e-3,
        epochs=2,
        batch_size=4,
        seed=0,
    )


@pytest.fixture(scope="session")
def synthetic_corpus(tmp_path_factory):
    return generate_synthetic(32, seed=7, out_dir=tmp_path_factory.mktemp("synth"), size=32)

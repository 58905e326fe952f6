from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from ppgauth.config import EvalConfig, ModelConfig, PipelineConfig, get_settings
from ppgauth.features import extract_all
from ppgauth.schemas import Beat, FeatureMatrix
from ppgauth.signal.beats import detect_fiducials
from ppgauth.synth import beat_shape, gaussian_feature_users, two_gaussian_beat, user_morphologies

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def clean_beat() -> Beat:
    return two_gaussian_beat()


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch):
    monkeypatch.delenv("PPG_SEED", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def gaussian_users() -> FeatureMatrix:
    return gaussian_feature_users(n_users=15, per_user=120, dims=6, separation=3.0, seed=7)


@pytest.fixture
def small_config() -> PipelineConfig:
    return PipelineConfig(
        seed=3,
        models=ModelConfig(n_trees=40),
        evaluation=EvalConfig(
            windows=[1, 20],
            enrol_sizes=[40],
            enrol_session_counts=[1],
            repeats=3,
            multiclass_selection=False,
            bootstrap=100,
        ),
    )


def _beat_feature_matrix(n_users: int = 4, per_user: int = 50, seed: int = 11) -> FeatureMatrix:
    rng = np.random.default_rng(seed)
    vectors = []
    for k, (morph, bpm) in enumerate(user_morphologies(n_users, rng)):
        for _ in range(per_user):
            length = int(round(60.0 * 240.0 / (bpm * (1 + 0.03 * rng.normal()))))
            shape = beat_shape(np.arange(length) / length, morph.drifted(rng, 0.3))
            samples = shape + rng.normal(0.0, 0.005, size=length)
            beat = Beat(samples=samples, start_index=0, end_index=length, fps=240.0, user_id=f"u{k:02d}", session_id="s0")
            vectors.append(extract_all(beat, detect_fiducials(beat)))
    return FeatureMatrix.from_vectors(vectors)


@pytest.fixture(scope="session")
def beat_features() -> FeatureMatrix:
    """Full 541-column rows from four synthetic users."""
    return _beat_feature_matrix()

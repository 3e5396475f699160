from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from apsel import analysis, dataset, experiment, simulate

settings.register_profile(
    "suite",
    deadline=None,                 # numba JIT on first touch breaks deadlines
    max_examples=30,
    derandomize=True,
    database=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

TINY_CSV = """WAP001,WAP002,LONGITUDE,LATITUDE,FLOOR
-50,-60,-7500,4864745,0
-70,100,-7400,4864746,1
100,100,-7300,4864747,2
"""


@pytest.fixture()
def tiny_csv(tmp_path):
    path = tmp_path / "tiny.csv"
    path.write_text(TINY_CSV)
    return path


@pytest.fixture(scope="session")
def small_corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("small-corpus")
    simulate.write_corpus(out, simulate.small_config())
    return out


@pytest.fixture(scope="session")
def small_data(small_corpus_dir):
    d = dataset.load_many([
        small_corpus_dir / simulate.TRAINING_FILENAME,
        small_corpus_dir / simulate.VALIDATION_FILENAME,
    ])
    return dataset.normalize_labels(d)


@pytest.fixture(scope="session")
def full_corpus_paths():
    return simulate.ensure_corpus(experiment.default_cache_dir())


@pytest.fixture(scope="session")
def full_data(full_corpus_paths):
    d = dataset.load_many([full_corpus_paths.training,
                           full_corpus_paths.validation])
    return dataset.normalize_labels(d)


def make_instance(n, seed, spread=0.35):
    """Random importance/redundancy pair with every variable active."""
    rng = np.random.default_rng(seed)
    scores = rng.uniform(0.05, 1.0, n)
    mask = np.ones(n, dtype=bool)
    imp = analysis.ImportanceVector(
        metric=analysis.Metric.ENTROPY,
        raw_scores=scores.copy(),
        scores=scores,
        active_mask=mask,
    )
    values = np.abs(rng.normal(0.0, spread, (n, n)))
    values = np.clip((values + values.T) / 2.0, 0.0, 1.0)
    np.fill_diagonal(values, 1.0)
    red = analysis.RedundancyMatrix(values=values, active_mask=mask)
    return imp, red


@pytest.fixture(scope="session")
def instance_factory():
    return make_instance

"""Estimator wrappers: selector protocol, pipeline composition, validation."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import Pipeline

from apsel.errors import ConfigError
from apsel.selection import KnnLocalizer, QuboApSelector


def _toy_matrix(rng, m=40, n=8):
    """RSS-like matrix: per-column location signal plus noise, in dBm range."""
    base = rng.uniform(-90.0, -40.0, (m, n))
    return np.round(base)


def test_selector_fit_sets_support_of_size_k():
    rng = np.random.default_rng(0)
    X = _toy_matrix(rng)
    sel = QuboApSelector(budget_k=3, sampler="sa", num_reads=60, num_sweeps=60,
                         seed=1)
    sel.fit(X)
    assert sel.support_.dtype == bool
    assert sel.support_.sum() == 3
    assert sel.get_support().tolist() == sel.support_.tolist()
    assert sorted(sel.selected_indices_.tolist()) == list(
        np.flatnonzero(sel.support_))


def test_selector_transform_keeps_selected_columns():
    rng = np.random.default_rng(1)
    X = _toy_matrix(rng)
    sel = QuboApSelector(budget_k=4, sampler="sa", num_reads=60, num_sweeps=60,
                         seed=2)
    kept = sel.fit_transform(X)
    assert kept.shape == (X.shape[0], 4)
    np.testing.assert_array_equal(kept, X[:, sel.support_])


def test_selector_replaces_sentinel_before_analysis():
    rng = np.random.default_rng(2)
    X = _toy_matrix(rng, n=6)
    X[:, 4] = 100.0  # never detected; zero importance, zero variance
    sel = QuboApSelector(budget_k=2, sampler="sa", num_reads=60, num_sweeps=60,
                         seed=3)
    sel.fit(X)
    assert not sel.support_[4]
    assert sel.importance_.scores[4] == 0.0


def test_selector_same_seed_is_reproducible():
    rng = np.random.default_rng(3)
    X = _toy_matrix(rng)
    mk = lambda: QuboApSelector(budget_k=3, sampler="sqa", num_reads=40,
                                num_sweeps=40, trotter_slices=4, seed=7).fit(X)
    assert np.array_equal(mk().support_, mk().support_)


def test_selector_is_cloneable_with_params_intact():
    sel = QuboApSelector(budget_k=5, alpha=0.5, eta=4.0, sampler="sa")
    dup = clone(sel)
    assert dup.get_params() == sel.get_params()
    dup.set_params(budget_k=2)
    assert dup.budget_k == 2
    assert sel.budget_k == 5


def test_pipeline_selector_then_localizer():
    rng = np.random.default_rng(4)
    m, n = 60, 10
    X = np.round(rng.uniform(-90.0, -40.0, (m, n)))
    y = np.column_stack([
        rng.uniform(0.0, 50.0, m),
        rng.uniform(0.0, 50.0, m),
        rng.integers(0, 3, m).astype(float),
    ])
    pipe = Pipeline([
        ("select", QuboApSelector(budget_k=4, sampler="sa", num_reads=60,
                                  num_sweeps=60, seed=5)),
        ("locate", KnnLocalizer(k_neighbors=3)),
    ])
    pipe.fit(X, y)
    pred = pipe.predict(X)
    assert pred.shape == (m, 3)
    assert pipe.score(X, y) <= 0.0


def test_localizer_exact_training_match_scores_zero():
    rng = np.random.default_rng(5)
    X = rng.uniform(-90.0, -40.0, (20, 5))  # continuous, so rows are unique
    y = np.column_stack([
        rng.uniform(0.0, 10.0, 20),
        rng.uniform(0.0, 10.0, 20),
        np.zeros(20),
    ])
    loc = KnnLocalizer(k_neighbors=1).fit(X, y)
    np.testing.assert_allclose(loc.predict(X), y, atol=1e-12)
    assert loc.score(X, y) == 0.0


def test_localizer_requires_fit_before_predict():
    with pytest.raises(NotFittedError):
        KnnLocalizer().predict(np.zeros((2, 3)))


def test_localizer_rejects_bad_label_shape():
    X = np.zeros((4, 3))
    with pytest.raises(ConfigError):
        KnnLocalizer().fit(X, np.zeros((4, 2)))


def test_localizer_rejects_fractional_floor_labels():
    X = np.zeros((4, 3))
    y = np.column_stack([np.zeros(4), np.zeros(4), np.full(4, 0.5)])
    with pytest.raises(ConfigError):
        KnnLocalizer().fit(X, y)


def test_localizer_rejects_k_larger_than_training_set():
    X = np.zeros((2, 3))
    y = np.zeros((2, 3))
    with pytest.raises(ConfigError):
        KnnLocalizer(k_neighbors=5).fit(X, y)


def test_localizer_rejects_query_width_mismatch():
    rng = np.random.default_rng(6)
    X = rng.uniform(-90.0, -40.0, (6, 4))
    y = np.zeros((6, 3))
    loc = KnnLocalizer(k_neighbors=1).fit(X, y)
    with pytest.raises(ConfigError):
        loc.predict(X[:, :3])

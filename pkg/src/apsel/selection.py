"""Estimator-style wrappers: a feature selector and a kNN position regressor.

`QuboApSelector` follows the scikit-learn selector protocol (fit on an RSS
matrix, transform drops unselected AP columns, `get_support` exposes the
mask), so it can sit in a Pipeline in front of `KnnLocalizer` or any other
downstream estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import analysis, anneal, localize, qubo
from .dataset import FingerprintDataset
from .errors import ConfigError


class QuboApSelector(SelectorMixin, BaseEstimator):
    """Select a fixed-size AP subset by annealing the selection model.

    Parameters mirror the pipeline defaults: importance metric, the
    importance/redundancy trade-off alpha, the budget penalty eta, the budget
    itself, and the sampler settings. `X` is an (n_samples, n_aps) RSS matrix;
    entries equal to `sentinel` are treated as "not detected" and replaced by
    `not_detected_value` before analysis.
    """

    def __init__(self, budget_k=20, metric="entropy", alpha=0.8, eta=2.0,
                 sampler="sqa", num_reads=1000, num_sweeps=1000, beta=10.0,
                 gamma=1.0, trotter_slices=8, seed=0, sentinel=100.0,
                 not_detected_value=-105.0):
        self.budget_k = budget_k
        self.metric = metric
        self.alpha = alpha
        self.eta = eta
        self.sampler = sampler
        self.num_reads = num_reads
        self.num_sweeps = num_sweeps
        self.beta = beta
        self.gamma = gamma
        self.trotter_slices = trotter_slices
        self.seed = seed
        self.sentinel = sentinel
        self.not_detected_value = not_detected_value

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        rss = np.where(X == self.sentinel, self.not_detected_value, X)
        m = rss.shape[0]
        d = FingerprintDataset(
            rss=rss,
            latitude=np.zeros(m),
            longitude=np.zeros(m),
            floor=np.zeros(m, dtype=np.int64),
            ap_ids=[f"AP{i}" for i in range(rss.shape[1])],
            not_detected_value=self.not_detected_value,
        )
        imp = analysis.importance(d, analysis.Metric(self.metric))
        red = analysis.redundancy(d, imp)
        model = qubo.build(imp, red, alpha=self.alpha, eta=self.eta,
                           k=self.budget_k)
        cfg = anneal.AnnealConfig(
            num_reads=self.num_reads, num_sweeps=self.num_sweeps,
            beta=self.beta, gamma=self.gamma,
            trotter_slices=self.trotter_slices, seed=self.seed,
        )
        result = anneal.select(model, anneal.Sampler(self.sampler), cfg)
        self.importance_ = imp
        self.redundancy_ = red
        self.model_ = model
        self.result_ = result
        self.selected_indices_ = np.asarray(result.selected, dtype=int)
        mask = np.zeros(rss.shape[1], dtype=bool)
        mask[self.selected_indices_] = True
        self.support_ = mask
        self.n_features_in_ = rss.shape[1]
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        return self.support_

    def _more_tags(self):
        return {"allow_nan": False, "requires_y": False}


class KnnLocalizer(BaseEstimator):
    """Nearest-fingerprint position estimator.

    `fit` takes the training RSS matrix and an (n_samples, 3) label array of
    (latitude, longitude, floor); `predict` returns the same layout. The score
    is the negative mean 3D error so that larger is better.
    """

    def __init__(self, k_neighbors=3, floor_height_m=3.0):
        self.k_neighbors = k_neighbors
        self.floor_height_m = floor_height_m

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = check_array(y, dtype=np.float64)
        if y.shape != (X.shape[0], 3):
            raise ConfigError(
                f"labels must be (n_samples, 3) [lat, lon, floor], got {y.shape}"
            )
        if self.k_neighbors < 1:
            raise ConfigError(f"k_neighbors must be >= 1, got {self.k_neighbors!r}")
        if self.k_neighbors > X.shape[0]:
            raise ConfigError(
                f"k_neighbors={self.k_neighbors} exceeds {X.shape[0]} training samples"
            )
        floors = y[:, 2]
        if not np.all(floors == np.floor(floors)):
            raise ConfigError("floor labels must be integers")
        self.train_rss_ = X
        self.train_lat_ = y[:, 0]
        self.train_lon_ = y[:, 1]
        self.train_floor_ = floors.astype(np.int64)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "train_rss_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ConfigError(
                f"query has {X.shape[1]} columns, expected {self.n_features_in_}"
            )
        neighbors = localize._neighbor_indices(self.train_rss_, X, self.k_neighbors)
        lat = self.train_lat_[neighbors].mean(axis=1)
        lon = self.train_lon_[neighbors].mean(axis=1)
        floor = localize._vote_floors(self.train_floor_[neighbors])
        return np.column_stack([lat, lon, floor.astype(np.float64)])

    def score(self, X, y):
        y = check_array(y, dtype=np.float64)
        pred = self.predict(X)
        dz = (pred[:, 2] - y[:, 2]) * self.floor_height_m
        err = np.sqrt((pred[:, 0] - y[:, 0]) ** 2
                      + (pred[:, 1] - y[:, 1]) ** 2 + dz * dz)
        return -float(err.mean())

"""kNN fingerprint localization and 3D error reporting for an AP subset.

Matching runs entirely in the dataset's RSS frame (sentinel-substituted,
possibly normalized); reported errors are converted to meters through the
dataset's stored coordinate transform. Distances compare only the columns in
the chosen AP subset, which is the whole point: a good subset preserves
accuracy with a fraction of the radio map.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataset import DatasetSplit, FingerprintDataset
from .errors import ConfigError

DEFAULT_K_NEIGHBORS = 3
DEFAULT_FLOOR_HEIGHT_M = 3.0

# queries per distance-matrix block, sized so block x train stays ~64 MB
_BLOCK_ELEMENTS = 8_000_000


class Distance(str, Enum):
    EUCLIDEAN = "euclidean"


class MissingHandling(str, Enum):
    SENTINEL_VALUE = "sentinel-value"


@dataclass(frozen=True)
class LocalizerConfig:
    k_neighbors: int = DEFAULT_K_NEIGHBORS
    floor_height_m: float = DEFAULT_FLOOR_HEIGHT_M
    distance: Distance = Distance.EUCLIDEAN
    missing_handling: MissingHandling = MissingHandling.SENTINEL_VALUE

    def validate(self) -> "LocalizerConfig":
        if self.k_neighbors < 1:
            raise ConfigError(f"k_neighbors must be >= 1, got {self.k_neighbors!r}")
        if not (math.isfinite(self.floor_height_m) and self.floor_height_m > 0.0):
            raise ConfigError(
                f"floor_height_m must be finite and positive, got {self.floor_height_m!r}"
            )
        Distance(self.distance)
        MissingHandling(self.missing_handling)
        return self


@dataclass(frozen=True)
class PositionEstimate:
    lat: float
    lon: float
    floor: int


@dataclass
class LocalizationReport:
    per_query_error_m: np.ndarray
    floor_hit: np.ndarray
    mean_error_m: float
    median_error_m: float
    p95_error_m: float
    floor_accuracy: float
    num_aps_used: int
    reduction_fraction: float

    @property
    def num_queries(self) -> int:
        return int(self.per_query_error_m.shape[0])

    def to_json_dict(self) -> dict:
        return {
            "mean_error_m": float(self.mean_error_m),
            "median_error_m": float(self.median_error_m),
            "p95_error_m": float(self.p95_error_m),
            "floor_accuracy": float(self.floor_accuracy),
            "num_aps_used": int(self.num_aps_used),
            "reduction_fraction": float(self.reduction_fraction),
            "num_queries": self.num_queries,
            "per_query_error_m": [float(e) for e in self.per_query_error_m],
            "floor_hit": [bool(h) for h in self.floor_hit],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "LocalizationReport":
        return cls(
            per_query_error_m=np.asarray(doc["per_query_error_m"], dtype=np.float64),
            floor_hit=np.asarray(doc["floor_hit"], dtype=bool),
            mean_error_m=float(doc["mean_error_m"]),
            median_error_m=float(doc["median_error_m"]),
            p95_error_m=float(doc["p95_error_m"]),
            floor_accuracy=float(doc["floor_accuracy"]),
            num_aps_used=int(doc["num_aps_used"]),
            reduction_fraction=float(doc["reduction_fraction"]),
        )

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "LocalizationReport":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))

    def save_csv(self, path: str | os.PathLike) -> None:
        """One row per query: index, error_m, floor_hit."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "error_m", "floor_hit"])
            for i, (err, hit) in enumerate(zip(self.per_query_error_m, self.floor_hit)):
                writer.writerow([i, repr(float(err)), int(hit)])


def _checked_subset(subset, n: int) -> np.ndarray:
    idx = np.asarray(subset, dtype=np.int64).ravel()
    if idx.size == 0:
        raise ConfigError("AP subset is empty")
    if idx.min() < 0 or idx.max() >= n:
        raise ConfigError(f"subset indices must lie in [0, {n}), got range "
                          f"[{idx.min()}, {idx.max()}]")
    if np.unique(idx).size != idx.size:
        raise ConfigError("subset contains duplicate indices")
    return idx


def _neighbor_indices(train_rss: np.ndarray, query_rss: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest training rows per query, ties by train index.

    Squared Euclidean via the expansion ||q||^2 - 2 q.t + ||t||^2; the stable
    argsort keeps equal distances in ascending index order.
    """
    n_train = train_rss.shape[0]
    n_query = query_rss.shape[0]
    train_sq = np.einsum("ij,ij->i", train_rss, train_rss)
    out = np.empty((n_query, k), dtype=np.int64)
    block = max(1, _BLOCK_ELEMENTS // max(1, n_train))
    for start in range(0, n_query, block):
        q = query_rss[start:start + block]
        d2 = q @ train_rss.T
        d2 *= -2.0
        d2 += train_sq[None, :]
        d2 += np.einsum("ij,ij->i", q, q)[:, None]
        for row in range(d2.shape[0]):
            order = np.argsort(d2[row], kind="stable")
            out[start + row] = order[:k]
    return out


def _vote_floors(neighbor_floors: np.ndarray) -> np.ndarray:
    """Majority floor per query; a tied vote falls back to the nearest neighbor."""
    n_query = neighbor_floors.shape[0]
    out = np.empty(n_query, dtype=np.int64)
    for row in range(n_query):
        floors = neighbor_floors[row]
        counts = np.bincount(floors)
        top = counts.max()
        if (counts == top).sum() == 1:
            out[row] = counts.argmax()
        else:
            out[row] = floors[0]
    return out


def predict(train: FingerprintDataset, query_rss: np.ndarray, subset,
            cfg: LocalizerConfig) -> PositionEstimate:
    """Locate a single query fingerprint; coordinates in the dataset frame."""
    cfg.validate()
    idx = _checked_subset(subset, train.n_aps)
    q = np.asarray(query_rss, dtype=np.float64).ravel()
    if q.shape[0] != train.n_aps:
        raise ConfigError(f"query has {q.shape[0]} entries for {train.n_aps} APs")
    if cfg.k_neighbors > train.n_samples:
        raise ConfigError(
            f"k_neighbors={cfg.k_neighbors} exceeds {train.n_samples} training samples"
        )
    neighbors = _neighbor_indices(train.rss[:, idx], q[None, idx], cfg.k_neighbors)[0]
    floor = _vote_floors(train.floor[neighbors][None, :])[0]
    return PositionEstimate(
        lat=float(train.latitude[neighbors].mean()),
        lon=float(train.longitude[neighbors].mean()),
        floor=int(floor),
    )


def error_3d(pred: PositionEstimate, truth: PositionEstimate,
             floor_height_m: float = DEFAULT_FLOOR_HEIGHT_M) -> float:
    """3D distance in meters, floors spaced floor_height_m apart."""
    dz = (pred.floor - truth.floor) * floor_height_m
    return math.sqrt((pred.lat - truth.lat) ** 2 + (pred.lon - truth.lon) ** 2 + dz * dz)


def evaluate(split: DatasetSplit, subset, cfg: LocalizerConfig) -> LocalizationReport:
    """Localize every test sample with the given AP subset; errors in meters."""
    cfg.validate()
    train, test = split.train, split.test
    idx = _checked_subset(subset, train.n_aps)
    if cfg.k_neighbors > train.n_samples:
        raise ConfigError(
            f"k_neighbors={cfg.k_neighbors} exceeds {train.n_samples} training samples"
        )
    neighbors = _neighbor_indices(train.rss[:, idx], test.rss[:, idx], cfg.k_neighbors)

    pred_lat = train.latitude[neighbors].mean(axis=1)
    pred_lon = train.longitude[neighbors].mean(axis=1)
    pred_floor = _vote_floors(train.floor[neighbors])

    transform = train.transform
    if transform is not None:
        pred_lat, pred_lon = transform.denormalize(pred_lat, pred_lon)
        true_lat, true_lon = transform.denormalize(test.latitude, test.longitude)
    else:
        true_lat, true_lon = test.latitude, test.longitude

    dz = (pred_floor - test.floor) * cfg.floor_height_m
    errors = np.sqrt((pred_lat - true_lat) ** 2 + (pred_lon - true_lon) ** 2 + dz * dz)
    hits = pred_floor == test.floor
    return LocalizationReport(
        per_query_error_m=errors,
        floor_hit=hits,
        mean_error_m=float(errors.mean()),
        median_error_m=float(np.median(errors)),
        p95_error_m=float(np.percentile(errors, 95)),
        floor_accuracy=float(hits.mean()),
        num_aps_used=int(idx.size),
        reduction_fraction=1.0 - idx.size / train.n_aps,
    )

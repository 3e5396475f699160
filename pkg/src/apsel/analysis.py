"""Per-AP importance scores and the pairwise redundancy matrix.

Importance comes in four flavors (entropy, variance, average, max of each
AP's RSS column); raw scores are min-max scaled to [0, 1] so the selection
objective can trade them off against redundancy, which is natively the
absolute Pearson correlation in [0, 1]. APs whose column carries no signal
are flagged inactive and excluded from the redundancy computation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dataset import FingerprintDataset
from .errors import ConfigError, DataError


class Metric(str, enum.Enum):
    ENTROPY = "entropy"
    VARIANCE = "variance"
    AVERAGE = "average"
    MAX = "max"


@dataclass(frozen=True)
class ImportanceVector:
    """Raw and normalized per-AP informativeness scores."""

    metric: Metric
    raw_scores: np.ndarray
    scores: np.ndarray
    active_mask: np.ndarray

    @property
    def n_aps(self) -> int:
        return self.raw_scores.shape[0]


@dataclass(frozen=True)
class RedundancyMatrix:
    """Symmetric |Pearson| matrix, zeroed outside the active AP set."""

    values: np.ndarray
    active_mask: np.ndarray

    @property
    def n_aps(self) -> int:
        return self.values.shape[0]


def importance(d: FingerprintDataset, metric: Metric | str) -> ImportanceVector:
    """Dispatch to the requested importance metric."""
    metric = Metric(metric)
    if metric is Metric.ENTROPY:
        return importance_entropy(d)
    if metric is Metric.VARIANCE:
        return importance_variance(d)
    if metric is Metric.AVERAGE:
        return importance_average(d)
    return importance_max(d)


def importance_entropy(d: FingerprintDataset) -> ImportanceVector:
    """Shannon entropy (bits) of each AP's empirical RSS value distribution.

    RSS values in this dataset family are integers, so every distinct value
    is its own bin; the not-detected substitute counts as an ordinary value
    (an AP seen at only a few spots is genuinely informative).
    """
    _require_samples(d, 1)
    m = d.n_samples
    raw = np.empty(d.n_aps, dtype=np.float64)
    for i in range(d.n_aps):
        _, counts = np.unique(d.rss[:, i], return_counts=True)
        p = counts / m
        raw[i] = -np.sum(p * np.log2(p)) + 0.0
    return _package(Metric.ENTROPY, raw, active_mask=raw > 0.0)


def importance_variance(d: FingerprintDataset) -> ImportanceVector:
    """Unbiased sample variance of each AP's RSS column."""
    _require_samples(d, 2)
    raw = d.rss.var(axis=0, ddof=1)
    return _package(Metric.VARIANCE, raw, active_mask=raw > 0.0)


def importance_average(d: FingerprintDataset) -> ImportanceVector:
    """Mean RSS of each AP; never-detected APs are inactive."""
    _require_samples(d, 1)
    raw = d.rss.mean(axis=0)
    return _package(Metric.AVERAGE, raw, active_mask=_detected_mask(d))


def importance_max(d: FingerprintDataset) -> ImportanceVector:
    """Peak RSS of each AP; never-detected APs are inactive."""
    _require_samples(d, 1)
    raw = d.rss.max(axis=0)
    return _package(Metric.MAX, raw, active_mask=_detected_mask(d))


def redundancy(d: FingerprintDataset, imp: ImportanceVector) -> RedundancyMatrix:
    """|Pearson correlation| between active AP columns over all samples.

    Rows and columns of inactive APs are zero. A zero-variance column inside
    the active set (possible under the average/max activity rule) yields 0/0
    Pearson; such pairs are defined as redundancy 0, while the diagonal is 1
    for every active AP. The result is exactly symmetric by construction.
    """
    if imp.n_aps != d.n_aps:
        raise ConfigError(
            f"importance has {imp.n_aps} entries for a dataset with {d.n_aps} APs"
        )
    n = d.n_aps
    active = np.flatnonzero(imp.active_mask)
    values = np.zeros((n, n), dtype=np.float64)
    if active.size:
        sub = d.rss[:, active]
        centered = sub - sub.mean(axis=0)
        sq_norms = np.einsum("ij,ij->j", centered, centered)
        degenerate = sq_norms == 0.0
        safe = np.where(degenerate, 1.0, sq_norms)
        gram = centered.T @ centered
        # one square root of the product, not a product of square roots:
        # perfectly correlated integer columns then divide out to exactly 1.0
        corr = np.abs(gram) / np.sqrt(np.outer(safe, safe))
        corr[degenerate, :] = 0.0
        corr[:, degenerate] = 0.0
        np.clip(corr, 0.0, 1.0, out=corr)
        # mirror the upper triangle so symmetry is bitwise, not approximate
        upper = np.triu(corr, k=1)
        corr = upper + upper.T
        block = np.ix_(active, active)
        values[block] = corr
        values[active, active] = 1.0
    return RedundancyMatrix(values=values, active_mask=imp.active_mask.copy())


def normalize_scores(raw: np.ndarray) -> np.ndarray:
    """Min-max scale to [0, 1]; an all-equal vector maps to all zeros."""
    raw = np.asarray(raw, dtype=np.float64)
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return np.zeros_like(raw)
    return np.clip((raw - lo) / (hi - lo), 0.0, 1.0)


def _package(metric: Metric, raw: np.ndarray, active_mask: np.ndarray) -> ImportanceVector:
    return ImportanceVector(
        metric=metric,
        raw_scores=raw,
        scores=normalize_scores(raw),
        active_mask=np.asarray(active_mask, dtype=bool),
    )


def _detected_mask(d: FingerprintDataset) -> np.ndarray:
    return np.any(d.rss != d.not_detected_value, axis=0)


def _require_samples(d: FingerprintDataset, minimum: int) -> None:
    if d.n_samples < minimum:
        raise DataError(f"metric needs at least {minimum} sample(s), dataset has {d.n_samples}")

"""WiFi fingerprint databases: CSV ingestion, label normalization, stratified splits.

The on-disk format follows the common indoor-positioning layout: one row per
measurement, AP columns named ``WAP001..WAPnnn`` (prefix configurable) holding
integer RSS in [-104, 0] dBm with 100 meaning "not detected", plus LONGITUDE,
LATITUDE and FLOOR label columns. Any other column is ignored.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .errors import ConfigError, DataError

RAW_RSS_MIN = -104.0
RAW_RSS_MAX = 0.0


@dataclass(frozen=True)
class IngestConfig:
    """How to read a fingerprint CSV."""

    ap_prefix: str = "WAP"
    sentinel: float = 100.0
    not_detected_value: float = -105.0
    longitude_column: str = "LONGITUDE"
    latitude_column: str = "LATITUDE"
    floor_column: str = "FLOOR"

    def validate(self) -> None:
        if not self.ap_prefix:
            raise ConfigError("ap_prefix must be a non-empty string")
        if not (self.not_detected_value <= RAW_RSS_MIN):
            raise ConfigError(
                "not_detected_value must be <= %.1f dBm so the RSS axis stays "
                "totally ordered (got %r)" % (RAW_RSS_MIN, self.not_detected_value)
            )

    def to_dict(self) -> dict:
        return {
            "ap_prefix": self.ap_prefix,
            "sentinel": self.sentinel,
            "not_detected_value": self.not_detected_value,
            "longitude_column": self.longitude_column,
            "latitude_column": self.latitude_column,
            "floor_column": self.floor_column,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "IngestConfig":
        return cls(**{k: doc[k] for k in cls.__dataclass_fields__ if k in doc})


@dataclass(frozen=True)
class CoordinateTransform:
    """Affine min-max transform between metric and [0, 1] label frames."""

    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def normalize(self, latitude, longitude):
        lat = (np.asarray(latitude, dtype=float) - self.lat_min) / (self.lat_max - self.lat_min)
        lon = (np.asarray(longitude, dtype=float) - self.lon_min) / (self.lon_max - self.lon_min)
        return lat, lon

    def denormalize(self, latitude, longitude):
        lat = np.asarray(latitude, dtype=float) * (self.lat_max - self.lat_min) + self.lat_min
        lon = np.asarray(longitude, dtype=float) * (self.lon_max - self.lon_min) + self.lon_min
        return lat, lon

    def to_dict(self) -> dict:
        return {
            "lat_min": self.lat_min,
            "lat_max": self.lat_max,
            "lon_min": self.lon_min,
            "lon_max": self.lon_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CoordinateTransform":
        return cls(
            lat_min=float(d["lat_min"]),
            lat_max=float(d["lat_max"]),
            lon_min=float(d["lon_min"]),
            lon_max=float(d["lon_max"]),
        )


@dataclass
class FingerprintDataset:
    """RSS matrix (n_samples x n_aps) with 3D position labels.

    ``rss`` holds dBm values after sentinel substitution, so every entry lies
    in [not_detected_value, 0]. ``transform`` is present once labels have been
    normalized and maps them back to meters.
    """

    rss: np.ndarray
    latitude: np.ndarray
    longitude: np.ndarray
    floor: np.ndarray
    ap_ids: list[str]
    not_detected_value: float = -105.0
    transform: CoordinateTransform | None = None

    def __post_init__(self):
        self.rss = np.ascontiguousarray(np.asarray(self.rss, dtype=np.float64))
        if self.rss.ndim != 2:
            raise DataError("rss must be a 2-D matrix")
        self.latitude = np.asarray(self.latitude, dtype=np.float64)
        self.longitude = np.asarray(self.longitude, dtype=np.float64)
        self.floor = np.asarray(self.floor, dtype=np.int64)
        m, n = self.rss.shape
        for name, vec in (("latitude", self.latitude), ("longitude", self.longitude), ("floor", self.floor)):
            if vec.shape != (m,):
                raise DataError(f"{name} length {vec.shape} does not match {m} samples")
        if len(self.ap_ids) != n:
            raise DataError(f"{len(self.ap_ids)} ap_ids for {n} AP columns")
        if len(set(self.ap_ids)) != n:
            raise DataError("ap_ids must be unique")
        if np.any(self.floor < 0):
            raise DataError("floor indices must be non-negative")
        if self.rss.size and (self.rss.min() < self.not_detected_value or self.rss.max() > RAW_RSS_MAX):
            raise DataError(
                "rss values must lie in [%g, %g] after sentinel substitution"
                % (self.not_detected_value, RAW_RSS_MAX)
            )

    @property
    def n_samples(self) -> int:
        return self.rss.shape[0]

    @property
    def n_aps(self) -> int:
        return self.rss.shape[1]

    def take(self, indices: np.ndarray) -> "FingerprintDataset":
        """Row subset preserving metadata (used by split)."""
        idx = np.asarray(indices, dtype=np.int64)
        return FingerprintDataset(
            rss=self.rss[idx],
            latitude=self.latitude[idx],
            longitude=self.longitude[idx],
            floor=self.floor[idx],
            ap_ids=list(self.ap_ids),
            not_detected_value=self.not_detected_value,
            transform=self.transform,
        )


@dataclass(frozen=True)
class DatasetSplit:
    train: FingerprintDataset
    test: FingerprintDataset
    seed: int


def load_csv(path: str | os.PathLike, config: IngestConfig | None = None) -> FingerprintDataset:
    """Read one fingerprint CSV, substituting the not-detected sentinel.

    Raises
    ------
    DataError
        Missing file, empty file, missing required columns, a non-numeric
        cell (reported with row and column), or RSS outside
        [-104, 0] ∪ {sentinel}.
    """
    config = config or IngestConfig()
    config.validate()
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise DataError(f"dataset file not found: {path}") from None
    except pd.errors.EmptyDataError:
        raise DataError(f"empty dataset file: {path}") from None
    except pd.errors.ParserError as exc:
        raise DataError(f"cannot parse {path}: {exc}") from None

    ap_cols = [c for c in frame.columns if c.startswith(config.ap_prefix)]
    missing = [
        c
        for c in (config.longitude_column, config.latitude_column, config.floor_column)
        if c not in frame.columns
    ]
    if not ap_cols or missing:
        problems = []
        if not ap_cols:
            problems.append(f"no AP columns with prefix {config.ap_prefix!r}")
        if missing:
            problems.append(f"missing columns {missing}")
        raise DataError(f"schema error in {path}: " + "; ".join(problems))
    if len(frame) == 0:
        raise DataError(f"empty dataset (header only): {path}")

    rss = _numeric_block(frame, ap_cols, path)
    if np.isnan(rss).any():
        r, c = np.argwhere(np.isnan(rss))[0]
        raise DataError(
            f"missing value at data row {r}, column {ap_cols[c]} in {path}"
        )
    bad = ~(
        (rss == config.sentinel)
        | ((rss >= RAW_RSS_MIN) & (rss <= RAW_RSS_MAX))
    )
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise DataError(
            f"RSS value {rss[r, c]!r} out of range at data row {r}, "
            f"column {ap_cols[c]} in {path} (expected [-104, 0] or sentinel "
            f"{config.sentinel:g})"
        )
    rss[rss == config.sentinel] = config.not_detected_value

    label_cols = [config.longitude_column, config.latitude_column, config.floor_column]
    labels = _numeric_block(frame, label_cols, path)
    if np.isnan(labels).any():
        r, c = np.argwhere(np.isnan(labels))[0]
        raise DataError(
            f"missing value at data row {r}, column {label_cols[c]} in {path}"
        )
    lon, lat, floor_f = labels[:, 0], labels[:, 1], labels[:, 2]
    if not np.all(floor_f == np.floor(floor_f)):
        r = int(np.flatnonzero(floor_f != np.floor(floor_f))[0])
        raise DataError(f"non-integer floor {floor_f[r]!r} at data row {r} in {path}")

    return FingerprintDataset(
        rss=rss,
        latitude=lat,
        longitude=lon,
        floor=floor_f.astype(np.int64),
        ap_ids=ap_cols,
        not_detected_value=config.not_detected_value,
    )


def _numeric_block(frame: pd.DataFrame, columns: list[str], path) -> np.ndarray:
    """Columns as float64, locating the first non-numeric cell on failure."""
    sub = frame[columns]
    try:
        return sub.to_numpy(dtype=np.float64, copy=True)
    except (TypeError, ValueError):
        pass
    for col in columns:
        coerced = pd.to_numeric(sub[col], errors="coerce")
        bad = coerced.isna().to_numpy()
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise DataError(
                f"non-numeric value {sub[col].iloc[row]!r} at data row {row}, "
                f"column {col} in {path}"
            )
    # Fallthrough: pandas refused the fast path but per-column coercion
    # succeeded (mixed extension dtypes); assemble column-wise.
    return np.column_stack(
        [pd.to_numeric(sub[c], errors="raise").to_numpy(dtype=np.float64) for c in columns]
    )


def concat(first: FingerprintDataset, second: FingerprintDataset) -> FingerprintDataset:
    """Row-wise concatenation of two compatible datasets."""
    if first.ap_ids != second.ap_ids:
        raise DataError("cannot concatenate datasets with different AP columns")
    if first.not_detected_value != second.not_detected_value:
        raise DataError("cannot concatenate datasets with different sentinel substitutions")
    if first.transform != second.transform:
        raise DataError("cannot concatenate datasets with different label transforms")
    return FingerprintDataset(
        rss=np.vstack([first.rss, second.rss]),
        latitude=np.concatenate([first.latitude, second.latitude]),
        longitude=np.concatenate([first.longitude, second.longitude]),
        floor=np.concatenate([first.floor, second.floor]),
        ap_ids=list(first.ap_ids),
        not_detected_value=first.not_detected_value,
        transform=first.transform,
    )


def normalize_labels(d: FingerprintDataset) -> FingerprintDataset:
    """Min-max scale latitude/longitude to [0, 1], keeping the inverse transform.

    A dataset that already carries a transform is returned unchanged
    (normalization is idempotent). Errors are later reported in meters by
    applying the stored transform in reverse.
    """
    if d.transform is not None:
        return replace(d)
    if d.n_samples < 2:
        raise DataError("normalization needs at least 2 samples")
    lat_min, lat_max = float(d.latitude.min()), float(d.latitude.max())
    lon_min, lon_max = float(d.longitude.min()), float(d.longitude.max())
    if lat_max == lat_min:
        raise DataError("degenerate latitude range: all values equal, scaling undefined")
    if lon_max == lon_min:
        raise DataError("degenerate longitude range: all values equal, scaling undefined")
    transform = CoordinateTransform(lat_min, lat_max, lon_min, lon_max)
    lat, lon = transform.normalize(d.latitude, d.longitude)
    return FingerprintDataset(
        rss=d.rss,
        latitude=lat,
        longitude=lon,
        floor=d.floor,
        ap_ids=list(d.ap_ids),
        not_detected_value=d.not_detected_value,
        transform=transform,
    )


def split(d: FingerprintDataset, test_fraction: float, seed: int) -> DatasetSplit:
    """Deterministic floor-stratified train/test split."""
    if not (0.0 < test_fraction < 1.0):
        raise ConfigError(f"test_fraction must be in (0, 1), got {test_fraction!r}")
    rng = np.random.default_rng(seed)
    test_parts: list[np.ndarray] = []
    train_parts: list[np.ndarray] = []
    for level in np.unique(d.floor):
        members = np.flatnonzero(d.floor == level)
        if members.size < 2:
            raise DataError(
                f"floor {level} has {members.size} sample(s); stratified split needs >= 2"
            )
        shuffled = rng.permutation(members)
        # round to nearest, then keep at least one sample on each side
        n_test = int(round(members.size * test_fraction))
        n_test = min(max(n_test, 0), members.size - 1)
        test_parts.append(shuffled[:n_test])
        train_parts.append(shuffled[n_test:])
    test_idx = np.sort(np.concatenate(test_parts)).astype(np.int64)
    train_idx = np.sort(np.concatenate(train_parts)).astype(np.int64)
    return DatasetSplit(train=d.take(train_idx), test=d.take(test_idx), seed=seed)


def dump(d: FingerprintDataset, csv_path: str | os.PathLike) -> tuple[str, str]:
    """Write the canonical CSV dump plus its JSON sidecar.

    The CSV uses the ingest schema (sentinel restored in AP columns), so
    ingesting the dump with the same IngestConfig reproduces (rss, labels)
    exactly. The sidecar records the normalization transform and the
    substitution value.
    """
    csv_path = os.fspath(csv_path)
    rss = d.rss.copy()
    rss[rss == d.not_detected_value] = 100.0
    frame = pd.DataFrame(rss, columns=d.ap_ids)
    frame["LONGITUDE"] = d.longitude
    frame["LATITUDE"] = d.latitude
    frame["FLOOR"] = d.floor
    frame.to_csv(csv_path, index=False)
    sidecar = {
        "lat_min": d.transform.lat_min if d.transform else None,
        "lat_max": d.transform.lat_max if d.transform else None,
        "lon_min": d.transform.lon_min if d.transform else None,
        "lon_max": d.transform.lon_max if d.transform else None,
        "not_detected_value": d.not_detected_value,
    }
    sidecar_path = sidecar_path_for(csv_path)
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, sidecar_path


def sidecar_path_for(csv_path: str) -> str:
    return os.fspath(csv_path) + ".meta.json"


def load_dump(csv_path: str | os.PathLike, config: IngestConfig | None = None) -> FingerprintDataset:
    """Re-ingest a canonical dump, restoring the transform from its sidecar."""
    sidecar_path = sidecar_path_for(os.fspath(csv_path))
    config = config or IngestConfig()
    if os.path.exists(sidecar_path):
        with open(sidecar_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        nd = meta.get("not_detected_value")
        if nd is not None and not math.isclose(nd, config.not_detected_value):
            config = replace(config, not_detected_value=float(nd))
        d = load_csv(csv_path, config)
        if meta.get("lat_min") is not None:
            d.transform = CoordinateTransform.from_dict(meta)
        return d
    return load_csv(csv_path, config)


def load_many(paths: list[str], config: IngestConfig | None = None) -> FingerprintDataset:
    """Ingest and concatenate several CSVs sharing one schema."""
    if not paths:
        raise ConfigError("at least one dataset path is required")
    parts = [load_csv(p, config) for p in paths]
    merged = parts[0]
    for part in parts[1:]:
        merged = concat(merged, part)
    return merged

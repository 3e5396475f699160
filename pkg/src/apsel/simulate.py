"""Synthetic multi-building WiFi fingerprint corpus with the standard schema.

Generates radio-map CSVs shaped like the public campus fingerprint corpora:
one integer RSS column per AP (100 = not detected), then LONGITUDE,
LATITUDE, FLOOR, BUILDINGID.

The radio environment mirrors what makes real corpora interesting for AP
subset selection:

- A backbone of high-power beacons, one per (building, floor) cell, covers
  whole floors. These columns carry essentially all of the positional
  information, and cross-floor leakage makes same-building pairs correlated.
- Each beacon's router also broadcasts secondary networks at sharply reduced
  power. Their columns are heard in a pocket around the host and track the
  host's signal wherever both appear: redundant near-duplicates rather than
  new information, exactly the columns a redundancy penalty should reject.
- The rest of the column union is a dormant tail, networks carried in the
  schema but transmitting far below the survey's detection threshold, so
  their columns never leave the not-detected sentinel.
- Signal strength follows log-distance path loss with a per-meter wall term,
  per-floor slab attenuation, a building penetration penalty, and shadowing
  drawn once on a coarse spatial lattice and interpolated, so the fingerprint
  texture varies over ~10 m and is identical across visits to the same spot.
  Secondary networks reuse the host router's shadowing field.
- Each measurement adds a per-device bias shared across its columns,
  per-reading noise, and a small scan dropout.

The generator is deterministic for a given configuration, and `ensure_corpus`
caches the rendered CSVs keyed by a content digest of the configuration, so
repeated experiment runs pay the generation cost once.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

TRAINING_FILENAME = "trainingData.csv"
VALIDATION_FILENAME = "validationData.csv"
CONFIG_FILENAME = "config.json"

SENTINEL = 100


@dataclass(frozen=True)
class SimulationConfig:
    n_aps: int = 520
    n_beacons: int = 20
    n_siblings: int = 10
    n_training: int = 19937
    n_validation: int = 1111
    n_buildings: int = 4
    floors_per_building: int = 5
    building_length_m: float = 110.0
    building_width_m: float = 50.0
    building_gap_m: float = 25.0
    grid_spacing_m: float = 5.0
    floor_height_m: float = 3.0
    beacon_tx_dbm: float = -31.0
    beacon_tx_jitter_db: float = 1.0
    beacon_edge_boost_db: float = 6.5
    sibling_offset_db: float = 34.0
    sibling_jitter_db: float = 2.0
    dormant_tx_dbm: float = -160.0
    dormant_tx_spread_db: float = 5.0
    path_loss_exponent: float = 3.0
    wall_loss_db_per_m: float = 0.2
    floor_attenuation_db: float = 26.0
    building_penetration_db: float = 30.0
    shadow_sigma_db: float = 7.0
    shadow_grid_m: float = 10.0
    device_bias_sigma_db: float = 2.0
    measurement_sigma_db: float = 2.5
    dropout_probability: float = 0.02
    detection_threshold_dbm: float = -104.0
    rss_ceiling_dbm: float = -20.0
    lon_origin: float = -7690.0
    lat_origin: float = 4864745.0
    seed: int = 7

    @property
    def n_cells(self) -> int:
        return self.n_buildings * self.floors_per_building

    @property
    def n_dormant(self) -> int:
        return self.n_aps - self.n_beacons - self.n_siblings

    def validate(self) -> None:
        if self.n_beacons < 1:
            raise ValueError("need at least one beacon column")
        if self.n_beacons + self.n_siblings > self.n_aps:
            raise ValueError("beacon and sibling tiers cannot exceed n_aps")
        if self.n_buildings < 1 or self.floors_per_building < 1:
            raise ValueError("need at least one building and one floor")
        if self.n_training < 1 or self.n_validation < 1:
            raise ValueError("row counts must be positive")
        if min(self.grid_spacing_m, self.shadow_grid_m) <= 0:
            raise ValueError("grid spacings must be positive")
        if not 0.0 <= self.dropout_probability < 1.0:
            raise ValueError("dropout_probability must be in [0, 1)")
        if self.rss_ceiling_dbm <= self.detection_threshold_dbm:
            raise ValueError("rss ceiling must exceed the detection threshold")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class CorpusPaths:
    training: Path
    validation: Path


def _grid_points(cfg: SimulationConfig) -> tuple[np.ndarray, ...]:
    """Reference-point coordinates for every (building, floor, x, y) cell."""
    xs = np.arange(0.0, cfg.building_length_m + 1e-9, cfg.grid_spacing_m)
    ys = np.arange(0.0, cfg.building_width_m + 1e-9, cfg.grid_spacing_m)
    b, f, xi, yi = np.meshgrid(
        np.arange(cfg.n_buildings), np.arange(cfg.floors_per_building),
        np.arange(xs.size), np.arange(ys.size), indexing="ij",
    )
    b, f = b.ravel(), f.ravel()
    return b.astype(np.int64), f.astype(np.int64), xs[xi.ravel()], ys[yi.ravel()]


def _place_radios(cfg: SimulationConfig, rng: np.random.Generator):
    """Per-column radio placement: building, floor, x, y, tx, shadow source.

    Beacons are dealt round-robin over the (building, floor) cells and sit
    near the cell centre. Sibling networks are assigned round-robin to host
    beacons and inherit the host's position; dormant radios land uniformly
    inside floors with transmit power far below detectability. Column order
    is shuffled afterwards so no tier owns a contiguous block of WAP ids.

    The shadow source vector maps every column to the column whose shadowing
    field it experiences: itself, except siblings, which reuse their host's.
    """
    n = cfg.n_aps
    nb, ns = cfg.n_beacons, cfg.n_siblings
    building = rng.integers(0, cfg.n_buildings, n)
    floor = rng.integers(0, cfg.floors_per_building, n)
    x = rng.uniform(2.0, cfg.building_length_m - 2.0, n)
    y = rng.uniform(2.0, cfg.building_width_m - 2.0, n)
    tx = np.empty(n)

    cell = np.arange(nb)
    building[:nb] = cell % cfg.n_buildings
    floor[:nb] = (cell // cfg.n_buildings) % cfg.floors_per_building
    x[:nb] = cfg.building_length_m * 0.5 + rng.uniform(-14.0, 14.0, nb)
    y[:nb] = cfg.building_width_m * rng.uniform(0.35, 0.65, nb)
    tx[:nb] = cfg.beacon_tx_dbm + rng.uniform(
        -cfg.beacon_tx_jitter_db, cfg.beacon_tx_jitter_db, nb)
    # outermost floors lack one slab neighbor's bleed-through; the boost keeps
    # every beacon's total coverage, and so its entropy, roughly uniform
    edge = (floor[:nb] == 0) | (floor[:nb] == cfg.floors_per_building - 1)
    tx[:nb] += cfg.beacon_edge_boost_db * edge

    host = np.arange(ns) % nb
    building[nb:nb + ns] = building[host]
    floor[nb:nb + ns] = floor[host]
    x[nb:nb + ns] = x[host]
    y[nb:nb + ns] = y[host]
    tx[nb:nb + ns] = tx[host] - cfg.sibling_offset_db + rng.uniform(
        -cfg.sibling_jitter_db, cfg.sibling_jitter_db, ns)

    tx[nb + ns:] = np.clip(
        rng.normal(cfg.dormant_tx_dbm, cfg.dormant_tx_spread_db, cfg.n_dormant),
        cfg.dormant_tx_dbm - 8.0, cfg.dormant_tx_dbm + 8.0)

    shadow_source = np.arange(n, dtype=np.int64)
    shadow_source[nb:nb + ns] = host

    order = rng.permutation(n)
    inverse = np.argsort(order)
    return (building[order].astype(np.int64), floor[order].astype(np.int64),
            x[order], y[order], tx[order], inverse[shadow_source[order]])


def _shadow_lattice(cfg: SimulationConfig, rng: np.random.Generator) -> np.ndarray:
    """Frozen shadowing on coarse lattice nodes, per (cell, node, radio)."""
    nx = int(np.ceil(cfg.building_length_m / cfg.shadow_grid_m)) + 2
    ny = int(np.ceil(cfg.building_width_m / cfg.shadow_grid_m)) + 2
    shape = (cfg.n_cells, nx, ny, cfg.n_aps)
    return rng.normal(0.0, cfg.shadow_sigma_db, shape).astype(np.float32)


def _shadow_at(cfg: SimulationConfig, lattice: np.ndarray, building, floor,
               x, y) -> np.ndarray:
    """Bilinear shadowing interpolation at within-building positions."""
    cell = building * cfg.floors_per_building + floor
    gx = x / cfg.shadow_grid_m
    gy = y / cfg.shadow_grid_m
    ix = np.floor(gx).astype(np.int64)
    iy = np.floor(gy).astype(np.int64)
    fx = (gx - ix)[:, None]
    fy = (gy - iy)[:, None]
    low = (lattice[cell, ix, iy, :] * (1.0 - fx)
           + lattice[cell, ix + 1, iy, :] * fx)
    high = (lattice[cell, ix, iy + 1, :] * (1.0 - fx)
            + lattice[cell, ix + 1, iy + 1, :] * fx)
    return (low * (1.0 - fy) + high * fy).astype(np.float64)


def _radio_rss(cfg: SimulationConfig, pt_building, pt_floor, pt_x, pt_y,
               rd_building, rd_floor, rd_x, rd_y, rd_tx) -> np.ndarray:
    """Noise-free mean RSS for every (point, radio) pair."""
    span = cfg.building_length_m + cfg.building_gap_m
    dx = (pt_building[:, None] - rd_building[None, :]) * span
    dx += pt_x[:, None] - rd_x[None, :]
    dy = pt_y[:, None] - rd_y[None, :]
    dxy = np.hypot(dx, dy)
    dz = (pt_floor[:, None] * cfg.floor_height_m + 1.2) - (
        rd_floor[None, :] * cfg.floor_height_m + 2.5)
    d = np.sqrt(dxy * dxy + dz * dz)
    np.maximum(d, 1.0, out=d)
    rss = rd_tx[None, :] - 10.0 * cfg.path_loss_exponent * np.log10(d)
    rss -= cfg.wall_loss_db_per_m * dxy
    rss -= cfg.floor_attenuation_db * np.abs(pt_floor[:, None] - rd_floor[None, :])
    rss -= cfg.building_penetration_db * (pt_building[:, None] != rd_building[None, :])
    return rss


def _observe(cfg: SimulationConfig, point_col_rss: np.ndarray,
             rng: np.random.Generator) -> np.ndarray:
    """Integer RSS observations with device bias, noise, dropout, sentinel."""
    n = point_col_rss.shape[0]
    rss = point_col_rss + rng.normal(0.0, cfg.device_bias_sigma_db, (n, 1))
    rss += rng.normal(0.0, cfg.measurement_sigma_db, rss.shape)
    detected = rss >= cfg.detection_threshold_dbm
    detected &= rng.random(rss.shape) >= cfg.dropout_probability
    values = np.rint(np.clip(rss, cfg.detection_threshold_dbm, cfg.rss_ceiling_dbm))
    return np.where(detected, values, float(SENTINEL)).astype(np.int64)


def generate(cfg: SimulationConfig) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Render the training and validation tables."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    rd_building, rd_floor, rd_x, rd_y, rd_tx, shadow_source = _place_radios(cfg, rng)
    # indexing the radio axis by the shadow source makes each sibling column
    # sample the identical frozen field as its host
    lattice = _shadow_lattice(cfg, rng)[:, :, :, shadow_source]

    pb, pf, px, py = _grid_points(cfg)
    base = _radio_rss(cfg, pb, pf, px, py, rd_building, rd_floor, rd_x, rd_y,
                      rd_tx)
    base += _shadow_at(cfg, lattice, pb, pf, px, py)

    pick = rng.integers(0, pb.size, cfg.n_training)
    train_rss = _observe(cfg, base[pick], rng)
    train = _as_frame(cfg, train_rss, pb[pick], pf[pick], px[pick], py[pick])

    # validation probes sit off-grid but share the frozen shadowing field
    vb = rng.integers(0, cfg.n_buildings, cfg.n_validation)
    vf = rng.integers(0, cfg.floors_per_building, cfg.n_validation)
    vx = rng.uniform(1.0, cfg.building_length_m - 1.0, cfg.n_validation)
    vy = rng.uniform(1.0, cfg.building_width_m - 1.0, cfg.n_validation)
    v_base = _radio_rss(cfg, vb, vf, vx, vy, rd_building, rd_floor, rd_x, rd_y,
                        rd_tx)
    v_base += _shadow_at(cfg, lattice, vb, vf, vx, vy)
    val_rss = _observe(cfg, v_base, rng)
    val = _as_frame(cfg, val_rss, vb, vf, vx, vy)
    return train, val


def _as_frame(cfg: SimulationConfig, rss, building, floor, x, y) -> pd.DataFrame:
    width = len(str(cfg.n_aps))
    columns = [f"WAP{i + 1:0{max(3, width)}d}" for i in range(cfg.n_aps)]
    frame = pd.DataFrame(rss, columns=columns)
    span = cfg.building_length_m + cfg.building_gap_m
    frame["LONGITUDE"] = np.round(cfg.lon_origin + building * span + x, 6)
    frame["LATITUDE"] = np.round(cfg.lat_origin + y, 6)
    frame["FLOOR"] = floor
    frame["BUILDINGID"] = building
    return frame


def write_corpus(out_dir: str | os.PathLike, cfg: SimulationConfig) -> CorpusPaths:
    """Generate and write both CSVs plus the configuration record."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, val = generate(cfg)
    train_path = out / TRAINING_FILENAME
    val_path = out / VALIDATION_FILENAME
    train.to_csv(train_path, index=False)
    val.to_csv(val_path, index=False)
    with open(out / CONFIG_FILENAME, "w", encoding="utf-8") as fh:
        json.dump({"digest": cfg.digest(), "config": asdict(cfg)}, fh, indent=2)
        fh.write("\n")
    return CorpusPaths(training=train_path, validation=val_path)


def ensure_corpus(cache_root: str | os.PathLike,
                  cfg: SimulationConfig | None = None) -> CorpusPaths:
    """Return cached corpus paths, generating them on first use."""
    cfg = cfg or SimulationConfig()
    root = Path(cache_root) / f"synthetic-{cfg.digest()}"
    train_path = root / TRAINING_FILENAME
    val_path = root / VALIDATION_FILENAME
    record = root / CONFIG_FILENAME
    if train_path.exists() and val_path.exists() and record.exists():
        with open(record, "r", encoding="utf-8") as fh:
            if json.load(fh).get("digest") == cfg.digest():
                return CorpusPaths(training=train_path, validation=val_path)
    return write_corpus(root, cfg)


def small_config(seed: int = 7) -> SimulationConfig:
    """Down-scaled corpus for fast tests."""
    return replace(
        SimulationConfig(),
        n_aps=60,
        n_beacons=6,
        n_siblings=3,
        n_training=900,
        n_validation=120,
        n_buildings=2,
        floors_per_building=3,
        building_length_m=50.0,
        building_width_m=30.0,
        building_gap_m=15.0,
        grid_spacing_m=6.0,
        seed=seed,
    )

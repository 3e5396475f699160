"""Annealing samplers over the selection model, plus time-to-solution stats.

Two stochastic samplers share one contract: a configurable number of
independent reads, each a fresh Monte Carlo trajectory, aggregated into a
`SampleSet` whose energies are re-evaluated against the model rather than
trusted from the sampling loop.

- `sa_sample`: single-bit-flip Metropolis with a geometric inverse-temperature
  ramp per read.
- `sqa_sample`: path-integral Monte Carlo over Trotter replicas with a
  linearly decaying transverse field, a classical emulation of annealing
  through quantum fluctuations.

Both are bit-reproducible for a fixed seed regardless of thread count; see
`_kernels` for the per-read PRNG stream construction.

Variables listed in the model's params["clamped"] are pinned to zero: the
Monte Carlo runs on the submodel over the remaining variables and the pinned
zeros are stitched back into every returned bitvector. Reported energies are
always re-evaluated against the full model.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import _kernels, qubo
from .errors import ConfigError

DEFAULT_NUM_READS = 1000
DEFAULT_NUM_SWEEPS = 1000
DEFAULT_BETA = 10.0
DEFAULT_GAMMA = 1.0
DEFAULT_TROTTER_SLICES = 8
DEFAULT_BETA_HOT = 0.1
# Fraction of the initial transverse field still applied at the final sweep.
# Kept strictly positive so the slice coupling stays finite.
DEFAULT_GAMMA_END_FRACTION = 0.01

ENERGY_ATOL = 1e-9


class Sampler(str, Enum):
    SA = "sa"
    SQA = "sqa"
    EXACT = "exact"
    ALL_APS = "all-aps"


@dataclass(frozen=True)
class AnnealConfig:
    num_reads: int = DEFAULT_NUM_READS
    num_sweeps: int = DEFAULT_NUM_SWEEPS
    beta: float = DEFAULT_BETA
    gamma: float = DEFAULT_GAMMA
    trotter_slices: int = DEFAULT_TROTTER_SLICES
    seed: int = 0
    beta_hot: float = DEFAULT_BETA_HOT
    gamma_end_fraction: float = DEFAULT_GAMMA_END_FRACTION

    def validate(self) -> "AnnealConfig":
        if self.num_reads < 1:
            raise ConfigError(f"num_reads must be >= 1, got {self.num_reads!r}")
        if self.num_sweeps < 1:
            raise ConfigError(f"num_sweeps must be >= 1, got {self.num_sweeps!r}")
        for name in ("beta", "gamma", "beta_hot"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ConfigError(f"{name} must be finite and positive, got {v!r}")
        if self.trotter_slices < 2:
            raise ConfigError(f"trotter_slices must be >= 2, got {self.trotter_slices!r}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed!r}")
        if not (0.0 < self.gamma_end_fraction <= 1.0):
            raise ConfigError(
                f"gamma_end_fraction must be in (0, 1], got {self.gamma_end_fraction!r}"
            )
        return self

    def with_seed(self, seed: int) -> "AnnealConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        return {
            "num_reads": self.num_reads,
            "num_sweeps": self.num_sweeps,
            "beta": self.beta,
            "gamma": self.gamma,
            "trotter_slices": self.trotter_slices,
            "seed": self.seed,
            "beta_hot": self.beta_hot,
            "gamma_end_fraction": self.gamma_end_fraction,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AnnealConfig":
        return cls(**{k: doc[k] for k in cls.__dataclass_fields__ if k in doc})


@dataclass(frozen=True)
class SampleRow:
    x: str
    energy: float
    occurrences: int

    @property
    def bits(self) -> np.ndarray:
        return np.frombuffer(self.x.encode("ascii"), dtype=np.uint8) - ord("0")


@dataclass
class SampleSet:
    """Aggregated reads, ascending by energy (ties by bitstring)."""

    rows: list[SampleRow]
    timing: dict
    config: dict

    @property
    def num_reads(self) -> int:
        return sum(r.occurrences for r in self.rows)

    @property
    def best(self) -> SampleRow:
        return self.rows[0]

    def digest(self) -> str:
        """Content hash over rows and config; timing never participates."""
        doc = {
            "config": self.config,
            "rows": [[r.x, r.energy, r.occurrences] for r in self.rows],
        }
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def to_json_dict(self) -> dict:
        return {
            "rows": [
                {"x": r.x, "energy": r.energy, "occurrences": r.occurrences}
                for r in self.rows
            ],
            "timing": dict(self.timing),
            "config": dict(self.config),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SampleSet":
        rows = [
            SampleRow(x=str(e["x"]), energy=float(e["energy"]),
                      occurrences=int(e["occurrences"]))
            for e in doc["rows"]
        ]
        return cls(rows=rows, timing=dict(doc.get("timing", {})),
                   config=dict(doc.get("config", {})))

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "SampleSet":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass
class SelectionResult:
    selected: np.ndarray
    achieved_k: int
    best_energy: float
    sampler: Sampler
    config: AnnealConfig | None
    tts_seconds: float | None
    bitvector: np.ndarray | None = None
    spectrum: np.ndarray | None = None
    sampleset: SampleSet | None = None

    def to_json_dict(self) -> dict:
        return {
            "selected": [int(i) for i in self.selected],
            "achieved_k": int(self.achieved_k),
            "best_energy": float(self.best_energy),
            "sampler": self.sampler.value,
            "tts_seconds": None if self.tts_seconds is None else float(self.tts_seconds),
            "config": None if self.config is None else self.config.to_dict(),
            "x": None if self.bitvector is None else "".join(str(int(b)) for b in self.bitvector),
        }

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")


def slice_coupling(beta: float, gamma: float, trotter_slices: int) -> float:
    """Ferromagnetic coupling between adjacent replicas at field strength gamma."""
    arg = beta * gamma / trotter_slices
    return math.log(1.0 / math.tanh(arg)) / (2.0 * beta)


def _beta_schedule(cfg: AnnealConfig) -> np.ndarray:
    return np.geomspace(min(cfg.beta_hot, cfg.beta), cfg.beta, cfg.num_sweeps)


def _jperp_schedule(cfg: AnnealConfig) -> np.ndarray:
    gammas = np.linspace(cfg.gamma, cfg.gamma * cfg.gamma_end_fraction, cfg.num_sweeps)
    arg = cfg.beta * gammas / cfg.trotter_slices
    return np.log(1.0 / np.tanh(arg)) / (2.0 * cfg.beta)


def apply_thread_env() -> int:
    """Honor APSEL_THREADS (capped at the numba thread pool size)."""
    import numba

    raw = os.environ.get("APSEL_THREADS")
    if raw is None or not raw.strip():
        return numba.get_num_threads()
    try:
        want = int(raw)
    except ValueError:
        raise ConfigError(f"APSEL_THREADS must be an integer, got {raw!r}") from None
    if want < 1:
        raise ConfigError(f"APSEL_THREADS must be >= 1, got {want}")
    granted = min(want, numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(granted)
    return granted


_WARMED = False


def warm_up() -> None:
    """Compile the kernels on a toy model so timings exclude JIT cost."""
    global _WARMED
    if _WARMED:
        return
    linear = np.array([-1.0, 0.5])
    w = np.zeros((2, 2))
    out = np.empty((1, 2), dtype=np.uint8)
    _kernels.sa_kernel(linear, w, np.array([1.0]), np.uint64(0), out)
    _kernels.sqa_kernel(linear / 2.0, w, 1.0, np.array([0.1]), 2, np.uint64(0), out)
    _kernels.rng_stream(np.uint64(0), 0, 1)
    _WARMED = True


def _config_dict(sampler: Sampler, m: qubo.QuboModel, cfg: AnnealConfig) -> dict:
    doc = {"sampler": sampler.value, "n": m.n}
    doc.update(cfg.to_dict())
    doc["model_params"] = dict(m.params)
    return doc


def _free_submodel(m: qubo.QuboModel) -> tuple[np.ndarray, qubo.QuboModel]:
    """Restrict the model to its non-clamped variables.

    Pinning x_c = 0 deletes every term that touches a clamped variable, so the
    submodel's energy equals the full model's energy on any bitvector whose
    clamped entries are zero.
    """
    clamped = m.clamped_indices
    if clamped.size == 0:
        return np.arange(m.n, dtype=np.int64), m
    mask = np.ones(m.n, dtype=bool)
    mask[clamped] = False
    free = np.flatnonzero(mask).astype(np.int64)
    if free.size == 0:
        raise ConfigError("every variable is clamped; nothing to optimize")
    pos = np.full(m.n, -1, dtype=np.int64)
    pos[free] = np.arange(free.size)
    quadratic = {
        (int(pos[i]), int(pos[j])): v
        for (i, j), v in m.quadratic.items()
        if pos[i] >= 0 and pos[j] >= 0
    }
    sub = qubo.QuboModel(linear=m.linear[free].copy(), quadratic=quadratic,
                         offset=m.offset)
    return free, sub


def _scatter(free: np.ndarray, sub_states: np.ndarray, n: int) -> np.ndarray:
    if free.size == n:
        return sub_states
    out = np.zeros((sub_states.shape[0], n), dtype=np.uint8)
    out[:, free] = sub_states
    return out


def _collect(m: qubo.QuboModel, states: np.ndarray, total_seconds: float,
             config: dict) -> SampleSet:
    num_reads = states.shape[0]
    unique, counts = np.unique(states, axis=0, return_counts=True)
    energies = np.atleast_1d(qubo.energy(m, unique.astype(np.float64)))
    order = np.argsort(energies, kind="stable")  # unique() is ascending-lex already
    rows = [
        SampleRow(
            x="".join("1" if b else "0" for b in unique[i]),
            energy=float(energies[i]),
            occurrences=int(counts[i]),
        )
        for i in order
    ]
    timing = {
        "total_anneal_seconds": float(total_seconds),
        "per_read_seconds": float(total_seconds) / num_reads,
    }
    return SampleSet(rows=rows, timing=timing, config=config)


def sa_sample(m: qubo.QuboModel, cfg: AnnealConfig) -> SampleSet:
    """Classical simulated annealing; see module docstring."""
    cfg.validate()
    apply_thread_env()
    warm_up()
    betas = _beta_schedule(cfg)
    free, sub = _free_submodel(m)
    w = sub.dense()
    raw = np.empty((cfg.num_reads, sub.n), dtype=np.uint8)
    t0 = time.perf_counter()
    _kernels.sa_kernel(sub.linear, w, betas, np.uint64(cfg.seed), raw)
    elapsed = time.perf_counter() - t0
    out = _scatter(free, raw, m.n)
    return _collect(m, out, elapsed, _config_dict(Sampler.SA, m, cfg))


def sqa_sample(m: qubo.QuboModel, cfg: AnnealConfig) -> SampleSet:
    """Simulated quantum annealing via path-integral Monte Carlo."""
    cfg.validate()
    apply_thread_env()
    warm_up()
    free, sub = _free_submodel(m)
    ising = qubo.to_ising(sub)
    jperp = _jperp_schedule(cfg)
    jmat = ising.dense()
    raw = np.empty((cfg.num_reads, sub.n), dtype=np.uint8)
    t0 = time.perf_counter()
    _kernels.sqa_kernel(ising.h, jmat, cfg.beta, jperp, cfg.trotter_slices,
                        np.uint64(cfg.seed), raw)
    elapsed = time.perf_counter() - t0
    out = _scatter(free, raw, m.n)
    return _collect(m, out, elapsed, _config_dict(Sampler.SQA, m, cfg))


def tts(s: SampleSet, reference_energy: float,
        target_probability: float = 0.99) -> float | None:
    """Expected time to hit the reference energy with the target confidence.

    Returns None when no read succeeded (the caller must report failure).
    """
    if not (0.0 < target_probability < 1.0):
        raise ConfigError(
            f"target_probability must be in (0, 1), got {target_probability!r}"
        )
    num_reads = s.num_reads
    if num_reads == 0:
        raise ConfigError("sample set has no reads")
    hits = sum(r.occurrences for r in s.rows
               if r.energy <= reference_energy + ENERGY_ATOL)
    p_s = hits / num_reads
    per_read = float(s.timing["per_read_seconds"])
    if p_s == 0.0:
        return None
    if p_s >= 1.0:
        return per_read
    return per_read * math.log(1.0 - target_probability) / math.log(1.0 - p_s)


def select(m: qubo.QuboModel, sampler: Sampler | str,
           cfg: AnnealConfig) -> SelectionResult:
    """Run a sampler and report the best selection found."""
    sampler = Sampler(sampler)
    if sampler is Sampler.EXACT:
        result = qubo.brute_force(m)
        result.config = cfg
        return result
    if sampler is Sampler.SA:
        sset = sa_sample(m, cfg)
    elif sampler is Sampler.SQA:
        sset = sqa_sample(m, cfg)
    else:
        raise ConfigError(
            "the all-aps baseline skips optimization; pick sa, sqa, or exact"
        )
    bits = sset.best.bits
    return SelectionResult(
        selected=np.flatnonzero(bits).astype(int),
        achieved_k=int(bits.sum()),
        best_energy=sset.best.energy,
        sampler=sampler,
        config=cfg,
        tts_seconds=None,
        bitvector=bits,
        sampleset=sset,
    )

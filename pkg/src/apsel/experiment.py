"""End-to-end experiment runner: ingest, analyze, build, solve, evaluate.

A run executes every configured sampler across seeded trials, writes one
artifact file per (sampler, trial) into the output directory, then an
aggregate table and a manifest. Trial t derives every stochastic component
(train/test split, sampler streams) from seed + t, so a re-run with the same
configuration reproduces the same selections, reports, and sample rows.

Artifact hashes in the manifest cover deterministic content only: wall-clock
fields (timing blocks, TTS values) are stripped before hashing, because they
legitimately vary between otherwise identical runs.

Output layout:
    manifest.json
    selection_<sampler>_<trial>.json
    sampleset_<sampler>_<trial>.json
    localization_<sampler>_<trial>.json
    aggregate.csv
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from . import analysis, anneal, dataset, localize, qubo, simulate
from ._version import __version__
from .analysis import Metric
from .anneal import AnnealConfig, Sampler
from .dataset import IngestConfig
from .errors import ConfigError, DataError
from .localize import LocalizerConfig

DATA_DIR_ENV = "APSEL_DATA_DIR"
CACHE_DIR_ENV = "APSEL_CACHE_DIR"

AGGREGATE_COLUMNS = [
    "sweep_parameter",
    "sweep_value",
    "sampler",
    "trials",
    "mean_error_m",
    "std_error_m",
    "mean_floor_accuracy",
    "std_floor_accuracy",
    "mean_achieved_k",
    "min_achieved_k",
    "max_achieved_k",
    "mean_reduction_fraction",
    "mean_best_energy",
    "mean_tts_seconds",
    "mean_per_read_seconds",
]
# wall-clock columns/keys excluded from deterministic content hashes
TIMING_COLUMNS = {"mean_tts_seconds", "mean_per_read_seconds"}
TIMING_KEYS = {"timing", "tts_seconds"}


@dataclass
class ExperimentConfig:
    dataset_paths: tuple[str, ...] = ()
    ingest: IngestConfig = field(default_factory=IngestConfig)
    metric: Metric = Metric.ENTROPY
    alpha: float = 0.8
    eta: float = 2.0
    budget_k: int = 20
    anneal: AnnealConfig = field(default_factory=AnnealConfig)
    localizer: LocalizerConfig = field(default_factory=LocalizerConfig)
    samplers: tuple[Sampler, ...] = (Sampler.SQA, Sampler.SA, Sampler.ALL_APS)
    trials: int = 10
    test_fraction: float = 0.2
    seed: int = 0
    sweep_parameter: str | None = None
    sweep_values: tuple | None = None
    out_dir: str = "apsel-run"

    def validate(self) -> "ExperimentConfig":
        if not (0.0 <= self.alpha <= 1.0):
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha!r}")
        if not self.eta > 0.0:
            raise ConfigError(f"eta must be positive, got {self.eta!r}")
        if self.budget_k < 1:
            raise ConfigError(f"budget_k must be >= 1, got {self.budget_k!r}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials!r}")
        if not (0.0 < self.test_fraction < 1.0):
            raise ConfigError(
                f"test_fraction must be in (0, 1), got {self.test_fraction!r}"
            )
        if not self.samplers:
            raise ConfigError("at least one sampler is required")
        self.samplers = tuple(Sampler(s) for s in self.samplers)
        self.metric = Metric(self.metric)
        self.anneal.validate()
        self.localizer.validate()
        self.ingest.validate()
        if (self.sweep_parameter is None) != (self.sweep_values is None):
            raise ConfigError("sweep_parameter and sweep_values must be set together")
        if self.sweep_parameter is not None:
            if self.sweep_parameter not in SWEEPABLE:
                raise ConfigError(
                    f"unknown sweep parameter {self.sweep_parameter!r}; "
                    f"choose one of {sorted(SWEEPABLE)}"
                )
            if not self.sweep_values:
                raise ConfigError("sweep_values must be a non-empty list")
        return self

    def to_dict(self) -> dict:
        return {
            "dataset_paths": [str(p) for p in self.dataset_paths],
            "ingest": self.ingest.to_dict(),
            "metric": self.metric.value,
            "alpha": self.alpha,
            "eta": self.eta,
            "budget_k": self.budget_k,
            "anneal": self.anneal.to_dict(),
            "localizer": {
                "k_neighbors": self.localizer.k_neighbors,
                "floor_height_m": self.localizer.floor_height_m,
                "distance": self.localizer.distance.value,
                "missing_handling": self.localizer.missing_handling.value,
            },
            "samplers": [s.value for s in self.samplers],
            "trials": self.trials,
            "test_fraction": self.test_fraction,
            "seed": self.seed,
            "sweep_parameter": self.sweep_parameter,
            "sweep_values": list(self.sweep_values) if self.sweep_values else None,
            "out_dir": str(self.out_dir),
            "version": __version__,
        }


def _set_anneal(name):
    def apply(cfg: ExperimentConfig, value):
        kwargs = {name: type(getattr(cfg.anneal, name))(value)}
        return replace(cfg, anneal=replace(cfg.anneal, **kwargs))
    return apply


def _set_field(name, cast):
    def apply(cfg: ExperimentConfig, value):
        return replace(cfg, **{name: cast(value)})
    return apply


def _set_knn(cfg: ExperimentConfig, value):
    return replace(cfg, localizer=replace(cfg.localizer, k_neighbors=int(value)))


SWEEPABLE = {
    "alpha": _set_field("alpha", float),
    "eta": _set_field("eta", float),
    "budget_k": _set_field("budget_k", int),
    "k": _set_field("budget_k", int),
    "metric": _set_field("metric", Metric),
    "beta": _set_anneal("beta"),
    "gamma": _set_anneal("gamma"),
    "num_reads": _set_anneal("num_reads"),
    "reads": _set_anneal("num_reads"),
    "num_sweeps": _set_anneal("num_sweeps"),
    "sweeps": _set_anneal("num_sweeps"),
    "trotter_slices": _set_anneal("trotter_slices"),
    "trotter": _set_anneal("trotter_slices"),
    "knn": _set_knn,
    "k_neighbors": _set_knn,
    "test_fraction": _set_field("test_fraction", float),
}


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_DIR_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "apsel"


def resolve_dataset_paths(cfg: ExperimentConfig) -> list[Path]:
    """Explicit paths, else APSEL_DATA_DIR, else the cached synthetic corpus."""
    if cfg.dataset_paths:
        return [Path(p) for p in cfg.dataset_paths]
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        root = Path(env)
        train = root / simulate.TRAINING_FILENAME
        if not train.exists():
            raise DataError(
                f"{DATA_DIR_ENV}={env} does not contain {simulate.TRAINING_FILENAME}"
            )
        val = root / simulate.VALIDATION_FILENAME
        return [train, val] if val.exists() else [train]
    paths = simulate.ensure_corpus(default_cache_dir())
    return [paths.training, paths.validation]


def load_experiment_dataset(cfg: ExperimentConfig) -> dataset.FingerprintDataset:
    paths = resolve_dataset_paths(cfg)
    d = dataset.load_many(paths, cfg.ingest)
    return dataset.normalize_labels(d)


@dataclass
class TrialRecord:
    sampler: Sampler
    trial: int
    seed: int
    selection: anneal.SelectionResult | None
    sampleset: anneal.SampleSet | None
    report: localize.LocalizationReport | None


@dataclass
class RunOutput:
    out_dir: Path
    records: list[TrialRecord]
    aggregate: pd.DataFrame
    manifest: dict


def _atomic_json(path: Path, doc: dict) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def _atomic_csv(path: Path, frame: pd.DataFrame) -> None:
    tmp = path.with_name(path.name + ".tmp")
    frame.to_csv(tmp, index=False)
    os.replace(tmp, path)


def _strip_timing(node):
    if isinstance(node, dict):
        return {k: _strip_timing(v) for k, v in node.items() if k not in TIMING_KEYS}
    if isinstance(node, list):
        return [_strip_timing(v) for v in node]
    return node


def content_digest(path: Path) -> str:
    """Hash of an artifact's deterministic content (timing stripped)."""
    if path.suffix == ".json":
        with open(path, "r", encoding="utf-8") as fh:
            doc = _strip_timing(json.load(fh))
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()
    if path.suffix == ".csv":
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        keep = [c for c in frame.columns if c not in TIMING_COLUMNS]
        blob = frame[keep].to_csv(index=False).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _aggregate_rows(records: list[TrialRecord], sweep_parameter: str | None,
                    sweep_value, samplers: tuple[Sampler, ...]) -> pd.DataFrame:
    rows = []
    for sampler in samplers:
        recs = [r for r in records if r.sampler is sampler]
        if not recs:
            continue
        errors = [r.report.mean_error_m for r in recs if r.report is not None]
        floors = [r.report.floor_accuracy for r in recs if r.report is not None]
        reductions = [r.report.reduction_fraction for r in recs if r.report is not None]
        ks = [r.selection.achieved_k for r in recs if r.selection is not None]
        energies = [r.selection.best_energy for r in recs if r.selection is not None]
        tts_vals = [r.selection.tts_seconds for r in recs
                    if r.selection is not None and r.selection.tts_seconds is not None]
        per_read = [r.sampleset.timing["per_read_seconds"] for r in recs
                    if r.sampleset is not None]

        def _mean(vals):
            return float(np.mean(vals)) if vals else np.nan

        def _std(vals):
            if not vals:
                return np.nan
            return float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0

        rows.append({
            "sweep_parameter": sweep_parameter if sweep_parameter else "",
            "sweep_value": sweep_value if sweep_value is not None else "",
            "sampler": sampler.value,
            "trials": len(recs),
            "mean_error_m": _mean(errors),
            "std_error_m": _std(errors),
            "mean_floor_accuracy": _mean(floors),
            "std_floor_accuracy": _std(floors),
            "mean_achieved_k": _mean(ks),
            "min_achieved_k": float(np.min(ks)) if ks else np.nan,
            "max_achieved_k": float(np.max(ks)) if ks else np.nan,
            "mean_reduction_fraction": _mean(reductions),
            "mean_best_energy": _mean(energies),
            "mean_tts_seconds": _mean(tts_vals),
            "mean_per_read_seconds": _mean(per_read),
        })
    return pd.DataFrame(rows, columns=AGGREGATE_COLUMNS)


def run(cfg: ExperimentConfig, data: dataset.FingerprintDataset | None = None,
        sweep_value=None, verbose: bool = False) -> RunOutput:
    """Execute all sampler x trial combinations and write the artifact tree."""
    cfg.validate()
    d = data if data is not None else load_experiment_dataset(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    anneal.warm_up()

    records: list[TrialRecord] = []
    reference_energy: dict[int, float] = {}
    reference_mode = "exact" if d.n_aps <= qubo.BRUTE_FORCE_MAX_N else "best-known"
    for t in range(cfg.trials):
        seed_t = cfg.seed + t
        sp = dataset.split(d, test_fraction=cfg.test_fraction, seed=seed_t)
        imp = analysis.importance(sp.train, cfg.metric)
        red = analysis.redundancy(sp.train, imp)
        model = qubo.build(imp, red, cfg.alpha, cfg.eta, cfg.budget_k)
        acfg = replace(cfg.anneal, seed=seed_t)
        if reference_mode == "exact":
            reference_energy[t] = qubo.brute_force(model).best_energy
        for sampler in cfg.samplers:
            if verbose:
                print(f"[info] trial {t + 1}/{cfg.trials} sampler {sampler.value}",
                      flush=True)
            if sampler is Sampler.ALL_APS:
                report = localize.evaluate(sp, np.arange(d.n_aps), cfg.localizer)
                records.append(TrialRecord(sampler, t, seed_t, None, None, report))
                continue
            result = anneal.select(model, sampler, acfg)
            report = None
            if result.achieved_k > 0:
                report = localize.evaluate(sp, result.selected, cfg.localizer)
            records.append(
                TrialRecord(sampler, t, seed_t, result, result.sampleset, report)
            )
            if reference_mode == "best-known":
                best = reference_energy.get(t, np.inf)
                reference_energy[t] = min(best, result.best_energy)

    for rec in records:
        if rec.selection is not None and rec.sampleset is not None:
            rec.selection.tts_seconds = anneal.tts(
                rec.sampleset, reference_energy[rec.trial]
            )

    artifacts: dict[str, str] = {}
    for rec in records:
        tag = f"{rec.sampler.value}_{rec.trial}"
        if rec.selection is not None:
            path = out / f"selection_{tag}.json"
            _atomic_json(path, rec.selection.to_json_dict())
            artifacts[path.name] = content_digest(path)
        if rec.sampleset is not None:
            path = out / f"sampleset_{tag}.json"
            _atomic_json(path, rec.sampleset.to_json_dict())
            artifacts[path.name] = content_digest(path)
        if rec.report is not None:
            path = out / f"localization_{tag}.json"
            _atomic_json(path, rec.report.to_json_dict())
            artifacts[path.name] = content_digest(path)

    aggregate = _aggregate_rows(records, cfg.sweep_parameter, sweep_value,
                                cfg.samplers)
    _atomic_csv(out / "aggregate.csv", aggregate)
    artifacts["aggregate.csv"] = content_digest(out / "aggregate.csv")

    manifest = {
        "config": cfg.to_dict(),
        "seeds": [cfg.seed + t for t in range(cfg.trials)],
        "n_samples": d.n_samples,
        "n_aps": d.n_aps,
        "tts_reference": {
            "mode": reference_mode,
            "per_trial": {str(t): reference_energy[t] for t in sorted(reference_energy)},
        },
        "artifacts": artifacts,
    }
    _atomic_json(out / "manifest.json", manifest)
    return RunOutput(out_dir=out, records=records, aggregate=aggregate,
                     manifest=manifest)


def sweep(cfg: ExperimentConfig, data: dataset.FingerprintDataset | None = None,
          verbose: bool = False) -> RunOutput:
    """Run once per sweep value; combine per-value aggregates into one table."""
    cfg.validate()
    if cfg.sweep_parameter is None:
        raise ConfigError("sweep requires sweep_parameter and sweep_values")
    d = data if data is not None else load_experiment_dataset(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    apply = SWEEPABLE[cfg.sweep_parameter]

    frames = []
    records: list[TrialRecord] = []
    sub_manifests: dict[str, str] = {}
    for value in cfg.sweep_values:
        sub_cfg = apply(cfg, value)
        sub_dir = out / f"{cfg.sweep_parameter}={value}"
        sub_cfg = replace(sub_cfg, out_dir=str(sub_dir),
                          sweep_parameter=None, sweep_values=None)
        if verbose:
            print(f"[info] sweep {cfg.sweep_parameter}={value}", flush=True)
        result = run(sub_cfg, data=d, sweep_value=value, verbose=verbose)
        frame = result.aggregate.copy()
        frame["sweep_parameter"] = cfg.sweep_parameter
        frame["sweep_value"] = value
        frames.append(frame)
        records.extend(result.records)
        sub_manifests[str(value)] = content_digest(sub_dir / "manifest.json")

    combined = pd.concat(frames, ignore_index=True)[AGGREGATE_COLUMNS]
    _atomic_csv(out / "aggregate.csv", combined)
    manifest = {
        "config": cfg.to_dict(),
        "sweep_parameter": cfg.sweep_parameter,
        "sweep_values": list(cfg.sweep_values),
        "sub_runs": sub_manifests,
        "artifacts": {"aggregate.csv": content_digest(out / "aggregate.csv")},
    }
    _atomic_json(out / "manifest.json", manifest)
    return RunOutput(out_dir=out, records=records, aggregate=combined,
                     manifest=manifest)


def aggregate_from_artifacts(run_dir: str | os.PathLike) -> pd.DataFrame:
    """Rebuild the aggregate table from the per-trial artifact files.

    Used to cross-check that aggregate.csv matches what the artifacts imply.
    """
    out = Path(run_dir)
    with open(out / "manifest.json", "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    cfg_doc = manifest["config"]
    samplers = tuple(Sampler(s) for s in cfg_doc["samplers"])
    trials = int(cfg_doc["trials"])
    records: list[TrialRecord] = []
    for sampler in samplers:
        for t in range(trials):
            tag = f"{sampler.value}_{t}"
            sel_path = out / f"selection_{tag}.json"
            loc_path = out / f"localization_{tag}.json"
            sset_path = out / f"sampleset_{tag}.json"
            selection = None
            if sel_path.exists():
                with open(sel_path, "r", encoding="utf-8") as fh:
                    doc = json.load(fh)
                selection = anneal.SelectionResult(
                    selected=np.asarray(doc["selected"], dtype=int),
                    achieved_k=int(doc["achieved_k"]),
                    best_energy=float(doc["best_energy"]),
                    sampler=Sampler(doc["sampler"]),
                    config=None,
                    tts_seconds=doc.get("tts_seconds"),
                )
            sampleset = anneal.SampleSet.load(sset_path) if sset_path.exists() else None
            report = (localize.LocalizationReport.load(loc_path)
                      if loc_path.exists() else None)
            if selection is None and sampleset is None and report is None:
                continue
            records.append(TrialRecord(sampler, t, cfg_doc["seed"] + t,
                                       selection, sampleset, report))
    return _aggregate_rows(records, cfg_doc.get("sweep_parameter"), None, samplers)

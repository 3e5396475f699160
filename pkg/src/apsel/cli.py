"""Command-line interface for the AP selection and localization pipeline.

Subcommands mirror the pipeline stages:

    ingest    read fingerprint CSVs, normalize labels, write a canonical dump
    analyze   per-AP importance scores (and optionally the redundancy matrix)
    build     assemble the selection model as a JSON artifact
    solve     sample or enumerate the model; write sample set / selection
    evaluate  localization quality of a subset on a held-out split
    run       full multi-trial experiment with artifact directory
    sweep     run once per value of one parameter; combined aggregate table

Exit codes: 0 success, 2 configuration error, 3 data error, 4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis, anneal, dataset, experiment, localize, qubo
from ._version import __version__
from .errors import ApselError, ConfigError

METRIC_CHOICES = [m.value for m in analysis.Metric]
SAMPLER_CHOICES = [s.value for s in anneal.Sampler]


def _dataset_flags(parser: argparse.ArgumentParser, required: bool) -> None:
    parser.add_argument(
        "--dataset", action="append", default=None, metavar="CSV",
        required=required,
        help="fingerprint CSV path; repeat or comma-separate for several "
             "(default: APSEL_DATA_DIR, else a cached synthetic corpus)",
    )


def _model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--metric", choices=METRIC_CHOICES, default="entropy",
                        help="importance measure (default: entropy)")
    parser.add_argument("--alpha", type=float, default=0.8,
                        help="importance weight in [0, 1] (default: 0.8)")
    parser.add_argument("--eta", type=float, default=2.0,
                        help="budget penalty strength (default: 2.0)")
    parser.add_argument("--budget-k", type=int, default=20,
                        help="number of APs to select (default: 20)")


def _anneal_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--reads", type=int, default=anneal.DEFAULT_NUM_READS,
                        help="independent sampler restarts (default: 1000)")
    parser.add_argument("--sweeps", type=int, default=anneal.DEFAULT_NUM_SWEEPS,
                        help="Monte Carlo passes per read (default: 1000)")
    parser.add_argument("--beta", type=float, default=anneal.DEFAULT_BETA,
                        help="inverse temperature (default: 10.0)")
    parser.add_argument("--gamma", type=float, default=anneal.DEFAULT_GAMMA,
                        help="initial transverse field (default: 1.0)")
    parser.add_argument("--trotter", type=int, default=anneal.DEFAULT_TROTTER_SLICES,
                        help="imaginary-time slices (default: 8)")
    parser.add_argument("--seed", type=int, default=0,
                        help="base random seed (default: 0)")


def _localizer_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--knn", type=int, default=localize.DEFAULT_K_NEIGHBORS,
                        help="neighbors for position matching (default: 3)")
    parser.add_argument("--floor-height", type=float,
                        default=localize.DEFAULT_FLOOR_HEIGHT_M,
                        help="meters per floor for 3D error (default: 3.0)")
    parser.add_argument("--test-fraction", type=float, default=0.2,
                        help="held-out fraction per floor (default: 0.2)")


def _experiment_flags(parser: argparse.ArgumentParser) -> None:
    _dataset_flags(parser, required=False)
    _model_flags(parser)
    _anneal_flags(parser)
    _localizer_flags(parser)
    parser.add_argument("--sampler", default="sqa,sa,all-aps",
                        help="comma-separated subset of {sa,sqa,exact,all-aps} "
                             "(default: sqa,sa,all-aps)")
    parser.add_argument("--trials", type=int, default=10,
                        help="seeded repetitions (default: 10)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apsel",
        description="Budget-constrained WiFi AP selection via annealing, "
                    "with kNN localization evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"apsel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load CSVs, normalize labels, write a dump")
    _dataset_flags(p, required=True)
    p.add_argument("--out", required=True, help="output CSV path (sidecar added)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="per-AP importance scores")
    _dataset_flags(p, required=True)
    p.add_argument("--metric", choices=METRIC_CHOICES, default="entropy")
    p.add_argument("--out", required=True, help="importance JSON path")
    p.add_argument("--redundancy-out", default=None, metavar="NPY",
                   help="also save the pairwise redundancy matrix (.npy)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("build", help="assemble the selection model")
    _dataset_flags(p, required=True)
    _model_flags(p)
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("solve", help="sample or enumerate a model")
    p.add_argument("--model", required=True, help="model JSON from `build`")
    p.add_argument("--sampler", choices=["sa", "sqa", "exact"], default="sqa")
    _anneal_flags(p)
    p.add_argument("--out", required=True,
                   help="sample-set JSON (selection JSON when --sampler exact)")
    p.add_argument("--selection", default=None,
                   help="also write the best selection as JSON")
    p.add_argument("--tts-reference", type=float, default=None,
                   help="reference energy for time-to-solution")
    p.add_argument("--tts-target", type=float, default=0.99,
                   help="success probability for TTS (default: 0.99)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="localization quality of an AP subset")
    _dataset_flags(p, required=False)
    _localizer_flags(p)
    p.add_argument("--seed", type=int, default=0, help="split seed (default: 0)")
    p.add_argument("--selection", default=None,
                   help="selection JSON from `solve` (default: all APs)")
    p.add_argument("--subset", default=None, metavar="I,J,...",
                   help="explicit comma-separated AP indices")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--csv", default=None, help="also write per-query CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full multi-trial experiment")
    _experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="repeat `run` across one parameter axis")
    _experiment_flags(p)
    p.add_argument("--param", required=True,
                   help=f"parameter name, one of {sorted(experiment.SWEEPABLE)}")
    p.add_argument("--values", required=True,
                   help="comma-separated values, e.g. 0.5,1,2,4,8,16")
    p.set_defaults(func=cmd_sweep)
    return parser


def _dataset_paths(args) -> list[str]:
    if not args.dataset:
        return []
    paths: list[str] = []
    for entry in args.dataset:
        paths.extend(p.strip() for p in entry.split(",") if p.strip())
    return paths


def _load_dataset(args) -> dataset.FingerprintDataset:
    paths = _dataset_paths(args)
    cfg = experiment.ExperimentConfig(dataset_paths=tuple(paths))
    return experiment.load_experiment_dataset(cfg)


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def cmd_ingest(args) -> int:
    d = _load_dataset(args)
    csv_path, sidecar = dataset.dump(d, args.out)
    print(f"[done] wrote {csv_path} and {sidecar} "
          f"({d.n_samples} samples, {d.n_aps} APs)")
    return 0


def cmd_analyze(args) -> int:
    d = _load_dataset(args)
    imp = analysis.importance(d, analysis.Metric(args.metric))
    doc = {
        "metric": imp.metric.value,
        "n_aps": imp.n_aps,
        "raw_scores": [float(v) for v in imp.raw_scores],
        "scores": [float(v) for v in imp.scores],
        "active": [bool(b) for b in imp.active_mask],
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"[done] wrote {args.out} ({int(imp.active_mask.sum())} active APs)")
    if args.redundancy_out:
        red = analysis.redundancy(d, imp)
        np.save(args.redundancy_out, red.values)
        print(f"[done] wrote {args.redundancy_out}")
    return 0


def cmd_build(args) -> int:
    d = _load_dataset(args)
    imp = analysis.importance(d, analysis.Metric(args.metric))
    red = analysis.redundancy(d, imp)
    model = qubo.build(imp, red, alpha=args.alpha, eta=args.eta, k=args.budget_k)
    model.save(args.out)
    print(f"[done] wrote {args.out} (n={model.n}, "
          f"{len(model.quadratic)} pair terms)")
    return 0


def cmd_solve(args) -> int:
    model = qubo.QuboModel.load(args.model)
    cfg = anneal.AnnealConfig(
        num_reads=args.reads, num_sweeps=args.sweeps, beta=args.beta,
        gamma=args.gamma, trotter_slices=args.trotter, seed=args.seed,
    )
    sampler = anneal.Sampler(args.sampler)
    result = anneal.select(model, sampler, cfg)
    if args.tts_reference is not None and result.sampleset is not None:
        result.tts_seconds = anneal.tts(result.sampleset, args.tts_reference,
                                        args.tts_target)
    if result.sampleset is not None:
        result.sampleset.save(args.out)
        print(f"[done] wrote {args.out} ({len(result.sampleset.rows)} distinct rows)")
        if args.selection:
            result.save(args.selection)
            print(f"[done] wrote {args.selection}")
    else:
        result.save(args.out)
        print(f"[done] wrote {args.out}")
        if args.selection:
            result.save(args.selection)
            print(f"[done] wrote {args.selection}")
    print(f"[info] best energy {result.best_energy:.6f}, "
          f"achieved_k {result.achieved_k}")
    return 0


def cmd_evaluate(args) -> int:
    d = _load_dataset(args)
    if args.selection and args.subset:
        raise ConfigError("--selection and --subset are mutually exclusive")
    if args.selection:
        with open(args.selection, "r", encoding="utf-8") as fh:
            subset = np.asarray(json.load(fh)["selected"], dtype=int)
    elif args.subset:
        try:
            subset = np.asarray(
                [int(v) for v in args.subset.split(",") if v.strip()], dtype=int
            )
        except ValueError:
            raise ConfigError(
                f"--subset must be comma-separated integers, got {args.subset!r}"
            ) from None
    else:
        subset = np.arange(d.n_aps)
    sp = dataset.split(d, test_fraction=args.test_fraction, seed=args.seed)
    cfg = localize.LocalizerConfig(k_neighbors=args.knn,
                                   floor_height_m=args.floor_height)
    report = localize.evaluate(sp, subset, cfg)
    report.save(args.out)
    print(f"[done] wrote {args.out}")
    if args.csv:
        report.save_csv(args.csv)
        print(f"[done] wrote {args.csv}")
    print(f"[info] mean error {report.mean_error_m:.2f} m, "
          f"floor accuracy {report.floor_accuracy:.3f}, "
          f"{report.num_aps_used}/{d.n_aps} APs "
          f"(reduction {report.reduction_fraction:.4f})")
    return 0


def _experiment_config(args, sweep_parameter=None, sweep_values=None):
    try:
        samplers = tuple(anneal.Sampler(s.strip())
                         for s in args.sampler.split(",") if s.strip())
    except ValueError:
        raise ConfigError(
            f"unknown sampler in {args.sampler!r}; choose from {SAMPLER_CHOICES}"
        ) from None
    return experiment.ExperimentConfig(
        dataset_paths=tuple(_dataset_paths(args)),
        metric=analysis.Metric(args.metric),
        alpha=args.alpha,
        eta=args.eta,
        budget_k=args.budget_k,
        anneal=anneal.AnnealConfig(
            num_reads=args.reads, num_sweeps=args.sweeps, beta=args.beta,
            gamma=args.gamma, trotter_slices=args.trotter, seed=args.seed,
        ),
        localizer=localize.LocalizerConfig(
            k_neighbors=args.knn, floor_height_m=args.floor_height,
        ),
        samplers=samplers,
        trials=args.trials,
        test_fraction=args.test_fraction,
        seed=args.seed,
        sweep_parameter=sweep_parameter,
        sweep_values=sweep_values,
        out_dir=args.out,
    )


def cmd_run(args) -> int:
    cfg = _experiment_config(args)
    result = experiment.run(cfg, verbose=not args.quiet)
    print(f"[done] wrote {result.out_dir}/manifest.json and aggregate.csv")
    _print_aggregate(result)
    return 0


def cmd_sweep(args) -> int:
    values = tuple(_parse_value(v.strip())
                   for v in args.values.split(",") if v.strip())
    cfg = _experiment_config(args, sweep_parameter=args.param, sweep_values=values)
    result = experiment.sweep(cfg, verbose=not args.quiet)
    print(f"[done] wrote {result.out_dir}/manifest.json and aggregate.csv")
    _print_aggregate(result)
    return 0


def _print_aggregate(result) -> None:
    frame = result.aggregate
    cols = ["sweep_value", "sampler", "mean_error_m", "mean_floor_accuracy",
            "mean_achieved_k"]
    cols = [c for c in cols if c in frame.columns]
    print(frame[cols].to_string(index=False))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ApselError as exc:
        print(f"[error] {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"[error] {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Verbs:
  generate    write a synthetic dataset to a labeled CSV
  pairs       mine training pairs from a labeled CSV
  run         train and score a single pipeline run
  experiment  repeated runs on one dataset, with report files
  sweep       a grid of experiments, with a combined report
  report      regenerate CSV summaries from an existing results.json

Exit codes: 0 success, 1 some pipeline runs failed, 2 bad configuration or
unusable input.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .datasets import SYNTHETIC_KINDS, SyntheticSpec, generate_synthetic, load_csv, standardize
from .errors import BadGrid, RpSpectralError, StageError
from .harness import (
    MethodConfig,
    config_from_dict,
    load_dataset,
    mine_pairs,
    report,
    run_experiment,
    run_pipeline,
    sweep,
)
from .siamese import save_twin_checkpoint
from .pairing import save_pairs_csv
from .serialize import read_json, write_json
from .spectralnet import save_spectral_checkpoint


def _cmd_generate(args):
    spec = SyntheticSpec(
        kind=args.kind,
        n=args.n,
        noise=args.noise,
        centers=args.centers,
        seed=args.seed,
    )
    spec.validate()
    X, y = generate_synthetic(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(X.shape[1])] + ["label"])
        for row, label in zip(X, y):
            writer.writerow([str(float(v)) for v in row] + [int(label)])
    print(f"wrote {len(X)} points ({args.kind}) to {out}")
    return 0


def _label_column(args):
    return args.label_index if args.label_index is not None else args.label_column


def _cmd_pairs(args):
    X, _ = load_csv(args.data, _label_column(args))
    X = standardize(X)
    method = MethodConfig(
        kind=args.method,
        k=args.k,
        leaf_size=args.leaf_size,
        strategy=args.strategy,
    )
    method.validate()
    pairs = mine_pairs(X, method, np.random.default_rng(args.seed))

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_pairs_csv(pairs, outdir / "positives.csv", outdir / "negatives.csv")
    write_json(
        outdir / "pairs.json",
        {
            "source": pairs.source,
            "positive": int(len(pairs.positives)),
            "negative": int(len(pairs.negatives)),
            "raw_positive": int(pairs.raw_positive_count),
            "warning": pairs.warning,
        },
    )
    print(
        f"{pairs.source}: {len(pairs.positives)} positive / "
        f"{len(pairs.negatives)} negative pairs -> {outdir}"
    )
    if pairs.warning:
        print(f"warning: {pairs.warning}", file=sys.stderr)
    return 0


def _cmd_run(args):
    config = config_from_dict(read_json(args.config))
    X, y = load_dataset(config.dataset)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        result = run_pipeline(X, y, config, run_index=args.run_index)
    except StageError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1

    write_json(outdir / "run.json", result.record)
    with open(outdir / "labels.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("index", "label"))
        writer.writerows(enumerate(int(v) for v in result.labels))
    if args.save_models:
        save_twin_checkpoint(
            result.twin,
            result.record["bandwidth"],
            result.record["pair_source"],
            outdir / "twin.json",
        )
        save_spectral_checkpoint(result.model, outdir / "spectral.json")
    score = result.record["ari"]
    shown = "undefined" if score is None else f"{score:.4f}"
    print(f"run {args.run_index}: ari={shown} -> {outdir}")
    return 0


def _cmd_experiment(args):
    data = read_json(args.config)
    if args.runs is not None:
        data["runs"] = args.runs
    if args.base_seed is not None:
        data["base_seed"] = args.base_seed
    config = config_from_dict(data)
    record = run_experiment(config)
    report(record, args.outdir)
    summary = record["summary"]
    mean = summary["mean_ari"]
    shown = "undefined" if mean is None else f"{mean:.4f}"
    print(
        f"{summary['runs_total']} runs, {summary['runs_failed']} failed, "
        f"mean ari {shown} -> {args.outdir}"
    )
    return 1 if summary["runs_failed"] else 0


def _cmd_sweep(args):
    config = config_from_dict(read_json(args.config))
    grid = read_json(args.grid)
    if not isinstance(grid, dict):
        raise BadGrid("grid file must be a JSON object of key -> values")
    record = sweep(config, grid)
    report(record, args.outdir)
    failed = sum(
        cell["experiment"]["summary"]["runs_failed"] for cell in record["cells"]
    )
    print(
        f"{len(record['cells'])} grid cells, {failed} failed runs "
        f"-> {args.outdir}"
    )
    return 1 if failed else 0


def _cmd_report(args):
    paths = report(read_json(args.results), args.outdir)
    print(f"wrote {paths['summary']} and {paths['plotdata']}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="rpspectral",
        description="Tree-pair spectral clustering pipelines.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset CSV")
    p.add_argument("--kind", choices=SYNTHETIC_KINDS, default="blobs")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--centers", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("pairs", help="mine training pairs from a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--label-index", type=int, default=None)
    p.add_argument("--method", choices=("knn", "rptree"), default="rptree")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--leaf-size", type=int, default=20)
    p.add_argument("--strategy", default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_pairs)

    p = sub.add_parser("run", help="train and score one pipeline run")
    p.add_argument("--config", required=True)
    p.add_argument("--run-index", type=int, default=0)
    p.add_argument("--save-models", action="store_true")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("experiment", help="repeated runs with a report")
    p.add_argument("--config", required=True)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--base-seed", type=int, default=None)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("sweep", help="grid of experiments with a report")
    p.add_argument("--config", required=True)
    p.add_argument("--grid", required=True, help="JSON object of key -> values")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="regenerate CSVs from results.json")
    p.add_argument("--results", required=True)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RpSpectralError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

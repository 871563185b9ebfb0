"""End-to-end experiment harness.

A pipeline run goes: mine pairs (neighbor graph or tree leaves) -> train the
twin network -> pick a heat-kernel bandwidth from positive-pair distances ->
train the spectral embedding network -> embed everything -> k-means ->
score against the reference labels.

Seeding is stage-isolated: run r uses seed ``base_seed + r``, and every stage
inside the run draws from its own generator derived via
``SeedSequence(entropy=run_seed, spawn_key=(stage,))``. Changing how many
random numbers one stage consumes therefore never shifts another stage's
stream, and runs are reproducible bit for bit.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .clustering import KmeansConfig, ari, kmeans
from .datasets import SyntheticSpec, generate_synthetic, load_csv, standardize
from .errors import (
    BadGrid,
    BadSpec,
    ConfigError,
    EmptyRequest,
    IoError,
    RpSpectralError,
    StageError,
)
from .mlp import Mlp
from .pairing import knn_pairs, rptree_pairs
from .rptree import DirectionStrategy, TreeConfig, build_tree
from .serialize import write_json
from .siamese import (
    SiameseConfig,
    select_bandwidth,
    siamese_distances,
    train_siamese,
)
from .spectralnet import SpectralConfig, SpectralModel, embed, train_spectralnet

# Stage ids feed the per-stage SeedSequence spawn keys. Reordering or
# renumbering them changes every result, so they are frozen here.
_STAGE_PAIRS = 0
_STAGE_SIAMESE = 1
_STAGE_SPECTRAL = 2
_STAGE_KMEANS = 3


@dataclass(frozen=True)
class CsvSource:
    """Labeled CSV on disk; features get standardized at load time."""

    path: str
    label_column: str | int = "label"
    delimiter: str = ","
    header: bool = True


@dataclass(frozen=True)
class MethodConfig:
    """Which pair-mining route to use and its knobs.

    kind "knn" uses exact k nearest neighbors; kind "rptree" mines pairs from
    random-projection tree leaves. ``strategy`` is the tree's direction rule
    ("random", "pca", or "bestof:N").
    """

    kind: str = "rptree"
    k: int = 2
    leaf_size: int = 20
    strategy: str = "random"
    max_split_retries: int = 3

    def validate(self):
        if self.kind not in ("knn", "rptree"):
            raise ConfigError(f"unknown pairing method {self.kind!r}")
        if self.kind == "knn" and self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.kind == "rptree":
            if self.leaf_size < 2:
                raise ConfigError("leaf_size must be at least 2")
            try:
                DirectionStrategy.parse(self.strategy)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc

    @property
    def label(self) -> str:
        if self.kind == "knn":
            return f"knn:k={self.k}"
        return f"rptree:leaf={self.leaf_size}:{self.strategy}"


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: SyntheticSpec | CsvSource
    method: MethodConfig = field(default_factory=MethodConfig)
    n_clusters: int = 2
    runs: int = 10
    base_seed: int = 0
    siamese: SiameseConfig = field(default_factory=SiameseConfig)
    spectral: SpectralConfig | None = None  # defaults derived from n_clusters
    kmeans: KmeansConfig | None = None

    @property
    def spectral_config(self) -> SpectralConfig:
        return (
            self.spectral
            if self.spectral is not None
            else SpectralConfig(n_clusters=self.n_clusters)
        )

    @property
    def kmeans_config(self) -> KmeansConfig:
        return (
            self.kmeans
            if self.kmeans is not None
            else KmeansConfig(k=self.n_clusters)
        )

    def validate(self):
        if self.n_clusters < 2:
            raise ConfigError("n_clusters must be at least 2")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be nonnegative")
        self.method.validate()
        if isinstance(self.dataset, SyntheticSpec):
            try:
                self.dataset.validate()
            except (BadSpec, EmptyRequest) as exc:
                raise ConfigError(f"dataset: {exc}") from exc
        if self.spectral_config.n_clusters != self.n_clusters:
            raise ConfigError("spectral config disagrees on n_clusters")
        if self.kmeans_config.k != self.n_clusters:
            raise ConfigError("kmeans config disagrees on n_clusters")
        try:
            self.siamese.validate()
            self.spectral_config.validate()
            self.kmeans_config.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _stage_rng(run_seed, stage):
    return np.random.default_rng(
        np.random.SeedSequence(entropy=run_seed, spawn_key=(stage,))
    )


def load_dataset(source):
    """Materialize (features, labels) from a dataset source.

    Synthetic generators control their own scale and are used as-is; CSV
    features arrive in arbitrary units and are standardized.
    """
    if isinstance(source, SyntheticSpec):
        return generate_synthetic(source)
    X, y = load_csv(
        source.path,
        source.label_column,
        delimiter=source.delimiter,
        header=source.header,
    )
    return standardize(X), y


@contextmanager
def _stage(name, durations):
    start = time.perf_counter()
    try:
        yield
    except RpSpectralError as exc:
        raise StageError(name, exc) from exc
    durations[name] = time.perf_counter() - start


def mine_pairs(X, method: MethodConfig, rng):
    """Mine a pair set with whichever route the method config names."""
    if method.kind == "knn":
        return knn_pairs(X, method.k, rng)
    tree_config = TreeConfig(
        leaf_size=method.leaf_size,
        strategy=DirectionStrategy.parse(method.strategy),
        max_split_retries=method.max_split_retries,
    )
    tree = build_tree(X, tree_config, rng=rng)
    pairs = rptree_pairs(tree, rng)
    pairs.source = f"rptree:leaf_size={method.leaf_size}"
    return pairs


@dataclass
class PipelineRun:
    """One trained pipeline: the JSON-ready record plus live artifacts."""

    record: dict
    labels: np.ndarray
    embedding: np.ndarray
    twin: Mlp
    model: SpectralModel


def run_pipeline(X, y, config: ExperimentConfig, run_index=0) -> PipelineRun:
    """Train and score one pipeline run; domain failures become StageError."""
    run_seed = config.base_seed + run_index
    durations = {}
    t_start = time.perf_counter()

    with _stage("pairs", durations):
        pairs = mine_pairs(X, config.method, _stage_rng(run_seed, _STAGE_PAIRS))
    with _stage("siamese", durations):
        twin, twin_history = train_siamese(
            X, pairs, config.siamese, rng=_stage_rng(run_seed, _STAGE_SIAMESE)
        )
    with _stage("bandwidth", durations):
        positive_distances = siamese_distances(twin, X, pairs.positives)
        bandwidth = select_bandwidth(positive_distances)
    with _stage("spectral", durations):
        model = train_spectralnet(
            X,
            twin,
            bandwidth,
            config.spectral_config,
            rng=_stage_rng(run_seed, _STAGE_SPECTRAL),
        )
    with _stage("embed", durations):
        Y = embed(model, X)
    with _stage("kmeans", durations):
        clusters = kmeans(
            Y, config.kmeans_config, rng=_stage_rng(run_seed, _STAGE_KMEANS)
        )
    with _stage("score", durations):
        score = ari(y, clusters.labels) if y is not None else None
    durations["total"] = time.perf_counter() - t_start

    record = {
        "run_index": run_index,
        "seed": run_seed,
        "ari": score,
        "bandwidth": float(bandwidth),
        "pair_source": pairs.source,
        "pair_counts": {
            "positive": int(len(pairs.positives)),
            "negative": int(len(pairs.negatives)),
            "raw_positive": int(pairs.raw_positive_count),
        },
        "final_twin_loss": float(twin_history[-1]),
        "final_spectral_loss": float(model.loss_history[-1]),
        "max_ortho_residual": float(max(model.ortho_residuals)),
        "kmeans_inertia": float(clusters.inertia),
        "warning": pairs.warning,
        "durations": durations,
    }
    return PipelineRun(
        record=record,
        labels=clusters.labels,
        embedding=Y,
        twin=twin,
        model=model,
    )


def run_experiment(config: ExperimentConfig, data=None) -> dict:
    """Run the configured number of pipeline repetitions on one dataset.

    Individual run failures are recorded, not raised, so one bad seed cannot
    discard the rest of the experiment. Pass ``data=(X, y)`` to reuse an
    already-materialized dataset.
    """
    config.validate()
    X, y = load_dataset(config.dataset) if data is None else data
    runs = []
    for run_index in range(config.runs):
        try:
            runs.append(run_pipeline(X, y, config, run_index).record)
        except StageError as exc:
            runs.append(
                {
                    "run_index": run_index,
                    "seed": config.base_seed + run_index,
                    "error": {"stage": exc.stage, "message": str(exc.cause)},
                }
            )
    return {
        "config": config_to_dict(config),
        "runs": runs,
        "summary": _summarize(runs),
    }


def _summarize(runs):
    scored = [
        r["ari"] for r in runs if "error" not in r and r["ari"] is not None
    ]
    counted = [
        r["pair_counts"]["positive"] for r in runs if "error" not in r
    ]
    return {
        "runs_total": len(runs),
        "runs_failed": sum(1 for r in runs if "error" in r),
        "runs_undefined_score": sum(
            1 for r in runs if "error" not in r and r["ari"] is None
        ),
        "mean_ari": float(np.mean(scored)) if scored else None,
        "std_ari": float(np.std(scored)) if scored else None,
        "min_ari": float(np.min(scored)) if scored else None,
        "max_ari": float(np.max(scored)) if scored else None,
        "mean_positive_pairs": float(np.mean(counted)) if counted else None,
    }


def sweep(base: ExperimentConfig, grid: dict) -> dict:
    """Run the base experiment once per point of a parameter grid.

    Grid keys name either a top-level field ("n_clusters", "runs",
    "base_seed") or a section field like "method.leaf_size" or "dataset.n".
    Cells share the base seed so runs pair up across cells.
    """
    if not grid:
        raise BadGrid("grid has no keys")
    for key, values in grid.items():
        if not isinstance(values, (list, tuple)) or len(values) == 0:
            raise BadGrid(f"grid key {key!r} has no values")
    keys = sorted(grid)
    cells = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        cfg = base
        for key, value in zip(keys, combo):
            cfg = _override(cfg, key, value)
        cells.append(
            {
                "values": dict(zip(keys, combo)),
                "experiment": run_experiment(cfg),
            }
        )
    return {
        "base_config": config_to_dict(base),
        "grid": {k: list(grid[k]) for k in keys},
        "cells": cells,
    }


_SECTIONS = ("dataset", "method", "siamese", "spectral", "kmeans")


def _override(config: ExperimentConfig, key, value) -> ExperimentConfig:
    if "." not in key:
        if key not in ("n_clusters", "runs", "base_seed"):
            raise BadGrid(f"unknown grid key {key!r}")
        return replace(config, **{key: value})
    section, field_name = key.split(".", 1)
    if section not in _SECTIONS:
        raise BadGrid(f"unknown grid key {key!r}")
    target = getattr(config, section)
    if target is None:  # unset spectral/kmeans: resolve defaults, then edit
        target = getattr(config, f"{section}_config")
    if field_name not in {f.name for f in dataclasses.fields(target)}:
        raise BadGrid(f"{section!r} has no field {field_name!r}")
    try:
        target = replace(target, **{field_name: value})
    except ValueError as exc:
        raise BadGrid(f"{key}={value!r}: {exc}") from exc
    return replace(config, **{section: target})


def config_to_dict(config: ExperimentConfig) -> dict:
    if isinstance(config.dataset, SyntheticSpec):
        dataset = {"type": "synthetic", **dataclasses.asdict(config.dataset)}
    else:
        dataset = {"type": "csv", **dataclasses.asdict(config.dataset)}
    siamese = dataclasses.asdict(config.siamese)
    siamese["hidden_sizes"] = list(siamese["hidden_sizes"])
    spectral = dataclasses.asdict(config.spectral_config)
    spectral["hidden_sizes"] = list(spectral["hidden_sizes"])
    return {
        "dataset": dataset,
        "method": dataclasses.asdict(config.method),
        "n_clusters": config.n_clusters,
        "runs": config.runs,
        "base_seed": config.base_seed,
        "siamese": siamese,
        "spectral": spectral,
        "kmeans": dataclasses.asdict(config.kmeans_config),
    }


def _section_from_dict(cls, name, data, **fixed):
    if not isinstance(data, dict):
        raise ConfigError(f"'{name}' must be a JSON object")
    data = dict(data)
    if "hidden_sizes" in data:
        data["hidden_sizes"] = tuple(data["hidden_sizes"])
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown {name} option(s): {', '.join(unknown)}")
    for key in set(data) & set(fixed):
        if data[key] != fixed[key]:
            raise ConfigError(
                f"{name}.{key} conflicts with the top-level value"
            )
        data.pop(key)
    try:
        return cls(**{**fixed, **data})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {name} config: {exc}") from exc


def _dataset_from_dict(data) -> SyntheticSpec | CsvSource:
    if not isinstance(data, dict):
        raise ConfigError("'dataset' must be a JSON object")
    data = dict(data)
    declared = data.pop("type", None)
    is_csv = "path" in data if declared is None else declared == "csv"
    if declared not in (None, "csv", "synthetic"):
        raise ConfigError(f"unknown dataset type {declared!r}")
    if is_csv:
        return _section_from_dict(CsvSource, "dataset", data)
    return _section_from_dict(SyntheticSpec, "dataset", data)


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build and validate an ExperimentConfig from parsed JSON."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = dict(data)
    known = {
        "dataset",
        "method",
        "n_clusters",
        "runs",
        "base_seed",
        "siamese",
        "spectral",
        "kmeans",
    }
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    if "dataset" not in data:
        raise ConfigError("config needs a 'dataset' section")
    try:
        n_clusters = int(data.get("n_clusters", 2))
        runs = int(data.get("runs", 10))
        base_seed = int(data.get("base_seed", 0))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scalar config value: {exc}") from exc

    config = ExperimentConfig(
        dataset=_dataset_from_dict(data["dataset"]),
        method=_section_from_dict(MethodConfig, "method", data.get("method", {})),
        n_clusters=n_clusters,
        runs=runs,
        base_seed=base_seed,
        siamese=_section_from_dict(
            SiameseConfig, "siamese", data.get("siamese", {})
        ),
        spectral=(
            _section_from_dict(
                SpectralConfig,
                "spectral",
                data["spectral"],
                n_clusters=n_clusters,
            )
            if "spectral" in data
            else None
        ),
        kmeans=(
            _section_from_dict(
                KmeansConfig, "kmeans", data["kmeans"], k=n_clusters
            )
            if "kmeans" in data
            else None
        ),
    )
    config.validate()
    return config


def _dataset_label(config_dict) -> str:
    ds = config_dict["dataset"]
    if ds.get("type") == "csv" or "path" in ds:
        return Path(ds["path"]).name
    return f"{ds['kind']}:n={ds['n']}"


def _method_label(config_dict) -> str:
    md = config_dict["method"]
    if md["kind"] == "knn":
        return f"knn:k={md['k']}"
    return f"rptree:leaf={md['leaf_size']}:{md['strategy']}"


def _write_csv(path, header, rows):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise IoError(str(exc), path=str(path)) from exc


_SUMMARY_FIELDS = (
    "runs_total",
    "runs_failed",
    "runs_undefined_score",
    "mean_ari",
    "std_ari",
    "min_ari",
    "max_ari",
    "mean_positive_pairs",
)

_RUN_METRICS = (
    "ari",
    "bandwidth",
    "final_twin_loss",
    "final_spectral_loss",
    "max_ortho_residual",
    "kmeans_inertia",
)


def _summary_row(record):
    cfg = record["config"]
    summary = record["summary"]
    row = [_dataset_label(cfg), _method_label(cfg)]
    row.extend(summary[k] for k in _SUMMARY_FIELDS)
    return row


def _run_metric_rows(record):
    rows = []
    for run in record["runs"]:
        if "error" in run:
            rows.append((run["run_index"], "error", run["error"]["stage"]))
            continue
        for metric in _RUN_METRICS:
            rows.append((run["run_index"], metric, run[metric]))
        for kind in ("positive", "negative", "raw_positive"):
            rows.append(
                (run["run_index"], f"{kind}_pairs", run["pair_counts"][kind])
            )
    return rows


def report(record: dict, outdir) -> dict:
    """Write results.json, summary.csv, and plotdata.csv for a record.

    Accepts either a single experiment record or a sweep record (detected by
    its "cells" key). Returns the paths written.
    """
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(str(exc), path=str(outdir)) from exc

    results_path = outdir / "results.json"
    summary_path = outdir / "summary.csv"
    plot_path = outdir / "plotdata.csv"
    write_json(results_path, record)

    if "cells" in record:
        cell_names = [
            ",".join(f"{k}={v}" for k, v in cell["values"].items())
            for cell in record["cells"]
        ]
        _write_csv(
            summary_path,
            ("cell", "dataset", "method", *_SUMMARY_FIELDS),
            [
                [name, *_summary_row(cell["experiment"])]
                for name, cell in zip(cell_names, record["cells"])
            ],
        )
        plot_rows = []
        for name, cell in zip(cell_names, record["cells"]):
            plot_rows.extend(
                (name, *row) for row in _run_metric_rows(cell["experiment"])
            )
        _write_csv(
            plot_path, ("cell", "run_index", "metric", "value"), plot_rows
        )
    else:
        _write_csv(
            summary_path,
            ("dataset", "method", *_SUMMARY_FIELDS),
            [_summary_row(record)],
        )
        _write_csv(
            plot_path,
            ("run_index", "metric", "value"),
            _run_metric_rows(record),
        )
    return {
        "results": str(results_path),
        "summary": str(summary_path),
        "plotdata": str(plot_path),
    }

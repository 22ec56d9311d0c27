"""Evaluation protocol: per-regime runs, the one-factor sweep, reference comparison.

A run is specified by a dataset pack, one or more embedding stores
(concatenated in order), a data regime (k10, k30 or full), an MLP
configuration and a list of seeds. Every seed trains on its own split
and evaluates on the pack's fixed test rows; results are persisted as
one JSON document per run, named by a content hash of the spec, so
sweeps can resume without re-running finished cells.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import mlp
from .errors import ComparisonError, DivergenceError, StoreError, UsageError
from .stores import concat_stores, l2_normalize_rows, read_store

REGIMES = ("k10", "k30", "full")
REGIME_K = {"k10": 10, "k30": 30}
DEFAULT_TOLERANCE = 0.015  # accuracy points/100; splits and seeds differ from the reference


@dataclass(frozen=True)
class ExperimentSpec:
    dataset_dir: str
    store_paths: tuple[str, ...]
    regime: str
    config: mlp.MlpConfig
    seeds: tuple[int, ...]
    normalize: bool = False

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise UsageError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if not self.store_paths:
            raise UsageError("at least one embedding store is required")
        if not self.seeds:
            raise UsageError("at least one seed is required")

    def to_dict(self) -> dict:
        return {
            "dataset_dir": str(self.dataset_dir),
            "store_paths": [str(p) for p in self.store_paths],
            "regime": self.regime,
            "config": self.config.to_dict(),
            "seeds": list(self.seeds),
            "normalize": self.normalize,
        }

    def content_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    model_tag: str
    dataset_name: str
    accuracies: tuple[float, ...]
    train_seconds: float

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self) -> float:
        return float(np.std(self.accuracies))

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "spec_hash": self.spec.content_hash(),
            "cell": {
                "model": self.model_tag,
                "dataset": self.dataset_name,
                "regime": self.spec.regime,
            },
            "seeds": list(self.spec.seeds),
            "accuracies": list(self.accuracies),
            "mean": self.mean_accuracy,
            "std": self.std_accuracy,
            "train_seconds": self.train_seconds,
        }


def _atomic_write_json(payload: dict, path: Path) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2) + "\n")
    os.replace(tmp, path)


def result_path(out_dir: str | Path, spec: ExperimentSpec) -> Path:
    return Path(out_dir) / f"result-{spec.content_hash()[:12]}.json"


def load_features(spec: ExperimentSpec, dataset: ds.Dataset) -> tuple[np.ndarray, str]:
    """Read, validate and concatenate the spec's stores against the dataset."""
    stores = [read_store(p, expected_digest=dataset.digest) for p in spec.store_paths]
    for path, store in zip(spec.store_paths, stores):
        if store.count != len(dataset.rows):
            raise StoreError(
                f"{path}: store has {store.count} vectors but dataset "
                f"{dataset.name!r} has {len(dataset.rows)} rows"
            )
    combined = stores[0] if len(stores) == 1 else concat_stores(stores)
    features = combined.matrix
    if spec.normalize:
        features = l2_normalize_rows(features)
    return features, combined.encoder_tag


def _train_indices(
    dataset: ds.Dataset, labels: ds.LabelIndex, regime: str, seed: int
) -> np.ndarray:
    if regime == "full":
        return np.arange(dataset.train_count)
    split = ds.few_shot_sample(dataset, labels, k=REGIME_K[regime], seed=seed)
    return np.asarray(split.row_indices)


def run_experiment(
    spec: ExperimentSpec,
    out_dir: str | Path | None = None,
    save_model_path: str | Path | None = None,
) -> ExperimentResult:
    """Train and evaluate one cell: every seed samples, trains, and is scored
    on the pack's fixed test rows. Persists the result JSON when out_dir is set;
    save_model_path checkpoints the first seed's trained model."""
    dataset = ds.load_pack(spec.dataset_dir)
    if dataset.train_count == len(dataset.rows):
        raise UsageError(
            f"dataset {dataset.name!r} has no test region; experiments need an ingested pack"
        )
    labels = ds.build_label_index(dataset)
    features, model_tag = load_features(spec, dataset)

    y_all = np.array([labels.id_of(r.label) for r in dataset.rows], dtype=np.int64)
    x_test = features[dataset.train_count :]
    y_test = y_all[dataset.train_count :]

    accuracies: list[float] = []
    train_seconds = 0.0
    for run_index, seed in enumerate(spec.seeds):
        started = time.perf_counter()
        idx = _train_indices(dataset, labels, spec.regime, seed)
        config = mlp.config_with_seed(spec.config, seed)
        model = mlp.init_model(features.shape[1], labels.num_classes, config)
        model, _ = mlp.train(model, features[idx], y_all[idx], config)
        accuracies.append(mlp.evaluate(model, x_test, y_test))
        train_seconds += time.perf_counter() - started
        if run_index == 0 and save_model_path is not None:
            mlp.save_model(model, save_model_path)

    result = ExperimentResult(
        spec=spec,
        model_tag=model_tag,
        dataset_name=dataset.name,
        accuracies=tuple(accuracies),
        train_seconds=train_seconds,
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write_json(result.to_dict(), result_path(out_dir, spec))
    return result


# --- hyperparameter sweep -------------------------------------------------

SWEEP_DROPOUTS = (0.75, 0.5, 0.25)
SWEEP_HIDDEN_LAYERS = (0, 1, 2)
SWEEP_HIDDEN_DIMS = (128, 256, 512, 1024)
PIVOT = (0.75, 1, 512)  # (dropout, hidden layers, hidden dim)


def config_label(config: mlp.MlpConfig) -> str:
    """Short label naming the one factor a sweep config changes from the pivot."""
    r0, h0, d0 = PIVOT
    parts = []
    if config.dropout_rate != r0:
        parts.append(f"r={config.dropout_rate:g}")
    if config.hidden_layers != h0:
        parts.append(f"H={config.hidden_layers}")
    if config.hidden_dim != d0:
        parts.append(f"h={config.hidden_dim}")
    base = ",".join(parts) if parts else "pivot"
    return f"{config.optimizer}/{base}"


def sweep_grid(pivot: mlp.MlpConfig) -> list[mlp.MlpConfig]:
    """One-factor-at-a-time variants of the pivot, each with both optimizers.

    Varies dropout over {0.75, 0.5, 0.25}, depth over {0, 1, 2} and
    width over {128, 256, 512, 1024}; duplicates (the pivot reappears in
    every axis) are removed, leaving 8 settings, then each runs with SGD
    and with Adam at its own default learning rate: 16 configs total.
    """
    if (pivot.dropout_rate, pivot.hidden_layers, pivot.hidden_dim) != PIVOT or (
        pivot.optimizer != "sgd" or pivot.lr0 != mlp.SGD_DEFAULT_LR
    ):
        raise UsageError(
            "sweep must start from the pivot (H=1, h=512, r=0.75, sgd lr 0.7)"
        )
    settings: list[tuple[float, int, int]] = []
    for r in SWEEP_DROPOUTS:
        settings.append((r, pivot.hidden_layers, pivot.hidden_dim))
    for h_layers in SWEEP_HIDDEN_LAYERS:
        settings.append((pivot.dropout_rate, h_layers, pivot.hidden_dim))
    for h_dim in SWEEP_HIDDEN_DIMS:
        settings.append((pivot.dropout_rate, pivot.hidden_layers, h_dim))
    unique = [PIVOT] + [s for s in dict.fromkeys(settings) if s != PIVOT]

    grid: list[mlp.MlpConfig] = []
    for optimizer in ("sgd", "adam"):
        for r, h_layers, h_dim in unique:
            grid.append(
                replace(
                    pivot,
                    dropout_rate=r,
                    hidden_layers=h_layers,
                    hidden_dim=h_dim,
                    optimizer=optimizer,
                    initial_lr=None,
                )
            )
    return grid


@dataclass(frozen=True)
class SweepReport:
    regime: str
    entries: tuple[tuple[str, float], ...]  # (config label, mean accuracy)
    failures: tuple[tuple[str, str], ...]  # (config label, error message)

    @property
    def avg(self) -> float:
        return float(np.mean([a for _, a in self.entries]))

    @property
    def max(self) -> float:
        return float(np.max([a for _, a in self.entries]))

    @property
    def min(self) -> float:
        return float(np.min([a for _, a in self.entries]))

    def formatted(self) -> str:
        """Accuracy spread as ``avg (max) [min]`` in percent, one decimal."""
        return f"{100 * self.avg:.1f} ({100 * self.max:.1f}) [{100 * self.min:.1f}]"

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "configs": [{"label": l, "mean_accuracy": a} for l, a in self.entries],
            "failures": [{"label": l, "error": e} for l, e in self.failures],
            "avg": self.avg,
            "max": self.max,
            "min": self.min,
            "formatted": self.formatted(),
            "aggregate_excludes_failures": bool(self.failures),
        }


def _sweep_cell(args: tuple) -> tuple[str, ExperimentResult | None, str | None]:
    spec, out_dir = args
    label = config_label(spec.config)
    try:
        return label, run_experiment(spec, out_dir=out_dir), None
    except DivergenceError as exc:
        return label, None, str(exc)


def run_sweep(
    dataset_dir: str | Path,
    store_paths: list[str],
    regime: str,
    seeds: list[int],
    pivot: mlp.MlpConfig | None = None,
    out_dir: str | Path | None = None,
    jobs: int = 1,
    normalize: bool = False,
) -> SweepReport:
    """Run every grid config; diverged runs are recorded, never dropped silently."""
    pivot = pivot or mlp.pivot_config()
    specs = [
        ExperimentSpec(
            dataset_dir=str(dataset_dir),
            store_paths=tuple(str(p) for p in store_paths),
            regime=regime,
            config=config,
            seeds=tuple(seeds),
            normalize=normalize,
        )
        for config in sweep_grid(pivot)
    ]

    pending: list[tuple[ExperimentSpec, str | None]] = []
    finished: dict[str, ExperimentResult] = {}
    for spec in specs:
        label = config_label(spec.config)
        if out_dir is not None:
            cached = _load_cached_result(spec, out_dir)
            if cached is not None:
                finished[label] = cached
                continue
        pending.append((spec, str(out_dir) if out_dir is not None else None))

    entries: list[tuple[str, float]] = []
    failures: list[tuple[str, str]] = []
    if jobs > 1 and pending:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_sweep_cell, pending))
    else:
        outcomes = [_sweep_cell(item) for item in pending]
    for label, result, error in outcomes:
        if error is not None:
            failures.append((label, error))
        else:
            finished[label] = result

    for spec in specs:
        label = config_label(spec.config)
        if label in finished:
            entries.append((label, finished[label].mean_accuracy))
    report = SweepReport(
        regime=regime, entries=tuple(entries), failures=tuple(failures)
    )
    if out_dir is not None:
        _atomic_write_json(report.to_dict(), Path(out_dir) / "sweep-report.json")
    return report


def _load_cached_result(spec: ExperimentSpec, out_dir: str | Path) -> ExperimentResult | None:
    path = result_path(out_dir, spec)
    if not path.is_file():
        return None
    try:
        obj = json.loads(path.read_text())
        if obj.get("spec_hash") != spec.content_hash():
            return None
        return ExperimentResult(
            spec=spec,
            model_tag=obj["cell"]["model"],
            dataset_name=obj["cell"]["dataset"],
            accuracies=tuple(float(a) for a in obj["accuracies"]),
            train_seconds=float(obj["train_seconds"]),
        )
    except (json.JSONDecodeError, KeyError, ValueError):
        return None


# --- reference comparison --------------------------------------------------

@dataclass(frozen=True)
class CellComparison:
    model: str
    dataset: str
    regime: str
    measured: float
    reference: float
    tolerance: float

    @property
    def delta(self) -> float:
        return self.measured - self.reference

    @property
    def passed(self) -> bool:
        return abs(self.delta) <= self.tolerance


@dataclass(frozen=True)
class ComparisonReport:
    cells: tuple[CellComparison, ...]

    @property
    def empty(self) -> bool:
        return not self.cells

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.cells)


def load_reference_table(path: str | Path) -> dict[tuple[str, str, str], float]:
    """Reference CSV with columns model,dataset,regime,accuracy (accuracy in [0,1])."""
    import csv

    table: dict[tuple[str, str, str], float] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        required = {"model", "dataset", "regime", "accuracy"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ComparisonError(
                f"{path}: reference table must have columns model,dataset,regime,accuracy"
            )
        for row in reader:
            key = (row["model"], row["dataset"], row["regime"])
            table[key] = float(row["accuracy"])
    return table


def monotone_trend_flags(results: list[dict]) -> list[str]:
    """Soft check: more data should not hurt (full >= k30 >= k10 per cell).

    Violations are flagged for the report, never asserted: small-seed
    noise can legitimately break the trend on real embeddings.
    """
    order = {"k10": 0, "k30": 1, "full": 2}
    by_cell: dict[tuple[str, str], dict[str, float]] = {}
    for obj in results:
        cell = obj.get("cell", {})
        key = (cell.get("model"), cell.get("dataset"))
        by_cell.setdefault(key, {})[cell.get("regime")] = float(obj["mean"])
    flags = []
    for (model, dataset), regimes in sorted(by_cell.items()):
        present = sorted(regimes, key=lambda r: order.get(r, 99))
        for lo, hi in zip(present, present[1:]):
            if regimes[hi] < regimes[lo]:
                flags.append(
                    f"{model}/{dataset}: accuracy drops from {lo} ({regimes[lo]:.4f}) "
                    f"to {hi} ({regimes[hi]:.4f})"
                )
    return flags


def compare_to_reference(
    results: list[dict],
    reference_path: str | Path,
    tolerance: float = DEFAULT_TOLERANCE,
) -> ComparisonReport:
    """Per-cell deltas of measured mean accuracies against the reference table.

    ``results`` are result-JSON documents (as produced by run_experiment).
    A result whose cell is missing from the reference is an error, not a
    silent skip.
    """
    reference = load_reference_table(reference_path)
    cells = []
    for obj in results:
        cell = obj.get("cell", {})
        key = (cell.get("model"), cell.get("dataset"), cell.get("regime"))
        if key not in reference:
            raise ComparisonError(
                f"no reference cell for model={key[0]!r} dataset={key[1]!r} regime={key[2]!r}"
            )
        cells.append(
            CellComparison(
                model=key[0],
                dataset=key[1],
                regime=key[2],
                measured=float(obj["mean"]),
                reference=reference[key],
                tolerance=tolerance,
            )
        )
    return ComparisonReport(cells=tuple(cells))

"""CPU efficiency measurements: encoding throughput and train+evaluate time.

All timings use the monotonic clock, run at least one warm-up pass, and
report the median of at least three repetitions. Reference numbers from
the original study are shipped as context (hardware differs), never
asserted: encoding on a 2.3 GHz dual-core i5 reached 58.3 sentences/s
(ConveRT), 53.5 (USE) and 2.4 (BERT-Large) in batches of 15, and the
10-shot banking task trained end-to-end in 65-73 s on that CPU.
"""

from __future__ import annotations

import json
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import mlp
from ._kernels import available_backends
from .errors import BenchmarkError
from .experiments import ExperimentSpec, load_features, _train_indices

DEFAULT_BATCH_SIZE = 15
MIN_REPETITIONS = 3
MIN_WARMUP = 1


@dataclass(frozen=True)
class BenchResult:
    name: str
    hardware: str
    batch_size: int | None
    repetitions: int
    median: float
    raw: tuple[float, ...]
    unit: str  # "sentences_per_second" or "seconds"

    def __post_init__(self):
        if not self.hardware:
            raise BenchmarkError("a hardware note is mandatory for benchmark results")
        if self.repetitions < MIN_REPETITIONS:
            raise BenchmarkError(
                f"need >= {MIN_REPETITIONS} repetitions, got {self.repetitions}"
            )
        if not (np.isfinite(self.median) and self.median > 0):
            raise BenchmarkError(f"non-positive or non-finite measurement: {self.median}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "hardware": self.hardware,
            "batch_size": self.batch_size,
            "repetitions": self.repetitions,
            "median": self.median,
            "raw": list(self.raw),
            "unit": self.unit,
        }


def detect_hardware() -> str:
    """Best-effort CPU model + logical core count; overridable via --hardware."""
    import os
    import platform

    model = ""
    try:
        for line in Path("/proc/cpuinfo").read_text().splitlines():
            if line.lower().startswith("model name"):
                model = line.split(":", 1)[1].strip()
                break
    except OSError:
        pass
    if not model:
        model = platform.processor() or platform.machine() or "unknown CPU"
    return f"{model}, {os.cpu_count()} logical cores"


class StoreLookupProvider:
    """File-backed provider: 'encoding' a batch is looking vectors up by row index."""

    def __init__(self, store):
        self.store = store
        self.name = f"store-lookup[{store.encoder_tag}]"

    def items(self, limit: int | None = None) -> list[int]:
        n = self.store.count if limit is None else min(limit, self.store.count)
        return list(range(n))

    def encode_batch(self, batch: list[int]) -> np.ndarray:
        return self.store.matrix[batch]


class HttpEncodeProvider:
    """End-to-end provider hitting an /encode endpoint with JSON batches."""

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.name = f"http-encode[{self.endpoint}]"

    def encode_batch(self, batch: list[str]) -> np.ndarray:
        payload = json.dumps({"texts": batch}).encode("utf-8")
        request = urllib.request.Request(
            f"{self.endpoint}/encode",
            data=payload,
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                body = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
            raise BenchmarkError(f"encoding provider failed: {exc}") from exc
        return np.asarray(body["embeddings"], dtype=np.float32)


def _timed_repetitions(fn, repetitions: int, warmup: int) -> list[float]:
    if repetitions < MIN_REPETITIONS:
        raise BenchmarkError(f"need >= {MIN_REPETITIONS} repetitions, got {repetitions}")
    if warmup < MIN_WARMUP:
        raise BenchmarkError(f"need >= {MIN_WARMUP} warm-up run, got {warmup}")
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(repetitions):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return samples


def bench_encoding(
    provider,
    items: list,
    batch_size: int = DEFAULT_BATCH_SIZE,
    repetitions: int = 5,
    warmup: int = 1,
    hardware: str | None = None,
) -> BenchResult:
    """Median sentences/second encoding ``items`` in fixed-size batches."""
    if not items:
        raise BenchmarkError("nothing to encode")
    batches = [items[i : i + batch_size] for i in range(0, len(items), batch_size)]

    def pass_once():
        for batch in batches:
            provider.encode_batch(batch)

    elapsed = _timed_repetitions(pass_once, repetitions, warmup)
    throughputs = [len(items) / t for t in elapsed]
    return BenchResult(
        name=f"encoding/{provider.name}",
        hardware=hardware or detect_hardware(),
        batch_size=batch_size,
        repetitions=repetitions,
        median=float(np.median(throughputs)),
        raw=tuple(throughputs),
        unit="sentences_per_second",
    )


def bench_training(
    spec: ExperimentSpec,
    repetitions: int = 3,
    warmup: int = 1,
    hardware: str | None = None,
) -> BenchResult:
    """Median wall seconds for sample -> train -> evaluate on pre-stored features.

    Store and dataset loading happen once, outside the timed region, and
    no result files are written while the clock runs.
    """
    dataset = ds.load_pack(spec.dataset_dir)
    labels = ds.build_label_index(dataset)
    features, _ = load_features(spec, dataset)
    y_all = np.array([labels.id_of(r.label) for r in dataset.rows], dtype=np.int64)
    x_test = features[dataset.train_count :]
    y_test = y_all[dataset.train_count :]
    seed = spec.seeds[0]

    def run_once():
        idx = _train_indices(dataset, labels, spec.regime, seed)
        config = mlp.config_with_seed(spec.config, seed)
        model = mlp.init_model(features.shape[1], labels.num_classes, config)
        model, _ = mlp.train(model, features[idx], y_all[idx], config)
        mlp.evaluate(model, x_test, y_test)

    elapsed = _timed_repetitions(run_once, repetitions, warmup)
    return BenchResult(
        name=f"training/{spec.regime}",
        hardware=hardware or detect_hardware(),
        batch_size=None,
        repetitions=repetitions,
        median=float(np.median(elapsed)),
        raw=tuple(elapsed),
        unit="seconds",
    )


def bench_kernels(
    rows: int = 770,
    input_dim: int = 1024,
    num_classes: int = 77,
    iterations: int = 50,
    repetitions: int = 3,
    warmup: int = 1,
    hardware: str | None = None,
) -> list[BenchResult]:
    """Compare the available kernel backends on a short training run.

    This is the compiled-extension-versus-fallback comparison: identical
    work dispatched through each backend, reported side by side.
    """
    import os

    rng = np.random.default_rng(0)
    x = rng.standard_normal((rows, input_dim), dtype=np.float32)
    y = rng.integers(0, num_classes, size=rows).astype(np.int64)

    results = []
    previous = os.environ.get("FSI_BACKEND")
    try:
        for optimizer in ("sgd", "adam"):
            config = mlp.MlpConfig(iterations=iterations, seed=0, optimizer=optimizer)
            for name in sorted(available_backends()):
                os.environ["FSI_BACKEND"] = name

                def run_once():
                    model = mlp.init_model(input_dim, num_classes, config)
                    mlp.train(model, x, y, config)

                elapsed = _timed_repetitions(run_once, repetitions, warmup)
                results.append(
                    BenchResult(
                        name=f"kernels/{name}/{optimizer}",
                        hardware=hardware or detect_hardware(),
                        batch_size=None,
                        repetitions=repetitions,
                        median=float(np.median(elapsed)),
                        raw=tuple(elapsed),
                        unit="seconds",
                    )
                )
    finally:
        if previous is None:
            os.environ.pop("FSI_BACKEND", None)
        else:
            os.environ["FSI_BACKEND"] = previous
    return results


def reference_context() -> dict:
    """The original study's published timings, for side-by-side display only."""
    path = Path(__file__).parent / "data" / "timing_context.json"
    return json.loads(path.read_text())

"""Synthetic Gaussian-blob fixture: a separable stand-in for real encoders.

The fixture is a full dataset pack plus a matching embedding store, so
the whole pipeline (sampling, training, sweeps, benchmarks, CLI) runs
with no encoder or network access.

Geometry: class means are random orthonormal directions scaled so every
pair of means is exactly ``separation`` apart, and the isotropic noise
has per-component sigma 1/sqrt(dim), giving each blob a radial standard
deviation of 1. Separation is therefore measured in units of the blob's
radial sigma; at the default of 10 the classes are far apart relative
to both cluster spread and few-shot estimation error, so any correct
classifier configuration must score 100% and a miss indicates a
training bug, not statistical noise. Means are dense on purpose: real
encoder embeddings spread class evidence over many coordinates, and
dense means keep the low-learning-rate Adam sweep configurations
trainable within their step budget.

Generation is seeded and deterministic: the same arguments always
produce identical pack and store files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dataset as ds
from .stores import EmbeddingStore, write_store

DEFAULT_CLASSES = 77
DEFAULT_DIM = 512
DEFAULT_SEPARATION = 10.0
DEFAULT_SEED = 20260808
STORE_FILENAME = "blob.embs"


@dataclass(frozen=True)
class BlobFixture:
    pack_dir: Path
    store_path: Path
    classes: int
    dim: int


def class_means(
    classes: int, dim: int, separation: float, seed: int = DEFAULT_SEED
) -> np.ndarray:
    """Dense class means with ||m_i - m_j|| == separation for every i != j.

    Random directions are orthonormalized (QR with a fixed sign
    convention), so scaling by separation/sqrt(2) makes all pairwise
    distances exact.
    """
    if classes > dim:
        raise ValueError(f"need dim >= classes, got {classes} > {dim}")
    rng = np.random.default_rng(np.random.SeedSequence(seed & (2**64 - 1), spawn_key=(2,)))
    raw = rng.standard_normal((dim, classes))
    q, r = np.linalg.qr(raw)
    q = q * np.sign(np.diag(r))
    return (separation / np.sqrt(2.0)) * q.T


def noise_sigma(dim: int) -> float:
    """Per-component noise sigma giving each blob a radial std of 1."""
    return 1.0 / np.sqrt(dim)


def make_blob_fixture(
    out_dir: str | Path,
    classes: int = DEFAULT_CLASSES,
    dim: int = DEFAULT_DIM,
    train_per_class: int = 40,
    test_per_class: int = 10,
    separation: float = DEFAULT_SEPARATION,
    seed: int = DEFAULT_SEED,
) -> BlobFixture:
    """Write a dataset pack (full.csv + meta.json) and its blob store."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(np.random.SeedSequence(seed & (2**64 - 1)))
    means = class_means(classes, dim, separation, seed=seed)

    label_names = [f"intent_{c:03d}" for c in range(classes)]
    train_labels = np.repeat(np.arange(classes), train_per_class)
    rng.shuffle(train_labels)  # realistic file order: train rows are not grouped
    test_labels = np.repeat(np.arange(classes), test_per_class)
    all_labels = np.concatenate([train_labels, test_labels])

    vectors = means[all_labels] + noise_sigma(dim) * rng.standard_normal(
        (all_labels.size, dim)
    )
    rows = [
        ds.Row(index=i, text=f"blob sample {i} of {label_names[c]}", label=label_names[c])
        for i, c in enumerate(all_labels)
    ]

    csv_bytes = ds.canonical_csv_bytes(rows)
    csv_path = out_dir / ds.PACK_FILENAME
    csv_path.write_bytes(csv_bytes)
    digest = hashlib.sha256(csv_bytes).digest()
    meta = {
        "name": "blob-fixture",
        "format": "csv",
        "digest": digest.hex(),
        "rows": len(rows),
        "train_count": int(train_labels.size),
        "test_count": int(test_labels.size),
        "num_labels": classes,
    }
    (out_dir / ds.META_FILENAME).write_text(json.dumps(meta, indent=2) + "\n")

    store = EmbeddingStore(
        dataset_digest=digest,
        matrix=vectors.astype(np.float32),
        encoder_tag="blob",
    )
    store_path = out_dir / STORE_FILENAME
    write_store(store, store_path)
    return BlobFixture(pack_dir=out_dir, store_path=store_path, classes=classes, dim=dim)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m fewshot_intent.fixtures",
        description="Materialize the synthetic blob fixture pack and store.",
    )
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--classes", type=int, default=DEFAULT_CLASSES)
    parser.add_argument("--dim", type=int, default=DEFAULT_DIM)
    parser.add_argument("--train-per-class", type=int, default=40)
    parser.add_argument("--test-per-class", type=int, default=10)
    parser.add_argument("--separation", type=float, default=DEFAULT_SEPARATION)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    args = parser.parse_args(argv)
    fixture = make_blob_fixture(
        args.out,
        classes=args.classes,
        dim=args.dim,
        train_per_class=args.train_per_class,
        test_per_class=args.test_per_class,
        separation=args.separation,
        seed=args.seed,
    )
    print(f"wrote fixture pack to {fixture.pack_dir} (store: {fixture.store_path.name})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Intent-detection corpora: loading, validation, label indexing, k-shot sampling.

A dataset is an ordered list of (utterance, intent) rows read from a
single source file, either CSV with a ``text,category`` header or JSONL
with ``text``/``category`` keys. Rows keep their file order and the
dataset carries a SHA-256 digest of the raw file bytes so downstream
artifacts (embedding stores, split files) can be bound to exact content.

Train/test boundaries come from separate released files. ``ingest_pack``
merges a train file and a test file into one canonical CSV (train rows
first) plus a ``meta.json`` recording the boundary; test rows are never
re-split after that point.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DatasetError, SamplingError, UsageError
from ._rng import SplitMix64

FORMATS = ("csv", "jsonl")
CSV_HEADER = ("text", "category")
META_FILENAME = "meta.json"
PACK_FILENAME = "full.csv"


@dataclass(frozen=True)
class Row:
    index: int
    text: str
    label: str


@dataclass(frozen=True)
class Dataset:
    """Immutable corpus bound to the digest of its source file.

    ``train_count`` marks the train/test boundary: rows[:train_count]
    are training rows, the remainder is the fixed test set. A dataset
    loaded from a single raw file has no test region (train_count ==
    len(rows)).
    """

    name: str
    rows: tuple[Row, ...]
    digest: bytes
    train_count: int

    def __post_init__(self):
        if len(self.digest) != 32:
            raise DatasetError(f"digest must be 32 bytes, got {len(self.digest)}")
        if not 0 <= self.train_count <= len(self.rows):
            raise DatasetError(
                f"train_count {self.train_count} outside 0..{len(self.rows)}"
            )

    @property
    def digest_hex(self) -> str:
        return self.digest.hex()

    @property
    def train_rows(self) -> tuple[Row, ...]:
        return self.rows[: self.train_count]

    @property
    def test_rows(self) -> tuple[Row, ...]:
        return self.rows[self.train_count :]


@dataclass(frozen=True)
class LabelIndex:
    """Bijective label -> class id mapping, ids in lexicographic label order."""

    labels: tuple[str, ...]

    @property
    def num_classes(self) -> int:
        return len(self.labels)

    def id_of(self, label: str) -> int:
        try:
            return self._mapping[label]
        except KeyError:
            raise DatasetError(f"label {label!r} not in index") from None

    @property
    def _mapping(self) -> dict[str, int]:
        # Built lazily; frozen dataclass, so cache on the instance dict via object.__setattr__.
        cached = self.__dict__.get("_map_cache")
        if cached is None:
            cached = {label: i for i, label in enumerate(self.labels)}
            object.__setattr__(self, "_map_cache", cached)
        return cached


@dataclass(frozen=True)
class FewShotSplit:
    """Balanced k-shot selection of train rows, reproducible from (digest, k, seed)."""

    dataset_digest: bytes
    k: int
    seed: int
    row_indices: tuple[int, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "dataset_digest": self.dataset_digest.hex(),
                "k": self.k,
                "seed": self.seed,
                "row_indices": list(self.row_indices),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "FewShotSplit":
        try:
            obj = json.loads(text)
            return cls(
                dataset_digest=bytes.fromhex(obj["dataset_digest"]),
                k=int(obj["k"]),
                seed=int(obj["seed"]),
                row_indices=tuple(int(i) for i in obj["row_indices"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise DatasetError(f"malformed split file: {exc}") from exc


def dataset_digest(path: str | Path) -> bytes:
    """SHA-256 over the raw bytes of a file."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.digest()


def _rows_from_csv(path: Path) -> list[Row]:
    rows: list[Row] = []
    with open(path, "r", encoding="utf-8-sig", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file, expected 'text,category' header")
        if tuple(header) != CSV_HEADER:
            raise DatasetError(
                f"{path}:1: expected header 'text,category', got {','.join(header)!r}"
            )
        for record in reader:
            line = reader.line_num
            if len(record) != 2:
                raise DatasetError(
                    f"{path}:{line}: expected 2 fields (text,category), got {len(record)}"
                )
            text, label = record
            if not text:
                raise DatasetError(f"{path}:{line}: empty utterance text")
            if not label:
                raise DatasetError(f"{path}:{line}: empty category")
            rows.append(Row(index=len(rows), text=text, label=label))
    return rows


def _rows_from_jsonl(path: Path) -> list[Row]:
    rows: list[Row] = []
    with open(path, "r", encoding="utf-8-sig") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict) or "text" not in obj or "category" not in obj:
                raise DatasetError(
                    f"{path}:{line_no}: object must have 'text' and 'category' keys"
                )
            text, label = obj["text"], obj["category"]
            if not isinstance(text, str) or not text:
                raise DatasetError(f"{path}:{line_no}: empty or non-string text")
            if not isinstance(label, str) or not label:
                raise DatasetError(f"{path}:{line_no}: empty or non-string category")
            rows.append(Row(index=len(rows), text=text, label=label))
    return rows


def load_dataset(
    path: str | Path,
    format: str = "csv",
    name: str | None = None,
    train_count: int | None = None,
) -> Dataset:
    """Load one source file. Rows keep file order; digest covers raw bytes."""
    path = Path(path)
    if format not in FORMATS:
        raise UsageError(f"unknown dataset format {format!r}, expected one of {FORMATS}")
    if not path.is_file():
        raise DatasetError(f"dataset file not found: {path}")
    digest = dataset_digest(path)
    rows = _rows_from_csv(path) if format == "csv" else _rows_from_jsonl(path)
    if not rows:
        raise DatasetError(f"{path}: dataset has no rows")
    return Dataset(
        name=name or path.stem,
        rows=tuple(rows),
        digest=digest,
        train_count=len(rows) if train_count is None else train_count,
    )


def build_label_index(dataset: Dataset) -> LabelIndex:
    """Deterministic label -> id mapping over the dataset's distinct labels."""
    if not dataset.rows:
        raise DatasetError("cannot index an empty dataset")
    return LabelIndex(labels=tuple(sorted({row.label for row in dataset.rows})))


def canonical_csv_bytes(rows: list[Row] | tuple[Row, ...]) -> bytes:
    """Serialize rows to the canonical CSV form (RFC-4180: quoting, CRLF endings)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([row.text, row.label])
    return buf.getvalue().encode("utf-8")


def write_canonical_csv(dataset: Dataset, path: str | Path) -> bytes:
    """Write rows to canonical CSV; returns the digest of the written bytes."""
    data = canonical_csv_bytes(dataset.rows)
    Path(path).write_bytes(data)
    return hashlib.sha256(data).digest()


def few_shot_sample(
    dataset: Dataset, labels: LabelIndex, k: int, seed: int
) -> FewShotSplit:
    """Draw a balanced k-shot split of the training rows.

    Algorithm (fixed, for cross-implementation reproducibility): one
    SplitMix64 stream seeded with ``seed``; classes visited in ascending
    class-id order; each class's candidate train-row indices listed in
    ascending order and sampled without replacement by partial
    Fisher-Yates using unbiased bounded draws. The union is returned
    sorted.
    """
    if k <= 0:
        raise UsageError(f"k must be positive, got {k}")
    by_class: dict[int, list[int]] = {c: [] for c in range(labels.num_classes)}
    for row in dataset.train_rows:
        by_class[labels.id_of(row.label)].append(row.index)

    stream = SplitMix64(seed)
    chosen: list[int] = []
    for class_id in range(labels.num_classes):
        candidates = by_class[class_id]
        if len(candidates) < k:
            raise SamplingError(
                f"class {labels.labels[class_id]!r} has only {len(candidates)} "
                f"training rows, need {k}"
            )
        chosen.extend(stream.choose(candidates, k))
    return FewShotSplit(
        dataset_digest=dataset.digest,
        k=k,
        seed=seed,
        row_indices=tuple(sorted(chosen)),
    )


def ingest_pack(
    train_path: str | Path,
    test_path: str | Path,
    out_dir: str | Path,
    format: str = "csv",
    name: str | None = None,
) -> Dataset:
    """Merge released train and test files into a canonical pack.

    Writes ``full.csv`` (train rows then test rows, canonical form) and
    ``meta.json`` with the train/test boundary. All downstream artifacts
    bind to the digest of ``full.csv``.
    """
    train = load_dataset(train_path, format=format)
    test = load_dataset(test_path, format=format)
    pack_name = name or Path(train_path).parent.name or "dataset"
    merged = list(train.rows) + [
        Row(index=train.train_count + i, text=r.text, label=r.label)
        for i, r in enumerate(test.rows)
    ]

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / PACK_FILENAME
    data = canonical_csv_bytes(merged)
    csv_path.write_bytes(data)
    digest = hashlib.sha256(data).digest()

    labels = sorted({r.label for r in merged})
    meta = {
        "name": pack_name,
        "format": "csv",
        "digest": digest.hex(),
        "rows": len(merged),
        "train_count": len(train.rows),
        "test_count": len(test.rows),
        "num_labels": len(labels),
    }
    (out_dir / META_FILENAME).write_text(json.dumps(meta, indent=2) + "\n")
    return load_pack(out_dir)


def load_pack(pack_dir: str | Path) -> Dataset:
    """Load a canonical pack directory (full.csv + meta.json)."""
    pack_dir = Path(pack_dir)
    meta_path = pack_dir / META_FILENAME
    csv_path = pack_dir / PACK_FILENAME
    if not meta_path.is_file() or not csv_path.is_file():
        raise DatasetError(
            f"{pack_dir}: not a dataset pack (expected {PACK_FILENAME} and {META_FILENAME})"
        )
    try:
        meta = json.loads(meta_path.read_text())
        train_count = int(meta["train_count"])
        name = str(meta["name"])
        recorded = str(meta["digest"])
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise DatasetError(f"{meta_path}: malformed pack metadata: {exc}") from exc
    dataset = load_dataset(csv_path, format="csv", name=name, train_count=train_count)
    if dataset.digest_hex != recorded:
        raise DatasetError(
            f"{csv_path}: content digest {dataset.digest_hex[:12]}... does not match "
            f"meta.json ({recorded[:12]}...); pack was modified after ingest"
        )
    return dataset

"""Fixed sentence-embedding stores: an immutable float32 matrix per dataset.

Vectors come from external encoders and are consumed raw (no
normalization by default). A store is keyed by dataset row index and
carries the dataset digest so a store/dataset mismatch is caught at
load time rather than producing silently misaligned features.

File format (bit-exact, little-endian, no padding):

    magic   4 bytes  b"EMBS"
    version u32      1
    digest  32 bytes dataset SHA-256
    dim     u32
    count   u64
    tag_len u16      followed by tag_len UTF-8 bytes (encoder tag)
    payload count * dim float32, row-major
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import StoreError

MAGIC = b"EMBS"
VERSION = 1
_HEADER_FMT = "<4sI32sIQH"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)


@dataclass(frozen=True)
class EmbeddingStore:
    dataset_digest: bytes
    matrix: np.ndarray  # (count, dim) float32, C-contiguous
    encoder_tag: str

    def __post_init__(self):
        if len(self.dataset_digest) != 32:
            raise StoreError(
                f"dataset digest must be 32 bytes, got {len(self.dataset_digest)}"
            )
        m = self.matrix
        if m.ndim != 2 or m.dtype != np.float32:
            raise StoreError(
                f"matrix must be 2-D float32, got {m.ndim}-D {m.dtype}"
            )
        if m.shape[1] < 1:
            raise StoreError("vector dimension must be >= 1")
        if not np.isfinite(m).all():
            raise StoreError("store contains non-finite values")
        if not m.flags.c_contiguous:
            object.__setattr__(self, "matrix", np.ascontiguousarray(m))
        self.matrix.setflags(write=False)

    @property
    def count(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def lookup(store: EmbeddingStore, row_index: int) -> np.ndarray:
    """Stored vector for a dataset row, unmodified (read-only view)."""
    if not 0 <= row_index < store.count:
        raise StoreError(
            f"row index {row_index} out of range for store of {store.count} vectors"
        )
    return store.matrix[row_index]


def write_store(store: EmbeddingStore, path: str | Path) -> None:
    tag = store.encoder_tag.encode("utf-8")
    if len(tag) > 0xFFFF:
        raise StoreError(f"encoder tag too long ({len(tag)} bytes)")
    header = struct.pack(
        _HEADER_FMT, MAGIC, VERSION, store.dataset_digest, store.dim, store.count, len(tag)
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(tag)
        f.write(np.ascontiguousarray(store.matrix, dtype="<f4").tobytes())


def read_store(path: str | Path, expected_digest: bytes | None = None) -> EmbeddingStore:
    """Read and validate a store file; bit-exact inverse of write_store.

    When ``expected_digest`` is given, a mismatch against the embedded
    dataset digest is an error.
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER_SIZE:
        raise StoreError(f"{path}: truncated store file ({len(data)} bytes)")
    magic, version, digest, dim, count, tag_len = struct.unpack_from(_HEADER_FMT, data)
    if magic != MAGIC:
        raise StoreError(f"{path}: bad magic {magic!r}, not an embedding store")
    if version != VERSION:
        raise StoreError(f"{path}: unsupported store version {version}")
    offset = _HEADER_SIZE
    if len(data) < offset + tag_len:
        raise StoreError(f"{path}: truncated store file (encoder tag cut short)")
    try:
        tag = data[offset : offset + tag_len].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise StoreError(f"{path}: encoder tag is not valid UTF-8") from exc
    offset += tag_len
    expected_payload = count * dim * 4
    if len(data) != offset + expected_payload:
        raise StoreError(
            f"{path}: payload is {len(data) - offset} bytes, expected {expected_payload} "
            f"({count} x {dim} float32)"
        )
    matrix = np.frombuffer(data, dtype="<f4", count=count * dim, offset=offset)
    matrix = matrix.reshape(count, dim).astype(np.float32, copy=True)
    if expected_digest is not None and digest != expected_digest:
        raise StoreError(
            f"{path}: store is bound to dataset {digest.hex()[:12]}..., "
            f"expected {expected_digest.hex()[:12]}..."
        )
    return EmbeddingStore(dataset_digest=digest, matrix=matrix, encoder_tag=tag)


def concat_stores(stores: list[EmbeddingStore]) -> EmbeddingStore:
    """Feature concatenation across encoders, row by row, in argument order."""
    if len(stores) < 2:
        raise StoreError(f"concatenation needs >= 2 stores, got {len(stores)}")
    first = stores[0]
    for s in stores[1:]:
        if s.dataset_digest != first.dataset_digest:
            raise StoreError(
                "cannot concatenate stores bound to different datasets "
                f"({first.dataset_digest.hex()[:12]}... vs {s.dataset_digest.hex()[:12]}...)"
            )
        if s.count != first.count:
            raise StoreError(
                f"cannot concatenate stores with different row counts "
                f"({first.count} vs {s.count})"
            )
    return EmbeddingStore(
        dataset_digest=first.dataset_digest,
        matrix=np.concatenate([s.matrix for s in stores], axis=1),
        encoder_tag="+".join(s.encoder_tag for s in stores),
    )


def l2_normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Row-wise L2 normalization; zero rows stay zero.

    Off by default everywhere: classifiers consume raw encoder outputs.
    Exposed for sensitivity analysis via the ``--normalize`` flag.
    """
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return (matrix / norms).astype(matrix.dtype, copy=False)

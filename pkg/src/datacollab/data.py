"""Dataset ingestion: IDX image/label files and the synthetic generator.

The IDX reader accepts plain or gzip-compressed files, validates the magic
numbers (0x00000803 for image tensors, 0x00000801 for label vectors) and
the big-endian dimension headers, and fails with the byte offset of the
first problem. Pixels are scaled to [0, 1] float64.

The synthetic generator produces Gaussian blobs: unit within-class
variance, axis-aligned class means ``separation`` apart, rows shuffled.
It is the desk-scale stand-in wherever a labeled dataset is needed.
"""

import gzip
import struct
from pathlib import Path

import numpy as np

from .errors import IdxFormatError

__all__ = ["load_idx_images", "load_idx_labels", "load_mnist", "generate_synthetic"]

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def _read_payload(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def _read_header(data: bytes, path, expected_magic: int, n_dims: int):
    need = 4 * (1 + n_dims)
    if len(data) < need:
        raise IdxFormatError(
            f"{path}: truncated header, need {need} bytes, have {len(data)} (offset {len(data)})"
        )
    magic = struct.unpack_from(">I", data, 0)[0]
    if magic != expected_magic:
        raise IdxFormatError(
            f"{path}: bad magic 0x{magic:08x} at offset 0, expected 0x{expected_magic:08x}"
        )
    dims = struct.unpack_from(f">{n_dims}I", data, 4)
    return dims, need


def load_idx_images(path) -> np.ndarray:
    """Image tensor file -> (count, rows*cols) float64 array in [0, 1]."""
    data = _read_payload(path)
    (count, rows, cols), offset = _read_header(data, path, IMAGE_MAGIC, 3)
    expected = count * rows * cols
    if len(data) - offset != expected:
        raise IdxFormatError(
            f"{path}: payload has {len(data) - offset} bytes, expected {expected} "
            f"(offset {offset})"
        )
    pixels = np.frombuffer(data, dtype=np.uint8, count=expected, offset=offset)
    return pixels.reshape(count, rows * cols).astype(np.float64) / 255.0


def load_idx_labels(path) -> np.ndarray:
    """Label vector file -> (count,) int64 array."""
    data = _read_payload(path)
    (count,), offset = _read_header(data, path, LABEL_MAGIC, 1)
    if len(data) - offset != count:
        raise IdxFormatError(
            f"{path}: payload has {len(data) - offset} bytes, expected {count} "
            f"(offset {offset})"
        )
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=offset).astype(np.int64)


def load_mnist(images_path, labels_path):
    """Paired image/label files with count cross-check."""
    x = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if x.shape[0] != labels.shape[0]:
        raise IdxFormatError(
            f"{images_path} has {x.shape[0]} images but {labels_path} has "
            f"{labels.shape[0]} labels"
        )
    return x, labels


def generate_synthetic(classes: int, per_class: int, dim: int, separation: float, seed):
    """Shuffled Gaussian blobs; returns (x, labels)."""
    if classes < 1 or per_class < 1 or dim < 1:
        raise ValueError("classes, per_class and dim must be at least 1")
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for c in range(classes):
        center = np.zeros(dim)
        center[c % dim] = separation * (1 + c // dim)
        xs.append(center + rng.standard_normal((per_class, dim)))
        ys.append(np.full(per_class, c, dtype=np.int64))
    x = np.vstack(xs)
    labels = np.concatenate(ys)
    order = rng.permutation(x.shape[0])
    return x[order], labels[order]

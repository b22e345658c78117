"""Flat binary bundle for pipeline state and experiment audit trails.

One file holds named float64 matrices and named UTF-8 text blobs. The
format (all integers little-endian) is:

    magic   4 bytes  b"DCB1"
    count   uint32   number of entries
    entry*  repeated:
        name_len  uint16
        name      UTF-8 bytes
        kind      uint8   0 = matrix, 1 = text
        matrix:   rows uint64, cols uint64, rows*cols float64 (row-major)
        text:     byte_len uint64, UTF-8 bytes

Vectors are stored as single-row matrices. ``save_pipeline`` /
``load_pipeline`` serialize a full :class:`datacollab.protocol.TrainedPipeline`
(per-party maps and aligners, the kernel model, and a JSON config echo) so
a training run can be resumed or audited byte-for-byte.
"""

import json
import struct
from pathlib import Path

import numpy as np

from . import learner, protocol
from .mappings import KINDS, LinearMap

__all__ = ["save_bundle", "load_bundle", "save_pipeline", "load_pipeline"]

_MAGIC = b"DCB1"
_KIND_MATRIX = 0
_KIND_TEXT = 1


def save_bundle(path, matrices: dict, texts: dict | None = None) -> None:
    """Write named matrices and text blobs to ``path``."""
    texts = texts or {}
    entries = []
    for name, value in matrices.items():
        arr = np.ascontiguousarray(value, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise ValueError(f"entry {name!r} must be 1-D or 2-D")
        entries.append((name, _KIND_MATRIX, arr))
    for name, value in texts.items():
        entries.append((name, _KIND_TEXT, value.encode("utf-8")))
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(entries)))
        for name, kind, payload in entries:
            raw_name = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw_name)))
            fh.write(raw_name)
            fh.write(struct.pack("<B", kind))
            if kind == _KIND_MATRIX:
                fh.write(struct.pack("<QQ", *payload.shape))
                fh.write(payload.tobytes(order="C"))
            else:
                fh.write(struct.pack("<Q", len(payload)))
                fh.write(payload)


def load_bundle(path):
    """Read a bundle; returns (matrices, texts) dicts."""
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not a bundle file (bad magic {data[:4]!r})")
    (count,) = struct.unpack_from("<I", data, 4)
    offset = 8
    matrices, texts = {}, {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (kind,) = struct.unpack_from("<B", data, offset)
        offset += 1
        if kind == _KIND_MATRIX:
            rows, cols = struct.unpack_from("<QQ", data, offset)
            offset += 16
            n_bytes = rows * cols * 8
            arr = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=offset)
            matrices[name] = arr.reshape(rows, cols).copy()
            offset += n_bytes
        elif kind == _KIND_TEXT:
            (n_bytes,) = struct.unpack_from("<Q", data, offset)
            offset += 8
            texts[name] = data[offset : offset + n_bytes].decode("utf-8")
            offset += n_bytes
        else:
            raise ValueError(f"{path}: unknown entry kind {kind} at offset {offset - 1}")
    return matrices, texts


def save_pipeline(pipeline: protocol.TrainedPipeline, path) -> None:
    """Serialize a trained pipeline to one bundle file."""
    matrices = {}
    meta = {
        "n_parties": pipeline.n_parties,
        "map_kinds": [m.kind for m in pipeline.maps],
        "ridge_lambda": pipeline.model.ridge_lambda,
        "knn_k": pipeline.model.knn_k,
        "config_echo": pipeline.config_echo,
    }
    for i, m in enumerate(pipeline.maps):
        matrices[f"map/{i}/matrix"] = m.matrix
        matrices[f"map/{i}/center"] = m.center
    for i, g in enumerate(pipeline.g):
        matrices[f"g/{i}"] = g
    matrices["model/support"] = pipeline.model.support
    matrices["model/dual"] = pipeline.model.dual
    matrices["model/scales"] = pipeline.model.scales
    save_bundle(path, matrices, {"meta": json.dumps(meta, sort_keys=True)})


def load_pipeline(path) -> protocol.TrainedPipeline:
    """Rebuild a pipeline saved with :func:`save_pipeline`."""
    matrices, texts = load_bundle(path)
    meta = json.loads(texts["meta"])
    maps = []
    for i in range(meta["n_parties"]):
        kind = meta["map_kinds"][i]
        if kind not in KINDS:
            raise ValueError(f"unknown map kind {kind!r} in bundle")
        maps.append(
            LinearMap(
                matrix=matrices[f"map/{i}/matrix"],
                center=matrices[f"map/{i}/center"].ravel(),
                kind=kind,
            )
        )
    g = tuple(matrices[f"g/{i}"] for i in range(meta["n_parties"]))
    model = learner.KernelModel(
        support=matrices["model/support"],
        dual=matrices["model/dual"],
        scales=matrices["model/scales"].ravel(),
        ridge_lambda=meta["ridge_lambda"],
        knn_k=meta["knn_k"],
    )
    return protocol.TrainedPipeline(
        maps=tuple(maps), g=g, model=model, config_echo=meta["config_echo"]
    )

# SPDX-License-Identifier: Apache-2.0
"""Pure-Python reader/writer for the EMB1 embedding container.

Layout (little-endian): b"EMB1", role u8, dtype u8, dim u32, count u64,
then count*dim float32 values row-major. A sidecar ``<path>.ids`` holds
one id per line in row order.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"EMB1"
HEADER = struct.Struct("<4sBBIQ")
ROLES = ("query_image", "passage_image", "entity_name", "query_text", "passage_text")


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def write(path, ids, vectors, role: str) -> None:
    """Writes `vectors` (count x dim) and the id sidecar."""
    path = Path(path)
    arr = np.ascontiguousarray(vectors, dtype="<f4")
    if arr.ndim != 2 or arr.shape[0] != len(ids):
        raise ValueError("vectors must be 2-D with one row per id")
    header = HEADER.pack(MAGIC, ROLES.index(role), 0, arr.shape[1], arr.shape[0])
    _atomic_write(path, header + arr.tobytes())
    _atomic_write(Path(str(path) + ".ids"), "".join(f"{i}\n" for i in ids).encode("utf-8"))


def read(path):
    """Returns (role, ids, float32 array)."""
    path = Path(path)
    raw = path.read_bytes()
    magic, role, dtype, dim, count = HEADER.unpack_from(raw)
    if magic != MAGIC or dtype != 0:
        raise ValueError(f"{path}: not a float32 EMB1 file")
    data = np.frombuffer(raw, dtype="<f4", count=count * dim, offset=HEADER.size).reshape(count, dim)
    text = Path(str(path) + ".ids").read_text(encoding="utf-8")
    ids = text.split("\n")
    if ids and ids[-1] == "":
        ids.pop()
    if len(ids) != count:
        raise ValueError(f"{path}: {count} rows but {len(ids)} ids")
    return ROLES[role], ids, data.copy()

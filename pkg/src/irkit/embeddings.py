"""Dense vector store and the `.emb` text file format.

Format (UTF-8): line 1 is the header ``IRK-EMB 1 <dim> <count>``, then one
record per line: ``<key>\\t<v1> <v2> ... <vdim>`` with decimal floats.
Vectors are produced outside this package (see the embed adapter); the
store only loads, saves, and serves them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    IoFailureError,
    MalformedFileError,
    MissingKeyError,
)

HEADER_MAGIC = "IRK-EMB"
HEADER_VERSION = 1


@dataclass
class EmbeddingStore:
    dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def add(self, key: str, vector: np.ndarray) -> None:
        vec = np.asarray(vector, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise DimensionMismatchError(
                f"vector for {key!r} has shape {vec.shape}, expected ({self.dim},)")
        if key in self.vectors:
            raise DuplicateIdError(f"duplicate embedding key {key!r}")
        self.vectors[key] = vec

    def get(self, key: str) -> np.ndarray:
        try:
            return self.vectors[key]
        except KeyError:
            raise MissingKeyError(f"no embedding for key {key!r}") from None


def load_emb(path: str | Path) -> EmbeddingStore:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailureError(f"{path}: {exc}") from exc
    if not lines:
        raise MalformedFileError(f"{path}:1: empty embedding file")
    parts = lines[0].split()
    if len(parts) != 4 or parts[0] != HEADER_MAGIC or parts[1] != str(HEADER_VERSION):
        raise MalformedFileError(f"{path}:1: bad header {lines[0]!r}")
    dim, count = int(parts[2]), int(parts[3])
    store = EmbeddingStore(dim=dim)
    records = [line for line in lines[1:] if line.strip()]
    if len(records) != count:
        raise MalformedFileError(f"{path}: header declares {count} records, found {len(records)}")
    for lineno, line in enumerate(records, start=2):
        key, _, values = line.partition("\t")
        if not values:
            raise MalformedFileError(f"{path}:{lineno}: missing tab separator")
        try:
            vec = np.array([float(v) for v in values.split()], dtype=np.float64)
        except ValueError as exc:
            raise MalformedFileError(f"{path}:{lineno}: {exc}") from exc
        if vec.shape != (dim,):
            raise MalformedFileError(f"{path}:{lineno}: expected {dim} values, got {vec.shape[0]}")
        store.add(key, vec)
    return store


def save_emb(store: EmbeddingStore, path: str | Path) -> None:
    """Write in canonical form: keys sorted, shortest round-trip floats."""
    lines = [f"{HEADER_MAGIC} {HEADER_VERSION} {store.dim} {len(store.vectors)}"]
    for key in sorted(store.vectors):
        values = " ".join(repr(float(v)) for v in store.vectors[key])
        lines.append(f"{key}\t{values}")
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailureError(f"{path}: {exc}") from exc


def load_embeddings_dir(root: str | Path) -> EmbeddingStore | None:
    """Merge every ``*.emb`` under ``<root>/embeddings`` into one store."""
    emb_dir = Path(root) / "embeddings"
    if not emb_dir.is_dir():
        return None
    stores = [load_emb(p) for p in sorted(emb_dir.glob("*.emb"))]
    if not stores:
        return None
    dim = stores[0].dim
    merged = EmbeddingStore(dim=dim)
    for store in stores:
        if store.dim != dim:
            raise DimensionMismatchError(f"embedding files disagree on dim: {store.dim} vs {dim}")
        for key, vec in store.vectors.items():
            merged.add(key, vec)
    return merged

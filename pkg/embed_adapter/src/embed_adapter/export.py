"""Encode manifest entries and write the `.emb` output file.

Output format (UTF-8): header line ``IRK-EMB 1 <dim> <count>``, then one
``<key>\\t<v1> <v2> ...`` record per entry, in manifest order. Floats are
written with shortest round-trip repr, so re-export with the same model
is byte-identical.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

from .encoders import Encoder, image_support_available
from .errors import IoFailureError
from .manifest import EmbeddingManifest, Modality, validate_manifest

HEADER_MAGIC = "IRK-EMB"
HEADER_VERSION = 1


def encode_entries(manifest: EmbeddingManifest) -> list[tuple[str, np.ndarray]]:
    """(key, vector) pairs in manifest order; IMAGE entries are skipped
    with a warning when no image encoder is installed."""
    validate_manifest(manifest)
    encoder = Encoder(manifest.model)
    skip_images = False
    if any(e.modality is Modality.IMAGE for e in manifest.entries) \
            and not image_support_available():
        warnings.warn("no image encoder installed; exporting TEXT entries only",
                      stacklevel=2)
        skip_images = True

    out = []
    for entry in manifest.entries:
        if entry.modality is Modality.IMAGE:
            if skip_images:
                continue
            vec = encoder.encode_image(entry.source)
        else:
            vec = encoder.encode_text(entry.source)
        if manifest.normalize:
            norm = float(np.linalg.norm(vec))
            if norm > 0:
                vec = vec / norm
        out.append((entry.key, vec))
    return out


def write_emb(pairs: list[tuple[str, np.ndarray]], dim: int, path: str | Path) -> None:
    lines = [f"{HEADER_MAGIC} {HEADER_VERSION} {dim} {len(pairs)}"]
    for key, vec in pairs:
        values = " ".join(repr(float(v)) for v in vec)
        lines.append(f"{key}\t{values}")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailureError(f"{path}: {exc}") from exc


def export_embeddings(manifest: EmbeddingManifest) -> Path:
    """Encode every entry and write the manifest's output file; returns
    the written path."""
    pairs = encode_entries(manifest)
    encoder = Encoder(manifest.model)
    write_emb(pairs, encoder.dim, manifest.output)
    return Path(manifest.output)

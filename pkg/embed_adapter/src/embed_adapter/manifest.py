"""Manifest parsing and validation.

A manifest is a JSON object:

    {
      "model": "hash-text-384",
      "output": "out/screens.emb",
      "normalize": true,
      "entries": [
        {"key": "emb_S_home", "modality": "TEXT", "source": "Home screen"},
        {"key": "emb_shot_1", "modality": "IMAGE", "source": "shots/1.png"}
      ]
    }

TEXT sources are the literal text to encode; IMAGE sources are paths to
image files. Keys must be unique; this is checked before any encoding
happens.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import IoFailureError, MalformedManifestError


class Modality(str, Enum):
    TEXT = "TEXT"
    IMAGE = "IMAGE"


@dataclass(frozen=True)
class ManifestEntry:
    key: str
    modality: Modality
    source: str


@dataclass
class EmbeddingManifest:
    model: str
    output: str
    entries: list[ManifestEntry] = field(default_factory=list)
    normalize: bool = False


def validate_manifest(manifest: EmbeddingManifest) -> None:
    if not manifest.entries:
        raise MalformedManifestError("manifest has no entries")
    seen: set[str] = set()
    for entry in manifest.entries:
        if not entry.key:
            raise MalformedManifestError("entry with empty key")
        if entry.key in seen:
            raise MalformedManifestError(f"duplicate key {entry.key!r}")
        seen.add(entry.key)


def load_manifest(path: str | Path) -> EmbeddingManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailureError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedManifestError(f"{path}:{exc.lineno}: {exc.msg}") from exc

    for key in ("model", "output", "entries"):
        if key not in data:
            raise MalformedManifestError(f"{path}: manifest missing field {key!r}")
    entries = []
    for i, raw in enumerate(data["entries"]):
        for key in ("key", "modality", "source"):
            if key not in raw:
                raise MalformedManifestError(f"{path}: entry {i} missing field {key!r}")
        try:
            modality = Modality(raw["modality"])
        except ValueError:
            raise MalformedManifestError(
                f"{path}: entry {i} has unknown modality {raw['modality']!r}") from None
        entries.append(ManifestEntry(key=raw["key"], modality=modality, source=raw["source"]))
    manifest = EmbeddingManifest(
        model=data["model"],
        output=data["output"],
        entries=entries,
        normalize=bool(data.get("normalize", False)),
    )
    validate_manifest(manifest)
    return manifest

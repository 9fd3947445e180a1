"""Deterministic local encoders.

Model names follow ``hash-text-<dim>``: a feature-hashing text encoder
with no learned weights, so exports are bit-identical across machines.
The same family doubles as the image encoder (``hash-image-<dim>``)
by hashing downsampled grayscale pixels; it needs Pillow. Nothing here
touches the network.
"""

from __future__ import annotations

import hashlib
import re
from pathlib import Path

import numpy as np

from .errors import EncoderUnavailableError, UnreadableSourceError

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_MODEL_RE = re.compile(r"^hash-(text|image)-(\d+)$")

_IMAGE_SIDE = 16  # downsample target before pixel hashing


def _bucket_and_sign(label: str, dim: int) -> tuple[int, float]:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    bucket = int.from_bytes(digest[:8], "big") % dim
    sign = 1.0 if digest[8] % 2 == 0 else -1.0
    return bucket, sign


def encode_text(text: str, dim: int) -> np.ndarray:
    vec = np.zeros(dim, dtype=np.float64)
    for token in _TOKEN_RE.findall(text.lower()):
        bucket, sign = _bucket_and_sign(token, dim)
        vec[bucket] += sign
    return vec


def image_support_available() -> bool:
    try:
        import PIL  # noqa: F401
    except ImportError:
        return False
    return True


def encode_image(path: str | Path, dim: int) -> np.ndarray:
    try:
        from PIL import Image
    except ImportError:
        raise EncoderUnavailableError("image encoding requires Pillow") from None
    try:
        with Image.open(path) as img:
            gray = img.convert("L").resize((_IMAGE_SIDE, _IMAGE_SIDE))
            pixels = np.asarray(gray, dtype=np.float64).ravel() / 255.0
    except (OSError, ValueError) as exc:
        raise UnreadableSourceError(f"{path}: {exc}") from exc
    vec = np.zeros(dim, dtype=np.float64)
    for i, value in enumerate(pixels):
        bucket, sign = _bucket_and_sign(f"px{i}", dim)
        vec[bucket] += sign * value
    return vec


class Encoder:
    """Resolved from a manifest model name; raises ENCODER_UNAVAILABLE
    for names outside the built-in hash family."""

    def __init__(self, model: str):
        match = _MODEL_RE.match(model)
        if match is None:
            raise EncoderUnavailableError(
                f"no local encoder for model {model!r} (expected hash-text-<dim> "
                f"or hash-image-<dim>)")
        self.model = model
        self.family = match.group(1)
        self.dim = int(match.group(2))
        if self.dim < 1:
            raise EncoderUnavailableError(f"model {model!r} has dimension 0")

    def encode_text(self, text: str) -> np.ndarray:
        return encode_text(text, self.dim)

    def encode_image(self, path: str | Path) -> np.ndarray:
        return encode_image(path, self.dim)

import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from embed_adapter.cli import main
from embed_adapter.encoders import Encoder, encode_text
from embed_adapter.errors import (
    EncoderUnavailableError, MalformedManifestError, UnreadableSourceError,
)
from embed_adapter.export import encode_entries, export_embeddings
from embed_adapter.manifest import (
    EmbeddingManifest, ManifestEntry, Modality, load_manifest,
)

# round-trip checks go through the consumer's loader, the format's
# other endpoint
from irkit.embeddings import load_emb


def text_entry(key, source):
    return ManifestEntry(key=key, modality=Modality.TEXT, source=source)


def manifest_for(tmp_path, entries, model="hash-text-384", normalize=False):
    return EmbeddingManifest(model=model, output=str(tmp_path / "out.emb"),
                             entries=entries, normalize=normalize)


# ---------------------------------------------------------------------------
# manifest

def test_load_manifest(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({
        "model": "hash-text-16", "output": str(tmp_path / "o.emb"),
        "normalize": True,
        "entries": [{"key": "a", "modality": "TEXT", "source": "hello"}]}))
    manifest = load_manifest(path)
    assert manifest.model == "hash-text-16"
    assert manifest.normalize is True
    assert manifest.entries[0].modality is Modality.TEXT


def test_manifest_duplicate_key_fails_before_encoding(tmp_path):
    manifest = manifest_for(tmp_path, [text_entry("a", "x"), text_entry("a", "y")])
    with pytest.raises(MalformedManifestError):
        encode_entries(manifest)
    assert not (tmp_path / "out.emb").exists()


def test_manifest_missing_field(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"model": "hash-text-16", "entries": []}))
    with pytest.raises(MalformedManifestError) as excinfo:
        load_manifest(path)
    assert "output" in str(excinfo.value)


def test_manifest_unknown_modality(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({
        "model": "hash-text-16", "output": "o.emb",
        "entries": [{"key": "a", "modality": "AUDIO", "source": "x"}]}))
    with pytest.raises(MalformedManifestError):
        load_manifest(path)


# ---------------------------------------------------------------------------
# encoders

def test_unknown_model_unavailable():
    with pytest.raises(EncoderUnavailableError):
        Encoder("bert-large")


def test_text_encoding_deterministic():
    a = encode_text("login button crash", 64)
    b = encode_text("login button crash", 64)
    assert np.array_equal(a, b)
    assert a.shape == (64,)
    assert np.any(a != 0)


def test_text_encoding_case_insensitive():
    assert np.array_equal(encode_text("Login", 32), encode_text("login", 32))


def test_image_encoding(tmp_path):
    from PIL import Image
    img = Image.new("RGB", (40, 30), color=(200, 10, 10))
    path = tmp_path / "shot.png"
    img.save(path)
    enc = Encoder("hash-image-32")
    vec = enc.encode_image(path)
    assert vec.shape == (32,)
    assert np.any(vec != 0)
    assert np.array_equal(vec, enc.encode_image(path))


def test_unreadable_image(tmp_path):
    path = tmp_path / "junk.png"
    path.write_text("not an image")
    with pytest.raises(UnreadableSourceError):
        Encoder("hash-image-32").encode_image(path)


# ---------------------------------------------------------------------------
# export + round-trip through the consumer loader

def test_header_contract(tmp_path):
    manifest = manifest_for(tmp_path, [text_entry(f"k{i}", f"text {i}") for i in range(3)],
                            model="hash-text-384")
    out = export_embeddings(manifest)
    first = out.read_text(encoding="utf-8").splitlines()[0]
    assert first == "IRK-EMB 1 384 3"


def test_records_in_manifest_order(tmp_path):
    manifest = manifest_for(tmp_path, [text_entry("zz", "a"), text_entry("aa", "b")],
                            model="hash-text-8")
    out = export_embeddings(manifest)
    keys = [line.split("\t")[0] for line in out.read_text().splitlines()[1:]]
    assert keys == ["zz", "aa"]


def test_roundtrip_through_consumer_loader(tmp_path):
    texts = {"emb_home": "Home search box settings",
             "emb_privacy": "Privacy location history",
             "emb_settings": "Settings notifications privacy"}
    manifest = manifest_for(tmp_path, [text_entry(k, t) for k, t in texts.items()],
                            model="hash-text-128", normalize=True)
    out = export_embeddings(manifest)
    store = load_emb(out)
    assert store.dim == 128
    assert len(store.vectors) == 3
    for key in texts:
        vec = store.get(key)
        assert abs(float(np.linalg.norm(vec)) - 1.0) <= 1e-3
        cos = float(np.dot(vec, vec) / (np.linalg.norm(vec) ** 2))
        assert abs(cos - 1.0) <= 1e-12


def test_reexport_byte_identical(tmp_path):
    entries = [text_entry(f"k{i}", f"some screen text {i}") for i in range(5)]
    m1 = EmbeddingManifest(model="hash-text-64", output=str(tmp_path / "a.emb"),
                           entries=entries, normalize=True)
    m2 = EmbeddingManifest(model="hash-text-64", output=str(tmp_path / "b.emb"),
                           entries=entries, normalize=True)
    export_embeddings(m1)
    export_embeddings(m2)
    assert (tmp_path / "a.emb").read_bytes() == (tmp_path / "b.emb").read_bytes()


def test_image_degrades_to_text_with_warning(tmp_path, monkeypatch):
    import embed_adapter.export as export_mod
    monkeypatch.setattr(export_mod, "image_support_available", lambda: False)
    manifest = manifest_for(tmp_path, [
        text_entry("t1", "hello"),
        ManifestEntry(key="img1", modality=Modality.IMAGE, source="shot.png"),
    ], model="hash-text-16")
    with pytest.warns(UserWarning, match="TEXT entries only"):
        out = export_embeddings(manifest)
    store = load_emb(out)
    assert set(store.vectors) == {"t1"}


# ---------------------------------------------------------------------------
# acceptance

def test_acceptance_adapter_roundtrip(tmp_path, capsys):
    """Exported files parse in the consumer loader with matching
    dim/count, unit self-cosine, near-unit norms, and byte-stable
    re-export."""
    ok = True
    entries = [text_entry(f"key{i}", f"screen number {i} with label words") for i in range(10)]
    for tag in ("x", "y"):
        manifest = EmbeddingManifest(model="hash-text-384",
                                     output=str(tmp_path / f"{tag}.emb"),
                                     entries=entries, normalize=True)
        export_embeddings(manifest)
    if (tmp_path / "x.emb").read_bytes() != (tmp_path / "y.emb").read_bytes():
        ok = False
    store = load_emb(tmp_path / "x.emb")
    if store.dim != 384 or len(store.vectors) != len(entries):
        ok = False
    for entry in entries:
        vec = store.get(entry.key)
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > 1e-3:
            ok = False
        cos = float(np.dot(vec, vec)) / (norm * norm)
        if abs(cos - 1.0) > 1e-12:
            ok = False
    with capsys.disabled():
        print(f"{'PASS' if ok else 'FAIL'} [SECONDARY] Adapter round-trip")
    assert ok


# ---------------------------------------------------------------------------
# CLI

def test_cli_export(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({
        "model": "hash-text-16", "output": str(tmp_path / "o.emb"),
        "entries": [{"key": "a", "modality": "TEXT", "source": "hello world"}]}))
    result = CliRunner().invoke(main, [str(path)])
    assert result.exit_code == 0
    assert "1 entries" in result.output
    assert load_emb(tmp_path / "o.emb").dim == 16


def test_cli_bad_manifest_exit_2(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("{ nope")
    result = CliRunner().invoke(main, [str(path)])
    assert result.exit_code == 2


def test_cli_unknown_model_exit_1(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({
        "model": "gpt-tiny", "output": str(tmp_path / "o.emb"),
        "entries": [{"key": "a", "modality": "TEXT", "source": "x"}]}))
    result = CliRunner().invoke(main, [str(path)])
    assert result.exit_code == 1

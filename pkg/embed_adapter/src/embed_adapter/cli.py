"""Standalone exporter entry point.

Exit codes: 0 success, 1 encoding/domain error, 2 manifest/IO error.
"""

from __future__ import annotations

import sys

import click

from .errors import AdapterError, IoFailureError, MalformedManifestError
from .export import export_embeddings
from .manifest import load_manifest


@click.command()
@click.argument("manifest_path", type=click.Path())
def main(manifest_path):
    """Encode the entries of MANIFEST_PATH into its `.emb` output file."""
    try:
        manifest = load_manifest(manifest_path)
        written = export_embeddings(manifest)
    except AdapterError as exc:
        click.echo(str(exc), err=True)
        sys.exit(2 if isinstance(exc, (MalformedManifestError, IoFailureError)) else 1)
    click.echo(f"wrote {written} ({len(manifest.entries)} entries, model {manifest.model})")


if __name__ == "__main__":
    main()

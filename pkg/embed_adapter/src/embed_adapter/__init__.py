"""Offline embedding exporter for the `.emb` vector file format."""

__version__ = "0.1.0"

"""Small shared helpers: atomic file writes and content digests."""
from __future__ import annotations

import hashlib
import os
from pathlib import Path


def write_atomic(path, text: str) -> None:
    """Write text to path via a .partial sibling and an atomic rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_atomic_bytes(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def sha256_text(text: str, length: int = 16) -> str:
    """Short hex digest of a string, for provenance stamps."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:length]


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()

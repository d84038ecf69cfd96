"""Small shared helpers: lossless float serialization and atomic writes."""

from __future__ import annotations

import os
import tempfile

import numpy as np

__all__ = ["floats_to_hex", "floats_from_hex", "atomic_write_text"]


def floats_to_hex(values) -> list[str]:
    """Hex-encode floats so JSON round trips are bit-exact."""
    return [float(v).hex() for v in np.asarray(values, dtype=np.float64).ravel()]


def floats_from_hex(tokens) -> np.ndarray:
    return np.array([float.fromhex(tok) for tok in tokens], dtype=np.float64)


def atomic_write_text(path, text: str) -> None:
    """Write via a same-directory temp file + rename; readers never see partial files."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

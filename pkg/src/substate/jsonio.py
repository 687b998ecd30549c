"""Matrix JSON format ``{"dim": n, "entries": [[re, im], ...]}`` (row-major)."""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ValidationError


def encode_matrix(mat) -> dict:
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {mat.shape}")
    return {"dim": int(mat.shape[0]),
            "entries": [[float(z.real), float(z.imag)] for z in mat.ravel()]}


def decode_matrix(obj, where: str = "matrix") -> np.ndarray:
    """Parse a matrix object, raising :class:`ValidationError` with field context."""
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected an object with 'dim' and 'entries'")
    for key in ("dim", "entries"):
        if key not in obj:
            raise ValidationError(f"{where}: missing field '{key}'")
    n = obj["dim"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ValidationError(f"{where}.dim: expected a positive integer, got {n!r}")
    entries = obj["entries"]
    if not isinstance(entries, list) or len(entries) != n * n:
        got = len(entries) if isinstance(entries, list) else type(entries).__name__
        raise ValidationError(f"{where}.entries: expected {n * n} [re, im] pairs for dim {n}, "
                              f"got {got}")
    out = np.empty(n * n, dtype=complex)
    for i, pair in enumerate(entries):
        if (not isinstance(pair, list) or len(pair) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)):
            raise ValidationError(f"{where}.entries[{i}]: expected [re, im] numbers, got {pair!r}")
        if not all(math.isfinite(x) for x in pair):
            raise ValidationError(f"{where}.entries[{i}]: non-finite value {pair!r}")
        out[i] = complex(pair[0], pair[1])
    return out.reshape(n, n)


def read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read ({exc.strerror})") from exc


def load_matrix(path: str) -> np.ndarray:
    """Read a matrix file (``-`` for stdin)."""
    text = read_text(path)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON at line {exc.lineno} "
                              f"column {exc.colno}: {exc.msg}") from exc
    return decode_matrix(obj, where=path)

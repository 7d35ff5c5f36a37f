"""JSON matrix files.

A matrix file looks like::

    {"d": 2, "entries_row_major": [0.7, 0.2, 0.3, 0.8],
     "convention": "column-stochastic", "tolerance": 1e-9}

``tolerance`` is optional. The convention field is mandatory so that a
row-stochastic matrix is never silently read as its transpose.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .errors import EmbedLabError
from .stochastic import DEFAULT_TOL, StochasticMatrix, validate

CONVENTION = "column-stochastic"


class FormatError(EmbedLabError, ValueError):
    """A file could not be parsed into the expected structure."""


def parse_matrix_document(doc) -> StochasticMatrix:
    if not isinstance(doc, dict):
        raise FormatError("matrix file must hold a JSON object")
    missing = [k for k in ("d", "entries_row_major", "convention") if k not in doc]
    if missing:
        raise FormatError(f"missing field(s): {', '.join(missing)}")
    if doc["convention"] != CONVENTION:
        raise FormatError(f"convention must be {CONVENTION!r}, got {doc['convention']!r}")
    d = doc["d"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise FormatError(f"d must be a positive integer, got {d!r}")
    entries = doc["entries_row_major"]
    if not isinstance(entries, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in entries
    ):
        raise FormatError("entries_row_major must be a flat list of numbers")
    if not all(math.isfinite(x) for x in entries):
        raise FormatError("entries_row_major contains a non-finite number")
    tol = doc.get("tolerance", DEFAULT_TOL)
    if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not tol > 0:
        raise FormatError(f"tolerance must be a positive number, got {tol!r}")
    return validate(entries, dim=d, tolerance=float(tol))


def load_matrix_file(path) -> StochasticMatrix:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return parse_matrix_document(doc)
    except EmbedLabError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def matrix_document(T: StochasticMatrix, tolerance: float | None = None) -> dict:
    doc = {
        "d": T.dim,
        "entries_row_major": [float(x) for x in T.entries.ravel()],
        "convention": CONVENTION,
    }
    if tolerance is not None:
        doc["tolerance"] = tolerance
    return doc


def write_matrix_file(path, T: StochasticMatrix, tolerance: float | None = None) -> None:
    Path(path).write_text(json.dumps(matrix_document(T, tolerance)) + "\n")

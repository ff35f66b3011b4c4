"""Reading input series, the non-negativity shift, and result documents."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import IngestionError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass
class InputDocument:
    values: np.ndarray
    names: list[str] | None
    source: str
    delimiter: str

    @property
    def shape(self):
        return self.values.shape


def shift_nonneg(Y_raw):
    """Add one constant to every entry so the minimum is 0 (if it was negative).

    Returns ``(Y, shift)`` with ``shift = max(0, -min(Y_raw))``. Column
    covariances are unchanged.
    """
    Y_raw = np.asarray(Y_raw, dtype=float)
    if not np.all(np.isfinite(Y_raw)):
        raise IngestionError("input contains non-finite values")
    shift = max(0.0, -float(Y_raw.min()))
    if shift == 0.0:
        return Y_raw.copy(), 0.0
    Y = Y_raw + shift
    # Rounding in the addition can leave a tiny negative at the minimum.
    np.maximum(Y, 0.0, out=Y)
    return Y, shift


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def sniff_delimiter(line: str) -> str:
    return "\t" if "\t" in line else ","


def ingest(path, delimiter: str | None = None, header: bool | None = None) -> InputDocument:
    """Parse a delimited text matrix, rows = time points, columns = variables.

    The delimiter (comma or tab) and the presence of a header row are
    detected unless given.

    Raises
    ------
    IngestionError
        Empty file, ragged rows, or non-numeric / non-finite cells; the
        message names the offending line (and column).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    lines = [(n, ln) for n, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise IngestionError(f"{path} is empty")
    delimiter = delimiter or sniff_delimiter(lines[0][1])
    rows = [(n, [c.strip() for c in next(csv.reader([ln], delimiter=delimiter))])
            for n, ln in lines]

    names = None
    if header is None:
        header = not all(_is_number(c) for c in rows[0][1])
    if header:
        names = rows[0][1]
        rows = rows[1:]
    if not rows:
        raise IngestionError(f"{path} has a header but no data")

    width = len(names) if names is not None else len(rows[0][1])
    values = np.empty((len(rows), width))
    for i, (lineno, cells) in enumerate(rows):
        if len(cells) != width:
            raise IngestionError(
                f"{path}:{lineno}: expected {width} fields, found {len(cells)}")
        for j, cell in enumerate(cells):
            try:
                v = float(cell)
            except ValueError:
                raise IngestionError(
                    f"{path}:{lineno}: column {j + 1} is not numeric: {cell!r}") from None
            if not math.isfinite(v):
                raise IngestionError(f"{path}:{lineno}: column {j + 1} is not finite")
            values[i, j] = v
    logger.info("read %s: T=%d, p=%d", path, *values.shape)
    return InputDocument(values, names, str(path), delimiter)


def write_matrix(path, M, names=None, delimiter: str = ",") -> None:
    """Write a matrix as delimited text at full float precision."""
    M = np.asarray(M)
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    if names is not None:
        w.writerow(names)
    is_int = np.issubdtype(M.dtype, np.integer)
    for row in np.atleast_2d(M):
        w.writerow([str(int(v)) if is_int else repr(float(v)) for v in row])
    Path(path).write_text(buf.getvalue())


def read_matrix(path, delimiter: str | None = None) -> np.ndarray:
    return ingest(path, delimiter=delimiter).values


def created_timestamp() -> str | None:
    """UTC creation time; honours ``SOURCE_DATE_EPOCH`` for reproducible output."""
    import datetime as dt

    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (dt.datetime.fromtimestamp(int(epoch), dt.timezone.utc) if epoch
            else dt.datetime.now(dt.timezone.utc))
    return when.replace(microsecond=0).isoformat()


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=True) + "\n"


def emit(doc: dict, path, matrices: dict | None = None) -> list[Path]:
    """Write a result document (JSON) plus optional CSV sidecar matrices.

    ``matrices`` maps a suffix (e.g. ``"seg1.consensus"``) to an array; each
    is written next to ``path`` as ``<stem>.<suffix>.csv`` and listed under
    the document's ``"sidecars"`` key. Returns all paths written.
    """
    path = Path(path)
    written = []
    if matrices:
        sidecars = {}
        for suffix, M in matrices.items():
            side = path.with_name(f"{path.stem}.{suffix}.csv")
            write_matrix(side, M)
            sidecars[suffix] = side.name
            written.append(side)
        doc = dict(doc, sidecars=sidecars)
    path.write_text(dumps(doc))
    written.insert(0, path)
    return written


def read_result(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise IngestionError(f"{path}: unsupported schema version {doc.get('schema_version')}")
    return doc

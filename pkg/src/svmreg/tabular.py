"""CSV ingestion, run manifests and atomic report writing."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import Dataset

__all__ = ["DataError", "CsvSchema", "Table", "read_csv", "file_digest", "manifest",
           "write_atomic", "dumps_json"]


class DataError(ValueError):
    """Malformed or schema-violating input data."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class CsvSchema:
    label_column: str = "y"
    feature_columns: tuple[str, ...] | None = None
    label_encoding: str = "auto"

    def __post_init__(self):
        if self.label_encoding not in ("auto", "pm1", "01"):
            raise ValueError("label_encoding must be 'auto', 'pm1' or '01'")

    def to_dict(self) -> dict:
        return {"label_column": self.label_column,
                "feature_columns": None if self.feature_columns is None else list(self.feature_columns),
                "label_encoding": self.label_encoding}


@dataclass
class Table:
    X: np.ndarray
    y: np.ndarray | None
    feature_names: list[str]
    schema: CsvSchema

    def dataset(self) -> Dataset:
        if self.y is None:
            raise DataError(f"label column {self.schema.label_column!r} missing")
        return Dataset(self.X, self.y)


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"column {column!r}: cannot parse {text!r} as a number", line) from None
    if not math.isfinite(v):
        raise DataError(f"column {column!r}: non-finite value {text!r}", line)
    return v


def _encode_labels(raw: list[float], lines: list[int], encoding: str):
    if encoding == "auto":
        codes = set(raw)
        # a stray code should be blamed on its own row, not flip the encoding
        encoding = "01" if 0.0 in codes and -1.0 not in codes else "pm1"
    allowed = {-1.0, 1.0} if encoding == "pm1" else {0.0, 1.0}
    for v, ln in zip(raw, lines):
        if v not in allowed:
            raise DataError(f"label {v:g} not allowed; labels must be coded -1/1 or 0/1", ln)
    y = np.array(raw)
    if encoding == "01":
        y = np.where(y == 1.0, 1, -1)
    return y.astype(np.int64), encoding


def read_csv(path, schema: CsvSchema = CsvSchema(), require_label: bool = True) -> Table:
    """Read a comma-separated file with a header row.

    Feature columns default to every column except the label. Labels coded
    0/1 are mapped to -1/+1. Errors carry the 1-based line number.
    """
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as err:
        raise DataError(f"cannot open {path}: {err.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty file", 1) from None
        except csv.Error as err:
            raise DataError(str(err), 1) from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise DataError("duplicate column names in header", 1)
        has_label = schema.label_column in header
        if require_label and not has_label:
            raise DataError(f"label column {schema.label_column!r} not in header", 1)
        if schema.feature_columns is None:
            features = [h for h in header if h != schema.label_column]
        else:
            features = list(schema.feature_columns)
            missing = [f for f in features if f not in header]
            if missing:
                raise DataError(f"feature columns not in header: {missing}", 1)
        if not features:
            raise DataError("no feature columns", 1)
        fidx = [header.index(f) for f in features]
        lidx = header.index(schema.label_column) if has_label else None
        rows, labels, lines = [], [], []
        try:
            for rec in reader:
                ln = reader.line_num
                if not rec or all(not f.strip() for f in rec):
                    continue
                if len(rec) != len(header):
                    raise DataError(f"expected {len(header)} fields, found {len(rec)}", ln)
                rows.append([_parse_float(rec[i], ln, header[i]) for i in fidx])
                if lidx is not None:
                    labels.append(_parse_float(rec[lidx], ln, schema.label_column))
                lines.append(ln)
        except csv.Error as err:
            raise DataError(str(err), reader.line_num) from None
    if not rows:
        raise DataError("no data rows", 2)
    y = None
    encoding = schema.label_encoding
    if lidx is not None:
        y, encoding = _encode_labels(labels, lines, schema.label_encoding)
    schema = CsvSchema(schema.label_column, tuple(features), encoding)
    return Table(np.array(rows, dtype=float), y, features, schema)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest(command: str, config: dict, seed, inputs: Sequence = ()) -> dict:
    from . import __version__

    return {
        "command": command,
        "config": config,
        "seed": seed,
        "input_sha256": {Path(p).name: file_digest(p) for p in inputs},
        "version": __version__,
    }


def timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, default=_default, allow_nan=True) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

"""Artifact writers: atomic files, sorted pretty JSON, LF-terminated CSV, schema checks."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from functools import lru_cache
from importlib import resources as _res
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np

from .circuits import SCHEMA_VERSION


class SchemaError(ValueError):
    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (tuple, set, frozenset)):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_plain, allow_nan=False) + "\n"


def atomic_write(path: str | os.PathLike, text: str) -> Path:
    """Write via a temp file in the same directory and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


@lru_cache(maxsize=None)
def load_schema(kind: str) -> dict:
    ref = _res.files("qudit_photonics") / "schemas" / f"{kind}.schema.json"
    if not ref.is_file():
        raise SchemaError(f"no schema for kind {kind!r}")
    return json.loads(ref.read_text(encoding="utf-8"))


def schema_kinds() -> list[str]:
    d = _res.files("qudit_photonics") / "schemas"
    return sorted(p.name[: -len(".schema.json")] for p in d.iterdir() if p.name.endswith(".schema.json"))


def validate(doc: dict, kind: str | None = None) -> None:
    """Check ``doc`` against the shipped schema for its ``kind``."""
    kind = kind or doc.get("kind")
    if kind is None:
        raise SchemaError("document has no 'kind'")
    try:
        jsonschema.validate(json.loads(dumps(doc)), load_schema(kind))
    except jsonschema.ValidationError as exc:
        where = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in exc.absolute_path)
        raise SchemaError(exc.message, where) from None


def envelope(kind: str, body: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "kind": kind, **body}


def write_json(path, doc: dict, check: bool = True) -> Path:
    if check:
        validate(doc)
    return atomic_write(path, dumps(doc))


def write_jsonl(path, docs: Iterable[dict], check: bool = True) -> Path:
    lines = []
    for doc in docs:
        if check:
            validate(doc)
        lines.append(json.dumps(doc, sort_keys=True, default=_plain, allow_nan=False))
    return atomic_write(path, "".join(line + "\n" for line in lines))


def csv_text(header: Sequence, rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def write_csv(path, header: Sequence, rows: Iterable[Sequence]) -> Path:
    return atomic_write(path, csv_text(header, rows))


def write_matrix_csv(path, matrix: np.ndarray, labels: Sequence[str]) -> Path:
    m = np.asarray(matrix, dtype=float)
    return write_csv(path, ["", *labels], ([lab, *row] for lab, row in zip(labels, m)))

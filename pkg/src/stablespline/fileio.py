"""Dataset and document file formats used by the command-line tools.

Datasets are plain delimiter-separated text with a ``t,u,y`` header, one
sample per row.  Truth/result/summary documents are JSON key-value trees
with every float rendered at 17 significant digits, so identical inputs
produce byte-identical, diff-able files that round-trip bit-faithfully.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .model import Dataset

__all__ = [
    "SCHEMA_VERSION",
    "read_dataset",
    "write_dataset",
    "dump_document",
    "write_document",
    "read_document",
    "write_runs_csv",
]

SCHEMA_VERSION = 1


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ConfigError(f"cannot serialize non-finite number {x!r}")
    return format(float(x), ".17g")


def write_dataset(path, u, y) -> None:
    """Write a t,u,y dataset file (t = 1..N)."""
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    if u.shape != y.shape or u.ndim != 1:
        raise ConfigError(f"u and y must be equal-length vectors, got {u.shape}, {y.shape}")
    lines = ["t,u,y"]
    for t in range(u.size):
        lines.append(f"{t + 1},{_format_float(u[t])},{_format_float(y[t])}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_dataset(path) -> Dataset:
    """Parse a t,u,y dataset file; malformed rows report their line number."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"input file not found: {p}")
    u, y = [], []
    with p.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{p}:1: empty dataset file") from None
        expected = ["t", "u", "y"]
        if [c.strip().lower() for c in header] != expected:
            raise ConfigError(
                f"{p}:1: expected header 't,u,y', got {','.join(header)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ConfigError(
                    f"{p}:{lineno}: expected 3 columns, got {len(row)}"
                )
            try:
                u.append(float(row[1]))
                y.append(float(row[2]))
            except ValueError as exc:
                raise ConfigError(f"{p}:{lineno}: {exc}") from None
    if not u:
        raise ConfigError(f"{p}: dataset contains no samples")
    try:
        return Dataset(np.array(u), np.array(y))
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from None


def dump_document(obj, indent: int = 0) -> str:
    """Serialize a document tree to JSON text with .17g floats."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key, value in obj.items():
            items.append(
                f'{pad}  {json.dumps(str(key))}: {dump_document(value, indent + 1)}'
            )
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(np.asarray(obj).tolist()) if isinstance(obj, np.ndarray) else list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(
                _format_float(v) if isinstance(v, float) else str(v) for v in seq
            ) + "]"
        items = [f"{pad}  {dump_document(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise ConfigError(f"cannot serialize value of type {type(obj).__name__}")


def write_document(path, doc: dict) -> None:
    Path(path).write_text(dump_document(doc) + "\n")


def read_document(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"file not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}:{exc.lineno}: invalid document: {exc.msg}") from None


def write_runs_csv(path, results) -> None:
    """One row per benchmark run: run, fit_ssml, fit_ssgs, beta_hat, sigma2, warnings."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "fit_ssml", "fit_ssgs", "beta_hat", "sigma2", "warnings"])
        for r in results:
            writer.writerow(
                [
                    r.run_index,
                    _format_float(r.fit_ssml),
                    _format_float(r.fit_ssgs),
                    _format_float(r.beta_hat),
                    _format_float(r.sigma2),
                    ";".join(r.warnings),
                ]
            )

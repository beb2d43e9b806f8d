"""CSV, PGM and run-manifest writers with fixed, byte-stable formatting."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Any, Sequence

import numpy as np


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_csv(path: str | os.PathLike, header: Sequence[str], columns: Sequence[Sequence[float]]) -> Path:
    """Write equal-length columns with a header row (RFC 4180, ``\\r\\n`` line ends)."""
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    if len(cols) != len(header):
        raise ValueError("header and columns differ in length")
    if len({c.size for c in cols}) > 1:
        raise ValueError("columns differ in length")
    path = Path(path)
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([fmt(v) for v in row])
    return path


def grid_columns(axes, values) -> tuple[list[str], list[np.ndarray]]:
    """Flatten a grid field into columns, rows in C (lexicographic index) order."""
    names = [n for n, _ in axes]
    mesh = np.meshgrid(*(a for _, a in axes), indexing="ij")
    return names + ["pdf"], [m.ravel() for m in mesh] + [np.asarray(values).ravel()]


def write_pgm(path: str | os.PathLike, values) -> dict[str, float]:
    """Binary P5 greyscale image, min-max scaled to 0..255; rows follow the first axis."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError("PGM output needs a 2D field")
    lo, hi = float(v.min()), float(v.max())
    scaled = np.zeros(v.shape) if hi == lo else (v - lo) / (hi - lo)
    pix = np.round(scaled * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{v.shape[1]} {v.shape[0]}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())
    return {"min": lo, "max": hi}


def write_manifest(path: str | os.PathLike, manifest: dict[str, Any]) -> Path:
    """Write the manifest; call this last, a run is complete once it exists."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    os.replace(tmp, path)
    return path

"""Deterministic NDJSON / CSV emission with bit-exact float round-trip.

Doubles are written with 17 significant decimal digits, which is lossless
for IEEE-754 binary64.  Row and key order are deterministic so identical
runs produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from itertools import product
from pathlib import Path

import numpy as np

from .lattice import LatticeGrid
from .spectral import ModeSpectrum, SpecificSpectrum


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return f"{float(x):.17g}"
    return json.dumps(x)


def ndjson_line(record: dict) -> str:
    parts = [f"{json.dumps(k)}: {fmt(v)}" for k, v in record.items()]
    return "{" + ", ".join(parts) + "}"


def write_ndjson(path: str | Path, records: list[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, "w") as fh:
            for rec in records:
                fh.write(ndjson_line(rec) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write NDJSON to {path}: {exc}") from exc
    return path


def read_ndjson(path: str | Path) -> list[dict]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[list[float]]]:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    return header, rows


def spectrum_rows(
    spec: ModeSpectrum, sspec: SpecificSpectrum, grid: LatticeGrid
) -> tuple[list[str], list[list]]:
    """Rows over Z^d_{N,+} in lexicographic order: k, kappa, omega, E_k, E_kappa."""
    d = grid.d
    header = (
        [f"k{i + 1}" for i in range(d)]
        + [f"kappa{i + 1}" for i in range(d)]
        + ["omega", "E_k", "E_kappa"]
    )
    agg = {tuple(k): e for k, e in zip(map(tuple, sspec.k_indices), sspec.E)}
    half = grid.N + 0.5
    rows = []
    for k in product(range(grid.N + 1), repeat=d):
        idx = tuple(c + grid.N for c in k)
        rows.append(
            list(k)
            + [c / half for c in k]
            + [float(spec.omega[idx]), float(spec.E[idx]), agg[k]]
        )
    return header, rows


def nls_series_record(tau: float, l2: float, hm: dict[float, float], in_A: bool) -> dict:
    rec: dict = {"tau": tau, "l2": l2}
    for m, v in hm.items():
        key = f"h{int(m)}" if float(m).is_integer() else f"h{m}"
        rec[key] = v
    rec["in_A"] = in_A
    return rec

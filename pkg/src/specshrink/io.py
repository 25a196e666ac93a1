"""CSV ingestion/export and run manifests.

Floats are written with ``repr`` (shortest round-trip form), so re-reading a
file reproduces every value exactly.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from .core import MultivariateSeries
from .errors import IngestionError


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _parse_rows(path) -> list[list[float]]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from None
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise IngestionError(f"{path}: no data rows")

    def numeric(row):
        try:
            [float(c) for c in row]
            return True
        except ValueError:
            return False

    start = 0 if numeric(rows[0]) else 1  # optional header
    out = []
    width = None
    for r, row in enumerate(rows[start:], start=start + 1):
        if width is None:
            width = len(row)
        if len(row) != width:
            raise IngestionError(f"{path}: row {r} has {len(row)} columns, expected {width}")
        vals = []
        for c, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise IngestionError(f"{path}: row {r}, column {c}: cannot parse {cell!r}") from None
            if not math.isfinite(v):
                raise IngestionError(f"{path}: row {r}, column {c}: non-finite value {cell!r}")
            vals.append(v)
        out.append(vals)
    return out


def read_panel_csv(path) -> MultivariateSeries:
    """T rows by p columns; the column order gives the dimension index."""
    rows = _parse_rows(path)
    if len(rows) < 2:
        raise IngestionError(f"{path}: need at least two time points")
    return MultivariateSeries(np.array(rows, dtype=float).T)


def read_column_csv(path) -> np.ndarray:
    rows = _parse_rows(path)
    if len(rows[0]) != 1:
        raise IngestionError(f"{path}: expected a single column, found {len(rows[0])}")
    return np.array([r[0] for r in rows], dtype=float)


def write_panel_csv(path, series: MultivariateSeries, header: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([f"x{i}" for i in range(1, series.p + 1)])
        for row in series.values.T:
            w.writerow([fmt(v) for v in row])


SPECTRAL_COLUMNS = ("frequency_index", "i", "j", "real", "imag")


def spectral_csv(indices, matrices, market_rows=None) -> str:
    """Rows ``(frequency_index, i, j, real, imag)``; panel indices start at 1.

    ``market_rows`` is an optional augmented ``(n, p+1, p+1)`` array whose
    row/column 0 entries are emitted with index 0.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SPECTRAL_COLUMNS)
    mats = np.asarray(matrices)
    p = mats.shape[-1]
    for n, k in enumerate(np.asarray(indices)):
        if market_rows is not None:
            A = np.asarray(market_rows)[n]
            full = A.copy()
            full[1:, 1:] = mats[n]
            lo = 0
        else:
            full, lo = mats[n], 1
        for i in range(lo, p + 1):
            for j in range(lo, p + 1):
                v = full[i - lo, j - lo] if market_rows is None else full[i, j]
                w.writerow([int(k), i, j, fmt(np.real(v)), fmt(np.imag(v))])
    return buf.getvalue()


def read_spectral_csv(path) -> dict[int, np.ndarray]:
    """Reassemble ``{frequency_index: matrix}``; matrices include index 0 if present."""
    entries: dict[int, dict[tuple[int, int], complex]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            k = int(row["frequency_index"])
            entries.setdefault(k, {})[(int(row["i"]), int(row["j"]))] = complex(
                float(row["real"]), float(row["imag"])
            )
    out = {}
    for k, d in entries.items():
        lo = min(i for i, _ in d)
        hi = max(i for i, _ in d)
        M = np.zeros((hi - lo + 1, hi - lo + 1), dtype=complex)
        for (i, j), v in d.items():
            M[i - lo, j - lo] = v
        out[k] = M
    return out


DIAGNOSTIC_COLUMNS = ("frequency_index", "p_total", "re_r_total", "g_total", "zeta_raw", "zeta_clamped",
                      "cond_f0", "cond_f1", "cond_fplus")


def diagnostics_csv(diag, conds: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DIAGNOSTIC_COLUMNS)
    for n, k in enumerate(diag.indices):
        w.writerow([
            int(k), fmt(diag.p_total[n]), fmt(np.real(diag.r_total[n])), fmt(diag.g_total[n]),
            fmt(diag.zeta_raw[n]), fmt(diag.zeta[n]),
            fmt(conds["f0"][n]), fmt(conds["f1"][n]), fmt(conds["fplus"][n]),
        ])
    return buf.getvalue()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest(command: str, parameters: dict, inputs=(), seed=None) -> dict:
    from . import __version__

    return {
        "command": command,
        "parameters": parameters,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "master_seed": seed,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")

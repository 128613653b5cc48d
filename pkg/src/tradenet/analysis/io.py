"""CSV tables and JSON fit records.

Numbers are written as the shortest decimal that reads back to the same
double (Python's float repr), so every file round-trips exactly.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from pathlib import Path

import numpy as np

from .histogram import Histogram

HIST_COLUMNS = ("bin_lo", "bin_hi", "center", "count", "density")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if math.isinf(f):
        return "inf" if f > 0 else "-inf"
    return repr(f)


def table_to_csv(columns: dict) -> str:
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    lengths = {len(d) for d in data}
    if len(lengths) > 1:
        raise ValueError(f"columns differ in length: {sorted(lengths)}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*data):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def csv_to_table(text: str) -> dict[str, np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty CSV")
    names = rows[0]
    cols = list(zip(*rows[1:])) if len(rows) > 1 else [()] * len(names)
    out = {}
    for name, vals in zip(names, cols):
        if all(_is_int(v) for v in vals) and vals:
            out[name] = np.array([int(v) for v in vals], dtype=np.int64)
        else:
            out[name] = np.array([float(v) for v in vals], dtype=np.float64)
    return out


def _is_int(s: str) -> bool:
    return s.lstrip("-").isdigit()


def write_table(path, columns: dict) -> None:
    Path(path).write_text(table_to_csv(columns))


def read_table(path) -> dict[str, np.ndarray]:
    return csv_to_table(Path(path).read_text())


def histogram_to_csv(hist: Histogram) -> str:
    return table_to_csv({
        "bin_lo": hist.bin_edges[:-1],
        "bin_hi": hist.bin_edges[1:],
        "center": hist.centers,
        "count": hist.counts,
        "density": hist.density,
    })


def histogram_from_csv(text: str, n_zero: int = 0, discrete: bool = False) -> Histogram:
    t = csv_to_table(text)
    missing = [c for c in HIST_COLUMNS if c not in t]
    if missing:
        raise ValueError(f"histogram CSV lacks columns {missing}")
    edges = np.append(t["bin_lo"].astype(np.float64), float(t["bin_hi"][-1]))
    counts = t["count"].astype(np.int64)
    return Histogram(edges, counts, t["density"].astype(np.float64), int(counts.sum()),
                     n_zero, discrete)


def fit_record(fit) -> dict:
    """Plain dict of a fit dataclass, tuples turned into lists, for JSON."""
    out = {}
    for f in dataclasses.fields(fit):
        v = getattr(fit, f.name)
        if isinstance(v, tuple):
            v = [float(a) for a in v]
        elif isinstance(v, np.ndarray):
            v = v.tolist()
        elif isinstance(v, (np.floating, np.integer)):
            v = v.item()
        out[f.name] = v
    return out

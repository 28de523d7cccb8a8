"""CSV ingestion, dataset export, and empirical target construction.

File layouts: a targets file (date, y_1..y_m), one predictors file per
series (date, named columns), and a prices file (date, open, high, low,
close) per ticker.  Floats are written with ``repr`` so every export
round-trips bit-exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class IngestError(ValueError):
    """Malformed or inconsistent input file."""


@dataclass
class PricePanel:
    dates: list
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray

    def __post_init__(self):
        self.open = np.asarray(self.open, dtype=float)
        self.high = np.asarray(self.high, dtype=float)
        self.low = np.asarray(self.low, dtype=float)
        self.close = np.asarray(self.close, dtype=float)
        n = len(self.dates)
        for name in ("open", "high", "low", "close"):
            if getattr(self, name).shape != (n,):
                raise IngestError(f"{name} column length differs from dates")
        if any(a >= b for a, b in zip(self.dates, self.dates[1:])):
            raise IngestError("dates must be strictly increasing")
        hi_ok = (self.high >= np.maximum(self.open, self.close)).all()
        lo_ok = (self.low <= np.minimum(self.open, self.close)).all()
        if not (hi_ok and lo_ok):
            raise IngestError("price rows violate low <= open/close <= high")

    def __len__(self):
        return len(self.dates)


def max_log_return(panel: PricePanel, k: int) -> np.ndarray:
    """Max over the next k days of log(average price / today's close).

    The daily average price is (close + high + low) / 3; the last k rows
    have no complete look-ahead window and produce no target.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    n = len(panel)
    if n < k + 1:
        raise IngestError(f"need at least {k + 1} rows, got {n}")
    if (panel.close <= 0).any() or (panel.high <= 0).any() or (panel.low <= 0).any():
        raise IngestError("prices must be positive for log returns")
    avg = (panel.close + panel.high + panel.low) / 3.0
    out = np.empty(n - k)
    for t in range(n - k):
        out[t] = max(math.log(avg[t + j] / panel.close[t]) for j in range(1, k + 1))
    return out


def _read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise IngestError(f"{path}: empty file")
    return rows[0], rows[1:]


def _parse_cell(value, path, row_num, column):
    value = value.strip()
    if value == "":
        raise IngestError(f"{path}: missing value at row {row_num}, column {column!r}")
    try:
        v = float(value)
    except ValueError:
        raise IngestError(f"{path}: cannot parse {value!r} at row {row_num}, "
                          f"column {column!r}")
    if math.isnan(v):
        raise IngestError(f"{path}: NaN at row {row_num}, column {column!r}")
    return v


def read_table(path, columns=None):
    """Read a date-keyed CSV; returns (dates, values, column names)."""
    header, body = _read_rows(path)
    if not header or header[0] != "date":
        raise IngestError(f"{path}: first column must be 'date'")
    names = header[1:]
    if columns is not None:
        missing = [c for c in columns if c not in names]
        if missing:
            raise IngestError(f"{path}: missing columns {missing}")
        take = [names.index(c) for c in columns]
        names = list(columns)
    else:
        take = list(range(len(names)))
    dates = []
    values = np.empty((len(body), len(names)))
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise IngestError(f"{path}: row {r + 2} has {len(row)} cells, "
                              f"expected {len(header)}")
        dates.append(row[0])
        for c, j in enumerate(take):
            values[r, c] = _parse_cell(row[1 + j], path, r + 2, names[c])
    return dates, values, names


def write_table(path, dates, values, names) -> None:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    lines = ["date," + ",".join(names)]
    for d, row in zip(dates, values):
        lines.append(str(d) + "," + ",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_csv_panel(targets_path, predictor_paths, target_columns=None,
                   predictor_columns=None):
    """Load aligned target and per-series predictor matrices.

    ``predictor_paths`` gives one file per target series;
    ``predictor_columns``, when present, selects (and orders) named
    columns per series.
    """
    dates, Y, target_names = read_table(targets_path, target_columns)
    X_blocks = []
    for i, p in enumerate(predictor_paths):
        cols = predictor_columns[i] if predictor_columns else None
        d_i, X, _ = read_table(p, cols)
        if d_i != dates:
            raise IngestError(f"{p}: dates do not align with the targets file")
        X_blocks.append(X)
    return dates, Y, X_blocks, target_names


def load_price_panel(path) -> PricePanel:
    dates, values, names = read_table(path, ["open", "high", "low", "close"])
    return PricePanel(dates=dates, open=values[:, 0], high=values[:, 1],
                      low=values[:, 2], close=values[:, 3])


def write_dataset(dataset, out_dir) -> None:
    """Export a synthetic dataset in the CSV layout the CLI ingests,
    plus a truth sidecar."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n, m = dataset.Y.shape
    dates = [str(t) for t in range(n)]
    write_table(out_dir / "targets.csv", dates, dataset.Y,
                [f"y_{i + 1}" for i in range(m)])
    for i, X in enumerate(dataset.X_blocks):
        write_table(out_dir / f"predictors_{i + 1}.csv", dates, X,
                    [f"x_{j + 1}" for j in range(X.shape[1])])
    truth = {
        "seed": dataset.seed,
        "B": [b.tolist() for b in dataset.B],
        "gamma_true": [g.tolist() for g in dataset.gamma_true],
        "sigma_eps": dataset.sigma_eps.tolist(),
        "shuffled_columns": {str(k): v for k, v in dataset.shuffled_columns.items()},
    }
    (out_dir / "truth.json").write_text(json.dumps(truth, indent=2, sort_keys=True))


def load_dataset_arrays(in_dir):
    """Load targets and predictor blocks previously written by
    ``write_dataset`` (or hand-built in the same layout)."""
    in_dir = Path(in_dir)
    predictor_paths = sorted(in_dir.glob("predictors_*.csv"),
                             key=lambda p: int(p.stem.split("_")[1]))
    return load_csv_panel(in_dir / "targets.csv", predictor_paths)

"""File formats: RFQ/price CSVs, posterior and report CSVs, config JSON.

All floats are written with 17 significant digits so every emitted file
round-trips bit-exactly through its reader.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .stream import SIDE_LABELS, SIDE_NAMES, RfqStream

RFQ_REQUIRED = ("time", "asset_id", "side")
RFQ_OPTIONAL = ("quoted_margin", "filled", "composite_bid", "composite_ask", "composite_mid")
PRICE_COLUMNS = ("time", "asset_id", "composite_bid", "composite_ask")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _open_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise InputError(f"{path}: empty file")
    return rows


@dataclass
class RfqTable:
    """Parsed RFQ CSV: the merged stream plus any optional columns."""

    stream: RfqStream  # carries asset ids
    quoted_margin: np.ndarray | None = None
    filled: np.ndarray | None = None
    composite_bid: np.ndarray | None = None
    composite_ask: np.ndarray | None = None
    composite_mid: np.ndarray | None = None


def read_rfq_csv(path, filled_only: bool = False) -> RfqTable:
    """Read an RFQ CSV (header required; unknown columns rejected)."""
    rows = _open_rows(path)
    header = [h.strip() for h in rows[0]]
    unknown = [h for h in header if h not in RFQ_REQUIRED + RFQ_OPTIONAL]
    if unknown:
        raise InputError(f"{path}: unknown columns {unknown}")
    missing = [h for h in RFQ_REQUIRED if h not in header]
    if missing:
        raise InputError(f"{path}: missing required columns {missing}")
    idx = {h: header.index(h) for h in header}
    n = len(rows) - 1
    if n == 0:
        raise InputError(f"{path}: no data rows")

    times = np.empty(n)
    sides = np.empty(n, dtype=np.int8)
    assets = np.empty(n, dtype=object)
    optional = {h: np.full(n, np.nan) for h in RFQ_OPTIONAL if h in header}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputError(f"{path}:{i}: expected {len(header)} fields, got {len(row)}")
        try:
            t = float(row[idx["time"]])
        except ValueError as exc:
            raise InputError(f"{path}:{i}: bad time {row[idx['time']]!r}") from exc
        if not np.isfinite(t) or t < 0:
            raise InputError(f"{path}:{i}: time must be finite and nonnegative")
        side = row[idx["side"]].strip()
        if side not in SIDE_LABELS:
            raise InputError(f"{path}:{i}: side must be 'b' or 'a', got {side!r}")
        times[i - 2] = t
        sides[i - 2] = SIDE_LABELS[side]
        assets[i - 2] = row[idx["asset_id"]].strip()
        for h, col in optional.items():
            cell = row[idx[h]].strip()
            if cell:
                try:
                    col[i - 2] = float(cell)
                except ValueError as exc:
                    raise InputError(f"{path}:{i}: bad {h} {cell!r}") from exc

    keep = np.ones(n, dtype=bool)
    if filled_only:
        if "filled" not in optional:
            raise InputError(f"{path}: --filled-only requires a 'filled' column")
        keep = optional["filled"] == 1.0

    order = np.argsort(times[keep], kind="stable")

    def _sel(arr):
        return arr[keep][order]

    stream = RfqStream(_sel(times), _sel(sides), _sel(assets))
    out = RfqTable(stream=stream)
    for h, col in optional.items():
        setattr(out, h, _sel(col))
    if out.filled is not None:
        bad = np.isfinite(out.filled) & ~np.isin(out.filled, (0.0, 1.0))
        if bad.any():
            raise InputError(f"{path}: 'filled' must be 0 or 1")
    return out


def write_rfq_csv(path, stream: RfqStream, **optional) -> None:
    cols = [c for c in RFQ_OPTIONAL if optional.get(c) is not None]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(RFQ_REQUIRED) + cols)
        assets = stream.assets if stream.assets is not None else np.full(len(stream), "asset", dtype=object)
        for i in range(len(stream)):
            row = [fmt(stream.times[i]), str(assets[i]), SIDE_NAMES[int(stream.sides[i])]]
            for c in cols:
                v = optional[c][i]
                row.append("" if not np.isfinite(v) else (str(int(v)) if c == "filled" else fmt(v)))
            w.writerow(row)


def read_price_csv(path) -> dict:
    """Price CSV -> {asset: (times, bids, asks)} with times sorted."""
    rows = _open_rows(path)
    header = [h.strip() for h in rows[0]]
    if header != list(PRICE_COLUMNS):
        raise InputError(f"{path}: expected columns {list(PRICE_COLUMNS)}, got {header}")
    data: dict = {}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise InputError(f"{path}:{i}: expected 4 fields")
        try:
            t, bid, ask = float(row[0]), float(row[2]), float(row[3])
        except ValueError as exc:
            raise InputError(f"{path}:{i}: bad numeric field") from exc
        data.setdefault(row[1].strip(), []).append((t, bid, ask))
    out = {}
    for asset, rows_ in data.items():
        arr = np.array(sorted(rows_))
        out[asset] = (arr[:, 0], arr[:, 1], arr[:, 2])
    return out


def write_price_csv(path, asset: str, times, bids, asks) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PRICE_COLUMNS)
        for t, b, a in zip(times, bids, asks):
            w.writerow([fmt(t), asset, fmt(b), fmt(a)])


def posterior_columns(m_b: int, m_a: int) -> list:
    return [f"pi_{jb + 1}_{ja + 1}" for jb in range(m_b) for ja in range(m_a)]


def write_posterior_csv(path, times, posteriors, m_b: int, m_a: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time"] + posterior_columns(m_b, m_a))
        for t, row in zip(times, posteriors):
            w.writerow([fmt(t)] + [fmt(p) for p in row])


def read_posterior_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = _open_rows(path)
    header = [h.strip() for h in rows[0]]
    if header[0] != "time" or not all(h.startswith("pi_") for h in header[1:]):
        raise InputError(f"{path}: not a posterior CSV")
    body = np.array([[float(c) for c in row] for row in rows[1:]])
    if body.size == 0:
        raise InputError(f"{path}: no data rows")
    return body[:, 0], body[:, 1:]


def write_csv(path, header: list, rows: list) -> None:
    """Small helper for tidy report CSVs; floats formatted, rest as str."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(c) if isinstance(c, (float, np.floating)) else str(c) for c in row])


def load_config(path, overrides: dict | None = None) -> dict:
    """Single JSON config document; explicit flags override file values."""
    doc = {}
    if path is not None:
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise InputError(f"{path}: config must be a JSON object")
    for key, value in (overrides or {}).items():
        if value is not None:
            doc[key] = value
    return doc

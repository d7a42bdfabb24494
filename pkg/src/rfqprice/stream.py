"""Timestamped RFQ event streams.

Times are trading days since the start of the observation window (nights
and weekends are assumed removed upstream). Sides are encoded 0 = bid
(client sells to the dealer) and 1 = ask (client buys).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

BID, ASK = 0, 1
SIDE_LABELS = {"b": BID, "a": ASK}
SIDE_NAMES = {BID: "b", ASK: "a"}

#: spacing applied to simultaneous timestamps, in days
_TIE_EPS = 1e-9


def _as_side_array(sides) -> np.ndarray:
    arr = np.asarray(sides)
    if arr.dtype.kind in "US":
        try:
            arr = np.vectorize(SIDE_LABELS.__getitem__)(arr) if arr.size else arr.astype(np.int8)
        except KeyError as exc:
            raise InputError(f"unknown side label {exc.args[0]!r}; expected 'b' or 'a'") from exc
    arr = arr.astype(np.int8)
    if arr.size and not np.isin(arr, (BID, ASK)).all():
        raise InputError("sides must be 0/'b' (bid) or 1/'a' (ask)")
    return arr


@dataclass(frozen=True)
class RfqStream:
    """Ordered RFQ events: times (days), sides (0/1) and asset identifiers.

    The constructor sorts by time (stable, so input order breaks ties) and
    perturbs exact timestamp collisions by k * 1e-9 days so downstream
    matrix-product likelihoods see strictly increasing times.
    """

    times: np.ndarray
    sides: np.ndarray
    assets: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = _as_side_array(self.sides)
        if t.ndim != 1 or s.shape != t.shape:
            raise InputError("times and sides must be 1-d arrays of equal length")
        if t.size and (not np.all(np.isfinite(t)) or t[np.argmin(t)] < 0):
            raise InputError("event times must be finite and nonnegative")
        a = self.assets
        if a is not None:
            a = np.asarray(a)
            if a.shape != t.shape:
                raise InputError("assets must align with times")
        order = np.argsort(t, kind="stable")
        t, s = t[order], s[order]
        if a is not None:
            a = a[order]
        t = _break_ties(t)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "sides", s)
        object.__setattr__(self, "assets", a)

    def __len__(self) -> int:
        return self.times.size

    @property
    def span(self) -> float:
        """Observation span [0, t_N] in days (0 for an empty stream)."""
        return float(self.times[-1]) if len(self) else 0.0

    def count(self, side: int) -> int:
        return int(np.count_nonzero(self.sides == side))

    def restrict(self, t_max: float) -> "RfqStream":
        """Events with time <= t_max (assets preserved)."""
        keep = self.times <= t_max
        return RfqStream(
            self.times[keep],
            self.sides[keep],
            None if self.assets is None else self.assets[keep],
        )

    def swap_sides(self) -> "RfqStream":
        return RfqStream(self.times, 1 - self.sides, self.assets)

    def daily_counts(self, side: int, n_days: int | None = None) -> np.ndarray:
        """Events per whole trading day for one side, zeros included."""
        if n_days is None:
            n_days = max(1, int(np.ceil(self.span)))
        t = self.times[self.sides == side]
        return np.bincount(np.minimum(t.astype(int), n_days - 1), minlength=n_days).astype(float)


def _break_ties(t: np.ndarray) -> np.ndarray:
    if t.size < 2 or np.all(np.diff(t) > 0):
        return t
    out = t.copy()
    for i in range(1, out.size):
        if out[i] <= out[i - 1]:
            out[i] = out[i - 1] + _TIE_EPS
    return out


def merge_streams(streams) -> RfqStream:
    """Time-ordered union of per-asset streams, dropping asset identity.

    Accepts a mapping {asset_id: RfqStream} or an iterable of streams.
    """
    if hasattr(streams, "values"):
        streams = list(streams.values())
    else:
        streams = list(streams)
    if not streams:
        return RfqStream(np.array([]), np.array([], dtype=np.int8))
    times = np.concatenate([s.times for s in streams])
    sides = np.concatenate([s.sides for s in streams])
    return RfqStream(times, sides)


def split_by_asset(stream: RfqStream) -> dict:
    """Per-asset sub-streams of a stream that carries asset identifiers."""
    if stream.assets is None:
        raise InputError("stream has no asset identifiers")
    out = {}
    for asset in np.unique(stream.assets):
        mask = stream.assets == asset
        out[asset] = RfqStream(stream.times[mask], stream.sides[mask])
    return out

"""Append-only measurement persistence with range queries.

File format (normative, one record per line, comma separated):

    record    = timestamp "," node_id "," lat "," lon "," quantity ","
                value "," unit "," flags
    timestamp = ISO-8601 UTC, integer seconds, e.g. 2015-04-01T00:05:00Z
    node_id   = [A-Za-z0-9_-]+
    lat, lon  = decimal degrees, shortest exact decimal representation
    quantity  = code from domain.Quantity
    value     = shortest exact decimal representation (round-trips bit-exact)
    unit      = unit string of the quantity (redundant, for self-description)
    flags     = semicolon-joined flag codes, sorted; empty when clean

Files are partitioned by UTC day (``measurements-YYYY-MM-DD.txt``) and kept
sorted by (timestamp, node_id, quantity). Duplicate (node, timestamp,
quantity) triples are rejected idempotently on append.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path as FsPath
from typing import Iterable

from .domain import (
    Flag,
    GeoPoint,
    Measurement,
    Quantity,
    ReportBatch,
    UNITS,
    haversine_distance,
    validate_measurement,
)


class StorageError(OSError):
    """Raised when the backing files cannot be read or written."""


def _iso(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _from_iso(text: str) -> int:
    dt = datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def serialize_measurement(m: Measurement) -> str:
    flags = ";".join(sorted(f.value for f in m.flags))
    return (
        f"{_iso(m.timestamp)},{m.node_id},{m.position.lat!r},{m.position.lon!r},"
        f"{m.quantity.value},{m.value!r},{m.unit},{flags}"
    )


def parse_measurement(line: str) -> Measurement:
    parts = line.rstrip("\n").split(",")
    if len(parts) != 8:
        raise ValueError(f"malformed record: {line!r}")
    ts, node_id, lat, lon, qcode, value, unit, flags = parts
    quantity = Quantity(qcode)
    if unit != UNITS[quantity]:
        raise ValueError(f"unit {unit!r} does not match quantity {qcode}")
    return Measurement(
        node_id=node_id,
        timestamp=_from_iso(ts),
        position=GeoPoint(float(lat), float(lon)),
        quantity=quantity,
        value=float(value),
        flags=frozenset(Flag(f) for f in flags.split(";") if f),
    )


@dataclass(frozen=True)
class QueryFilter:
    """Conjunction of optional clauses over the stored records."""

    t0: int
    t1: int
    node_ids: frozenset[str] | None = None
    quantities: frozenset[Quantity] | None = None
    geo_center: GeoPoint | None = None
    geo_radius_m: float | None = None

    def __post_init__(self):
        if self.t0 >= self.t1:
            raise ValueError("need t0 < t1")
        if (self.geo_center is None) != (self.geo_radius_m is None):
            raise ValueError("geo clause needs both center and radius")
        if self.geo_radius_m is not None and self.geo_radius_m <= 0:
            raise ValueError("geo radius must be positive")

    def matches(self, m: Measurement) -> bool:
        if not self.t0 <= m.timestamp < self.t1:
            return False
        if self.node_ids is not None and m.node_id not in self.node_ids:
            return False
        if self.quantities is not None and m.quantity not in self.quantities:
            return False
        if self.geo_center is not None:
            if haversine_distance(m.position, self.geo_center) > self.geo_radius_m:
                return False
        return True


def _sort_key(m: Measurement):
    return (m.timestamp, m.node_id, m.quantity.value)


class MeasurementStore:
    """Day-partitioned measurement files under one directory.

    Single writer, many readers. ``append`` buffers in memory; ``flush``
    (also called on close / context exit) rewrites the affected day files
    with their records in timestamp order. Records are never mutated or
    deleted, only added.
    """

    def __init__(self, root: str | FsPath, overwrite: bool = False):
        self.root = FsPath(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            if overwrite:
                for f in self.root.glob("measurements-*.txt"):
                    f.unlink()
            self._records: list[Measurement] = []
            self._keys: set[tuple[str, int, Quantity]] = set()
            for f in sorted(self.root.glob("measurements-*.txt")):
                for line in f.read_text().splitlines():
                    m = parse_measurement(line)
                    self._records.append(m)
                    self._keys.add((m.node_id, m.timestamp, m.quantity))
        except OSError as e:
            raise StorageError(f"cannot open store at {self.root}: {e}") from e
        self._dirty_days: set[str] = set()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.flush()

    def __len__(self) -> int:
        return len(self._records)

    def append(self, batch: ReportBatch | Iterable[Measurement] | Measurement) -> int:
        """Persist new measurements; returns how many were actually written.

        Re-appending an already stored (node, timestamp, quantity) triple is
        a no-op, so replays are idempotent.
        """
        if isinstance(batch, ReportBatch):
            items: Iterable[Measurement] = batch.measurements
        elif isinstance(batch, Measurement):
            items = (batch,)
        else:
            items = batch
        written = 0
        for m in items:
            validate_measurement(m)
            key = (m.node_id, m.timestamp, m.quantity)
            if key in self._keys:
                continue
            self._keys.add(key)
            self._records.append(m)
            self._dirty_days.add(_iso(m.timestamp)[:10])
            written += 1
        return written

    def flush(self) -> None:
        if not self._dirty_days:
            return
        by_day: dict[str, list[Measurement]] = {}
        for m in self._records:
            day = _iso(m.timestamp)[:10]
            if day in self._dirty_days:
                by_day.setdefault(day, []).append(m)
        try:
            for day, records in by_day.items():
                records.sort(key=_sort_key)
                path = self.root / f"measurements-{day}.txt"
                path.write_text(
                    "\n".join(serialize_measurement(m) for m in records) + "\n"
                )
        except OSError as e:
            raise StorageError(f"cannot write store at {self.root}: {e}") from e
        self._dirty_days.clear()

    def query(self, f: QueryFilter) -> list[Measurement]:
        """All records matching every present clause, in time order."""
        return sorted((m for m in self._records if f.matches(m)), key=_sort_key)

    def all(self) -> list[Measurement]:
        return sorted(self._records, key=_sort_key)


# --------------------------------------------------------------------------
# Delivery log (one line per emitted measurement)
#
#   emitted-ts,node_id,quantity,outcome,link,arrival-ts
#
# arrival-ts and link are empty for lost messages.


def serialize_delivery(
    emitted_t: int,
    node_id: str,
    quantity: Quantity,
    outcome: str,
    link: str | None,
    arrival_t: int | None,
) -> str:
    arrival = _iso(arrival_t) if arrival_t is not None else ""
    return f"{_iso(emitted_t)},{node_id},{quantity.value},{outcome},{link or ''},{arrival}"


def write_delivery_log(lines: Iterable[str], path: str | FsPath) -> None:
    FsPath(path).write_text("\n".join(lines) + "\n")

"""Environmental indexes: two air-quality sub-indexes, a thermal comfort
index, and a traffic index, each classified into color bands.

All band tables are left-closed, right-open: a value exactly on a threshold
belongs to the band above it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Iterable, Sequence

from .domain import Flag, Measurement, Quantity

HOUR_S = 3600
O3_WINDOW_S = 8 * HOUR_S
PM_WINDOW_S = 24 * HOUR_S


class IndexKind(str, Enum):
    AQI_O3 = "aqi_o3"
    AQI_PM = "aqi_pm"
    TCI = "tci"
    TI = "ti"


class IndexColor(str, Enum):
    GREEN = "green"
    YELLOW = "yellow"
    ORANGE = "orange"
    RED = "red"
    DARK_RED = "dark_red"
    BLUE = "blue"
    DARK_BLUE = "dark_blue"
    UNKNOWN = "unknown"


INDEX_UNITS: dict[IndexKind, str] = {
    IndexKind.AQI_O3: "ug/m3",
    IndexKind.AQI_PM: "ug/m3",
    IndexKind.TCI: "degC",
    IndexKind.TI: "EV/s",
}

# (lower, upper, color), left-closed right-open, ascending.
O3_BANDS = (
    (-math.inf, 100.0, IndexColor.GREEN),
    (100.0, 180.0, IndexColor.YELLOW),
    (180.0, 240.0, IndexColor.ORANGE),
    (240.0, math.inf, IndexColor.RED),
)
PM_BANDS = (
    (-math.inf, 10.0, IndexColor.GREEN),
    (10.0, 25.0, IndexColor.YELLOW),
    (25.0, 60.0, IndexColor.ORANGE),
    (60.0, math.inf, IndexColor.RED),
)
# Comfort bands cover [-13, 46) degC only; anything outside is Unknown
# rather than extrapolated.
TCI_BANDS = (
    (-13.0, 0.0, IndexColor.DARK_BLUE),
    (0.0, 9.0, IndexColor.BLUE),
    (9.0, 26.0, IndexColor.GREEN),
    (26.0, 32.0, IndexColor.ORANGE),
    (32.0, 38.0, IndexColor.RED),
    (38.0, 46.0, IndexColor.DARK_RED),
)


def classify(value: float, bands) -> IndexColor:
    for lower, upper, color in bands:
        if lower <= value < upper:
            return color
    return IndexColor.UNKNOWN


@dataclass(frozen=True)
class IndexValue:
    kind: IndexKind
    station_id: str
    window_end: int
    value: float
    color: IndexColor

    @property
    def unit(self) -> str:
        return INDEX_UNITS[self.kind]


class InsufficientDataError(ValueError):
    """The averaging window holds no usable samples."""


def _mean_index(
    kind: IndexKind, bands, values: Sequence[float], station_id: str, window_end: int
) -> IndexValue:
    if not values:
        return IndexValue(kind, station_id, window_end, math.nan, IndexColor.UNKNOWN)
    mean = sum(values) / len(values)
    return IndexValue(kind, station_id, window_end, mean, classify(mean, bands))


def aqi_o3(values: Sequence[float], station_id: str = "", window_end: int = 0) -> IndexValue:
    """Ozone sub-index: arithmetic mean of the trailing 8 h of readings
    (ug/m3), classified green/yellow/orange/red. Empty window -> Unknown."""
    return _mean_index(IndexKind.AQI_O3, O3_BANDS, values, station_id, window_end)


def aqi_pm(values: Sequence[float], station_id: str = "", window_end: int = 0) -> IndexValue:
    """PM 2.5 sub-index over a trailing 24 h window (ug/m3)."""
    return _mean_index(IndexKind.AQI_PM, PM_BANDS, values, station_id, window_end)


# A thermal model maps (air temp degC, mean radiant temp degC, wind m/s,
# relative humidity %) to one perceived temperature in degC.
ThermalModel = Callable[[float, float, float, float], float]


def identity_thermal_model(air: float, radiant: float, wind: float, rh: float) -> float:
    """Returns the air temperature unchanged; handy for band testing."""
    return air


def _vapor_pressure_hpa(air: float, rh: float) -> float:
    # Magnus form over water.
    return (rh / 100.0) * 6.105 * math.exp(17.27 * air / (237.7 + air))


def apparent_temperature_model(air: float, radiant: float, wind: float, rh: float) -> float:
    """Simple perceived-temperature blend of all four inputs.

    Air and radiant temperature are combined into an operative temperature
    (radiant weight shrinking as wind rises), then adjusted with the usual
    vapor-pressure and wind terms of the apparent-temperature family.
    """
    if wind < 0.2:
        radiant_weight = 0.5
    elif wind < 0.6:
        radiant_weight = 0.4
    elif wind < 1.0:
        radiant_weight = 0.3
    else:
        radiant_weight = 0.2
    operative = (1.0 - radiant_weight) * air + radiant_weight * radiant
    return operative + 0.33 * _vapor_pressure_hpa(air, rh) - 0.70 * wind - 4.00


def tci(
    air_temp: float,
    radiant_temp: float,
    wind: float,
    rh: float,
    station_id: str = "",
    window_end: int = 0,
    model: ThermalModel = identity_thermal_model,
) -> IndexValue:
    """Thermal comfort index: run the configured thermal model, then band it.

    Inputs must be finite and rh in [0, 100]. Model outputs outside
    [-13, 46) map to Unknown.
    """
    for name, v in (("air_temp", air_temp), ("radiant_temp", radiant_temp), ("wind", wind), ("rh", rh)):
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite")
    if not 0.0 <= rh <= 100.0:
        raise ValueError(f"rh {rh} outside [0, 100]")
    value = model(air_temp, radiant_temp, wind, rh)
    return IndexValue(IndexKind.TCI, station_id, window_end, value, classify(value, TCI_BANDS))


# ---------------------------------------------------------------------------
# Traffic index

# Passenger-car equivalents per vehicle class (national road regulations).
VEHICLE_EQUIVALENTS: dict[str, float] = {
    "bicycles": 0.2,
    "motorcycles": 0.33,
    "cars": 1.0,
    "trucks": 1.75,
    "buses": 2.25,
    "trams": 2.5,
}

# Position of the measured access inside the urban fabric.
LOCALIZATION_FACTORS: dict[str, float] = {
    "residential": 1.0,
    "commercial": 0.98,
    "industrial": 0.93,
    "business": 0.85,
}

# Interference weights per maneuver. Turning weights are quoted as ranges
# (right 1-1.25, left 1-1.75); the defaults sit at the conservative upper
# bound and are configurable per access.
DEFAULT_MANEUVER_EQUIVALENTS: dict[str, float] = {
    "straight": 1.0,
    "turning_right": 1.25,
    "turning_left": 1.75,
}

BASE_CONGESTION_FACTOR = 1800.0


class DegenerateCompositionError(ValueError):
    """Composition or maneuver weights collapse a TI denominator to zero."""


@dataclass(frozen=True)
class TrafficAccessConfig:
    """Everything needed to evaluate the traffic index at one access point."""

    composition: dict[str, float]  # vehicle class -> share, sums to 1
    maneuver_shares: dict[str, float] = field(
        default_factory=lambda: {"straight": 1.0}
    )
    steepness_pct: float = 0.0  # absolute grade, percent
    grade: str = "flat"  # flat | uphill | downhill
    localization: str = "residential"
    s_b: float = BASE_CONGESTION_FACTOR
    maneuver_equivalents: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_MANEUVER_EQUIVALENTS)
    )

    def __post_init__(self):
        for label, shares, table in (
            ("composition", self.composition, VEHICLE_EQUIVALENTS),
            ("maneuver_shares", self.maneuver_shares, self.maneuver_equivalents),
        ):
            unknown = set(shares) - set(table)
            if unknown:
                raise ValueError(f"{label}: unknown keys {sorted(unknown)}")
            if any(v < 0 for v in shares.values()):
                raise ValueError(f"{label}: negative share")
            if abs(sum(shares.values()) - 1.0) > 1e-9:
                raise ValueError(f"{label}: shares must sum to 1")
        if self.grade not in ("flat", "uphill", "downhill"):
            raise ValueError(f"grade {self.grade!r} not flat/uphill/downhill")
        if self.steepness_pct < 0:
            raise ValueError("steepness_pct is an absolute percentage")
        if self.localization not in LOCALIZATION_FACTORS:
            raise ValueError(f"unknown localization {self.localization!r}")

    def factors(self) -> tuple[float, float, float, float]:
        """The four adjustment factors (composition, steepness, localization,
        maneuvering) multiplying the base congestion factor."""
        denom1 = sum(a * VEHICLE_EQUIVALENTS[c] for c, a in self.composition.items())
        denom4 = sum(
            b * self.maneuver_equivalents[m] for m, b in self.maneuver_shares.items()
        )
        if denom1 == 0.0 or denom4 == 0.0:
            raise DegenerateCompositionError("zero-weight composition or maneuver mix")
        k1 = 1.0 / denom1
        if self.grade == "uphill":
            k2 = 1.0 - 0.03 * self.steepness_pct
        elif self.grade == "downhill":
            k2 = 1.0 + 0.03 * self.steepness_pct
        else:
            k2 = 1.0
        k3 = LOCALIZATION_FACTORS[self.localization]
        k4 = 1.0 / denom4
        return k1, k2, k3, k4


def traffic_index(
    cfg: TrafficAccessConfig, access_id: str = "access", at_time: int = 0
) -> IndexValue:
    """Expected traffic flow at an access, in equivalent vehicles.

    No color table is defined for this index, so the band is Unknown.
    """
    k1, k2, k3, k4 = cfg.factors()
    value = cfg.s_b * k1 * k2 * k3 * k4
    return IndexValue(IndexKind.TI, access_id, at_time, value, IndexColor.UNKNOWN)


# ---------------------------------------------------------------------------
# Streaming recomputation on ingest

# Flags that disqualify a reading from index windows.
_EXCLUDED = {Flag.BELOW_LOD, Flag.WARMING_UP}

_TCI_INPUTS = (
    Quantity.TEMPERATURE,
    Quantity.RADIANT_TEMPERATURE,
    Quantity.WIND_SPEED,
    Quantity.RELATIVE_HUMIDITY,
)


class IndexComputer:
    """Maintains per-station windows and recomputes indexes on each ingest.

    Call :meth:`ingest` with newly stored measurements, then :meth:`update`
    at every reporting boundary; only stations that ever produced usable
    data for an index are emitted.
    """

    def __init__(self, thermal_model: ThermalModel = identity_thermal_model):
        self.thermal_model = thermal_model
        # station -> quantity -> list of (t, value), append-only in t order
        self._series: dict[str, dict[Quantity, list[tuple[int, float]]]] = {}

    def ingest(self, measurements: Iterable[Measurement]) -> None:
        for m in measurements:
            if m.flags & _EXCLUDED:
                continue
            if m.quantity not in (Quantity.O3, Quantity.PM25, *_TCI_INPUTS):
                continue
            series = self._series.setdefault(m.node_id, {}).setdefault(m.quantity, [])
            series.append((m.timestamp, m.value))

    def _window(self, station: str, q: Quantity, t0: int, t1: int) -> list[float]:
        return [v for ts, v in self._series.get(station, {}).get(q, []) if t0 <= ts < t1]

    def update(self, t: int) -> list[IndexValue]:
        """Recompute every index with windows ending at ``t`` (exclusive)."""
        out: list[IndexValue] = []
        for station in sorted(self._series):
            series = self._series[station]
            if Quantity.O3 in series:
                out.append(aqi_o3(self._window(station, Quantity.O3, t - O3_WINDOW_S, t), station, t))
            if Quantity.PM25 in series:
                out.append(aqi_pm(self._window(station, Quantity.PM25, t - PM_WINDOW_S, t), station, t))
            if all(q in series for q in _TCI_INPUTS):
                latest = {}
                for q in _TCI_INPUTS:
                    usable = [(ts, v) for ts, v in series[q] if ts <= t]
                    if usable:
                        latest[q] = usable[-1][1]
                if len(latest) == len(_TCI_INPUTS):
                    out.append(
                        tci(
                            latest[Quantity.TEMPERATURE],
                            latest[Quantity.RADIANT_TEMPERATURE],
                            latest[Quantity.WIND_SPEED],
                            latest[Quantity.RELATIVE_HUMIDITY],
                            station,
                            t,
                            model=self.thermal_model,
                        )
                    )
        return out


def update_indexes_on_ingest(
    computer: IndexComputer, measurements: Iterable[Measurement], t: int
) -> list[IndexValue]:
    """Ingest one report's measurements and recompute all indexes at ``t``."""
    computer.ingest(measurements)
    return computer.update(t)


def _iso(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def index_record_line(iv: IndexValue) -> str:
    """Line format: kind,station,window-end ISO-8601,value,color"""
    return f"{iv.kind.value},{iv.station_id},{_iso(iv.window_end)},{iv.value!r},{iv.color.value}"

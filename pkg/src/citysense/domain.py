"""Core value types shared across the sensing pipeline: quantities and their
units, WGS84 positions, measurements, node descriptors, and report batches.

Everything in this module is an immutable value; instances can be shared
freely between concurrent contexts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum


class Quantity(str, Enum):
    """Measured environmental quantities. The string value doubles as the
    wire/file code, so it must never change once data has been written."""

    TEMPERATURE = "temperature"
    RELATIVE_HUMIDITY = "relative_humidity"
    DEW_POINT = "dew_point"
    WIND_SPEED = "wind_speed"
    RADIANT_TEMPERATURE = "radiant_temperature"
    PM25 = "pm25"
    HC = "hc"
    CO2 = "co2"
    CO = "co"
    O3 = "o3"
    PRESSURE = "pressure"
    SOLAR_RADIATION = "solar_radiation"
    RAIN = "rain"


# Single source of truth for units. Total over Quantity (tested).
UNITS: dict[Quantity, str] = {
    Quantity.TEMPERATURE: "degC",
    Quantity.RELATIVE_HUMIDITY: "%",
    Quantity.DEW_POINT: "degC",
    Quantity.WIND_SPEED: "m/s",
    Quantity.RADIANT_TEMPERATURE: "degC",
    Quantity.PM25: "ug/m3",
    Quantity.HC: "ppmV",
    Quantity.CO2: "ppmV",
    Quantity.CO: "mg/m3",
    Quantity.O3: "ug/m3",
    Quantity.PRESSURE: "hPa",
    Quantity.SOLAR_RADIATION: "W/m2",
    Quantity.RAIN: "mm",
}

# Quantities whose readings are physically non-negative; enforced on
# Measurement values and clamped by the synthetic field.
NON_NEGATIVE_QUANTITIES: frozenset[Quantity] = frozenset(
    {
        Quantity.PM25,
        Quantity.HC,
        Quantity.CO2,
        Quantity.CO,
        Quantity.O3,
        Quantity.WIND_SPEED,
    }
)

# Channels served by the NDIR multi-gas sensor: slow warm-up, detection
# limit, and 1 ppm quantization all apply to these three.
GAS_QUANTITIES: frozenset[Quantity] = frozenset(
    {Quantity.HC, Quantity.CO2, Quantity.CO}
)


# CO readings are stored in mg/m3 while the sensor datasheet expresses its
# detection limit and resolution in ppm. The conversion is fixed at 25 degC
# and 1013 hPa; both functions below use the ideal-gas molar volume at that
# reference state.
CO_MOLAR_MASS_G_PER_MOL = 28.010
_GAS_CONSTANT = 8.314462618  # J/(mol K)
_REFERENCE_TEMPERATURE_K = 298.15
_REFERENCE_PRESSURE_PA = 101300.0
_MOLAR_VOLUME_L_PER_MOL = (
    1000.0 * _GAS_CONSTANT * _REFERENCE_TEMPERATURE_K / _REFERENCE_PRESSURE_PA
)


def co_ppm_to_mg_m3(ppm: float) -> float:
    """Convert a CO mixing ratio (ppmV) to mg/m3 at 25 degC, 1013 hPa."""
    return ppm * CO_MOLAR_MASS_G_PER_MOL / _MOLAR_VOLUME_L_PER_MOL


def co_mg_m3_to_ppm(mg_m3: float) -> float:
    """Inverse of :func:`co_ppm_to_mg_m3`."""
    return mg_m3 * _MOLAR_VOLUME_L_PER_MOL / CO_MOLAR_MASS_G_PER_MOL


class Flag(str, Enum):
    """Quality flags carried by a measurement."""

    BELOW_LOD = "below_lod"
    WARMING_UP = "warming_up"
    QUANTIZED = "quantized"


class NodeKind(str, Enum):
    FIXED = "fixed"
    MOBILE = "mobile"
    COORDINATOR = "coordinator"
    WEATHER_STATION = "weather_station"


class Radio(str, Enum):
    SHORT_RANGE_FIXED = "short_range_fixed"
    SHORT_RANGE_MOBILE = "short_range_mobile"
    WIDE_AREA = "wide_area"


class ValidationError(ValueError):
    """A value failed a domain invariant. Carries the offending field."""

    def __init__(self, field_name: str, reason: str):
        self.field_name = field_name
        self.reason = reason
        super().__init__(f"{field_name}: {reason}")


EARTH_RADIUS_M = 6371000.0


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 position in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValidationError("position", "coordinates must be finite")
        if not -90.0 <= self.lat <= 90.0:
            raise ValidationError("position", f"latitude {self.lat} out of range")
        if not -180.0 <= self.lon <= 180.0:
            raise ValidationError("position", f"longitude {self.lon} out of range")


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters on a spherical earth (R = 6371 km).

    Symmetric, non-negative, and zero iff ``a == b``. At city scale the
    spherical approximation is well below sensor-placement uncertainty.
    """
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlmb = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


@dataclass(frozen=True)
class Measurement:
    """One geo-referenced, timestamped sensor reading.

    ``timestamp`` is integer seconds since the Unix epoch (UTC); the 5-minute
    sampling cadence makes sub-second resolution pointless.
    """

    node_id: str
    timestamp: int
    position: GeoPoint
    quantity: Quantity
    value: float
    flags: frozenset[Flag] = field(default_factory=frozenset)

    @property
    def unit(self) -> str:
        return UNITS[self.quantity]


def validate_measurement(m: Measurement) -> Measurement:
    """Return ``m`` unchanged iff all single-record invariants hold.

    Raises:
        ValidationError: NaN/infinite value or a negative reading for a
            quantity that cannot be negative. Position range errors are
            raised by GeoPoint itself at construction time.
    """
    if not math.isfinite(m.value):
        raise ValidationError("value", f"not finite: {m.value!r}")
    if m.quantity in NON_NEGATIVE_QUANTITIES and m.value < 0.0:
        raise ValidationError("value", f"negative {m.quantity.value}: {m.value}")
    if not isinstance(m.timestamp, int):
        raise ValidationError("timestamp", "must be integer seconds UTC")
    return m


# Sensor suites allowed per node kind, mirroring the deployed hardware:
# wind/rain/radiation instruments never ride on a bicycle node, particulate
# and radiant-temperature sensors are fixed-site only.
_MOBILE_QUANTITIES = frozenset(
    {
        Quantity.TEMPERATURE,
        Quantity.RELATIVE_HUMIDITY,
        Quantity.DEW_POINT,
        Quantity.HC,
        Quantity.CO2,
        Quantity.CO,
        Quantity.O3,
        Quantity.PRESSURE,
    }
)
_FIXED_QUANTITIES = _MOBILE_QUANTITIES | frozenset(
    {Quantity.WIND_SPEED, Quantity.PM25, Quantity.RADIANT_TEMPERATURE}
)
_WEATHER_QUANTITIES = frozenset(
    {
        Quantity.TEMPERATURE,
        Quantity.RELATIVE_HUMIDITY,
        Quantity.DEW_POINT,
        Quantity.WIND_SPEED,
        Quantity.RAIN,
        Quantity.SOLAR_RADIATION,
        Quantity.PRESSURE,
    }
)

ALLOWED_QUANTITIES: dict[NodeKind, frozenset[Quantity]] = {
    NodeKind.FIXED: _FIXED_QUANTITIES,
    NodeKind.MOBILE: _MOBILE_QUANTITIES,
    NodeKind.COORDINATOR: _FIXED_QUANTITIES,
    NodeKind.WEATHER_STATION: _WEATHER_QUANTITIES,
}

_REQUIRED_RADIOS: dict[NodeKind, frozenset[Radio]] = {
    NodeKind.FIXED: frozenset({Radio.SHORT_RANGE_FIXED}),
    NodeKind.MOBILE: frozenset(
        {Radio.SHORT_RANGE_FIXED, Radio.SHORT_RANGE_MOBILE, Radio.WIDE_AREA}
    ),
    NodeKind.COORDINATOR: frozenset({Radio.SHORT_RANGE_FIXED, Radio.WIDE_AREA}),
    NodeKind.WEATHER_STATION: frozenset({Radio.SHORT_RANGE_FIXED}),
}


@dataclass(frozen=True)
class NodeDescriptor:
    """Identity and capabilities of one network node."""

    node_id: str
    kind: NodeKind
    sensor_suite: frozenset[Quantity]
    radios: frozenset[Radio]
    home_position: GeoPoint | None = None

    def __post_init__(self):
        if not self.node_id or any(c in self.node_id for c in ",; \t\n"):
            raise ValidationError("node_id", f"bad identifier {self.node_id!r}")
        missing = _REQUIRED_RADIOS[self.kind] - self.radios
        if missing:
            raise ValidationError(
                "radios",
                f"{self.kind.value} node {self.node_id} lacks {sorted(r.value for r in missing)}",
            )
        forbidden = self.sensor_suite - ALLOWED_QUANTITIES[self.kind]
        if forbidden:
            raise ValidationError(
                "sensor_suite",
                f"{sorted(q.value for q in forbidden)} not allowed on a {self.kind.value} node",
            )
        if self.kind is NodeKind.MOBILE:
            if self.home_position is not None:
                raise ValidationError("home_position", "mobile nodes have no home position")
        elif self.home_position is None:
            raise ValidationError(
                "home_position", f"{self.kind.value} node {self.node_id} needs one"
            )


@dataclass(frozen=True)
class ReportBatch:
    """The set of measurements a coordinator uplinks in one reporting slot."""

    coordinator_id: str
    uplink_time: int
    measurements: tuple[Measurement, ...]

    def __post_init__(self):
        for m in self.measurements:
            if m.timestamp > self.uplink_time:
                raise ValidationError(
                    "measurements",
                    f"timestamp {m.timestamp} after uplink time {self.uplink_time}",
                )

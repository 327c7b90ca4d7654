"""Synthetic ground-truth environment.

Every quantity gets a smooth, fully deterministic field

    value(q, p, t) = baseline
                   + diurnal_amplitude * sin(2*pi*(tod - 6h)/24h)
                   + sum of Gaussian plumes centred on hot spots
                   + traffic_coupling * rush_hour_profile(tod)

clamped to the physical range of the quantity. The sinusoid peaks at local
noon and integrates to zero over whole days, so daily population means stay
at the configured baselines. Sensor noise is *not* part of the field: nodes
draw it from per-(node, quantity) streams so that runs are reproducible and
streams are independent (see :func:`noise_generator`).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import (
    GeoPoint,
    NON_NEGATIVE_QUANTITIES,
    Quantity,
    haversine_distance,
)

SECONDS_PER_DAY = 86400


class UnknownQuantityError(KeyError):
    """The field has no configuration for the requested quantity."""


class EmptyPathError(ValueError):
    """A polyline with no vertices cannot be traversed."""


@dataclass(frozen=True)
class GaussianPlume:
    """A stationary hot spot: adds amplitude * exp(-d^2 / (2 sigma^2))."""

    center: GeoPoint
    sigma_m: float
    amplitude: float


def _rush_hour_profile(tod_s: float) -> float:
    # Two commuter peaks (08:00, 18:00), sigma 2.5 h, max ~1.
    morning = math.exp(-0.5 * ((tod_s - 8 * 3600.0) / 9000.0) ** 2)
    evening = math.exp(-0.5 * ((tod_s - 18 * 3600.0) / 9000.0) ** 2)
    return morning + evening


@dataclass(frozen=True)
class FieldModel:
    """Deterministic generator of ground-truth values.

    Identical configuration (including ``seed``) yields identical values at
    every query; the instance is read-only and safe to query concurrently.
    """

    seed: int
    baseline: dict[Quantity, float]
    diurnal_amplitude: dict[Quantity, float] = field(default_factory=dict)
    traffic_coupling: dict[Quantity, float] = field(default_factory=dict)
    plumes: dict[Quantity, tuple[GaussianPlume, ...]] = field(default_factory=dict)
    noise_sigma: dict[Quantity, float] = field(default_factory=dict)

    def value(self, quantity: Quantity, position: GeoPoint, t: int | float) -> float:
        """Ground-truth value of ``quantity`` at ``position`` and epoch second ``t``."""
        try:
            v = self.baseline[quantity]
        except KeyError:
            raise UnknownQuantityError(quantity) from None
        amp = self.diurnal_amplitude.get(quantity, 0.0)
        if amp:
            tod = t % SECONDS_PER_DAY
            v += amp * math.sin(2.0 * math.pi * (tod - 6 * 3600.0) / SECONDS_PER_DAY)
        coupling = self.traffic_coupling.get(quantity, 0.0)
        if coupling:
            v += coupling * _rush_hour_profile(t % SECONDS_PER_DAY)
        for plume in self.plumes.get(quantity, ()):
            d = haversine_distance(position, plume.center)
            v += plume.amplitude * math.exp(-0.5 * (d / plume.sigma_m) ** 2)
        if quantity in NON_NEGATIVE_QUANTITIES and v < 0.0:
            v = 0.0
        elif quantity is Quantity.RELATIVE_HUMIDITY:
            v = min(100.0, max(0.0, v))
        return v


def field_value(f: FieldModel, quantity: Quantity, position: GeoPoint, t: int | float) -> float:
    return f.value(quantity, position, t)


def _stable_id_hash(node_id: str) -> int:
    # hash() is salted per process; measurements must not depend on that.
    return int.from_bytes(hashlib.blake2s(node_id.encode(), digest_size=8).digest(), "big")


def noise_generator(f: FieldModel, node_id: str, quantity: Quantity) -> np.random.Generator:
    """Independent, reproducible white-noise stream for one sensor channel."""
    q_index = list(Quantity).index(quantity)
    return np.random.default_rng([f.seed, _stable_id_hash(node_id), q_index])


def loss_generator(seed: int, node_id: str) -> np.random.Generator:
    """Reproducible Bernoulli stream deciding link losses for one node."""
    return np.random.default_rng([seed, _stable_id_hash(node_id), 0xF0551])


@dataclass(frozen=True)
class Path:
    """A named polyline in WGS84 coordinates."""

    name: str
    vertices: tuple[GeoPoint, ...]

    def segment_lengths(self) -> tuple[float, ...]:
        return tuple(
            haversine_distance(a, b) for a, b in zip(self.vertices, self.vertices[1:])
        )

    def length(self) -> float:
        return sum(self.segment_lengths())


def _interpolate(a: GeoPoint, b: GeoPoint, frac: float) -> GeoPoint:
    # Linear in lat/lon; sub-kilometre segments make the chord error << 1 m.
    return GeoPoint(a.lat + (b.lat - a.lat) * frac, a.lon + (b.lon - a.lon) * frac)


def path_position(path: Path, speed_mps: float, t: float) -> GeoPoint:
    """Position after travelling along ``path`` for ``t`` seconds at constant speed.

    The path is arc-length parameterized and traversed back and forth
    (ping-pong): after reaching the far end the traveller turns around, so
    position is periodic with period ``2 * length / speed``.
    """
    if not path.vertices:
        raise EmptyPathError(path.name)
    if len(path.vertices) == 1:
        return path.vertices[0]
    if speed_mps <= 0.0:
        raise ValueError("speed must be positive")
    lengths = path.segment_lengths()
    total = sum(lengths)
    if total == 0.0:
        return path.vertices[0]
    s = (speed_mps * t) % (2.0 * total)
    if s > total:
        s = 2.0 * total - s
    for (a, b), seg in zip(zip(path.vertices, path.vertices[1:]), lengths):
        if s <= seg or seg == 0.0:
            if seg == 0.0:
                continue
            return _interpolate(a, b, s / seg)
        s -= seg
    return path.vertices[-1]

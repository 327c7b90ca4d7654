"""Sensor-node behaviour: periodic sampling and the sensor-physics chain.

Each reading goes through, in order:

    raw  = field_value * bias_mul + bias_add + noise
    lag  = first-order tracking with 90%-rise time t90
    clamp at the physical floor of the quantity
    LoD  : readings under the detection limit are zeroed and flagged
    quantize to the channel resolution (ties away from zero)

The multi-gas channels (CO, CO2, HC) additionally need a warm-up period
after power-on during which readings are emitted but flagged, never used
by the index pipelines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import (
    Flag,
    GeoPoint,
    Measurement,
    NON_NEGATIVE_QUANTITIES,
    NodeDescriptor,
    NodeKind,
    Quantity,
    co_ppm_to_mg_m3,
    validate_measurement,
)
from .field import FieldModel, Path, noise_generator, path_position

GAS_WARMUP_S = 900.0
GAS_T90_S = 90.0


@dataclass(frozen=True)
class SensorSpec:
    """Per-channel physics parameters, all in the quantity's storage unit."""

    quantity: Quantity
    warmup_s: float = 900.0
    t90_s: float = 90.0
    lod: float = 0.0
    resolution: float = 0.0

    def __post_init__(self):
        if self.warmup_s < 0 or self.t90_s <= 0 or self.lod < 0 or self.resolution < 0:
            raise ValueError(f"bad sensor spec for {self.quantity.value}")


def default_sensor_spec(quantity: Quantity) -> SensorSpec:
    """Datasheet defaults. The gas channels carry LoD and 1 ppm resolution;
    CO values are stored in mg/m3, so its ppm figures are converted."""
    if quantity is Quantity.CO:
        return SensorSpec(
            quantity,
            warmup_s=GAS_WARMUP_S,
            t90_s=GAS_T90_S,
            lod=co_ppm_to_mg_m3(5.0),
            resolution=co_ppm_to_mg_m3(1.0),
        )
    if quantity is Quantity.CO2:
        return SensorSpec(quantity, warmup_s=GAS_WARMUP_S, t90_s=GAS_T90_S, lod=10.0, resolution=1.0)
    if quantity is Quantity.HC:
        return SensorSpec(quantity, warmup_s=GAS_WARMUP_S, t90_s=GAS_T90_S, lod=5.0, resolution=1.0)
    return SensorSpec(quantity, warmup_s=0.0, t90_s=GAS_T90_S, lod=0.0, resolution=0.0)


def lag_filter(prev: float, target: float, dt: float, t90: float) -> float:
    """First-order exponential tracking.

    The rate is ln(10)/t90, so a step reaches exactly 90% of its height
    after t90 seconds and 99% after 2*t90. Contraction: the output is never
    farther from the target than ``prev`` was.
    """
    return target + (prev - target) * 10.0 ** (-dt / t90)


def quantize(v: float, resolution: float) -> float:
    """Round to the nearest multiple of ``resolution``, ties away from zero.

    ``resolution == 0`` means a continuous channel: ``v`` is returned as is.
    """
    if resolution == 0.0:
        return v
    steps = math.floor(abs(v) / resolution + 0.5)
    return math.copysign(steps * resolution, v)


@dataclass
class NodeState:
    """Mutable per-node simulation state, owned by a single simulation actor."""

    descriptor: NodeDescriptor
    powered_since: int = 0
    sensors: dict[Quantity, SensorSpec] = field(default_factory=dict)
    trajectory: tuple[Path, float] | None = None  # (route, speed m/s)
    bias_add: dict[Quantity, float] = field(default_factory=dict)
    bias_mul: dict[Quantity, float] = field(default_factory=dict)
    last_filtered: dict[Quantity, float] = field(default_factory=dict)
    _noise: dict[Quantity, np.random.Generator] = field(default_factory=dict)
    _last_sample_t: int | None = None

    def __post_init__(self):
        if self.descriptor.kind is NodeKind.MOBILE and self.trajectory is None:
            raise ValueError(f"mobile node {self.descriptor.node_id} needs a trajectory")
        for q in self.descriptor.sensor_suite:
            self.sensors.setdefault(q, default_sensor_spec(q))

    def position_at(self, t: float) -> GeoPoint:
        if self.trajectory is not None:
            route, speed = self.trajectory
            return path_position(route, speed, t - self.powered_since)
        return self.descriptor.home_position

    def attach_noise(self, f: FieldModel) -> None:
        for q in sorted(self.descriptor.sensor_suite, key=lambda q: q.value):
            self._noise[q] = noise_generator(f, self.descriptor.node_id, q)


def sample(node: NodeState, f: FieldModel, t: int) -> list[Measurement]:
    """Take one reading of every quantity in the node's suite at time ``t``.

    ``t`` must lie on the node's sampling grid; timestamps are epoch seconds.
    Degraded readings are emitted with flags rather than dropped, so the
    analytics layer sees the full population.
    """
    if not node._noise and node.descriptor.sensor_suite:
        node.attach_noise(f)
    dt = float(t - node._last_sample_t) if node._last_sample_t is not None else None
    node._last_sample_t = t
    position = node.position_at(t)
    out: list[Measurement] = []
    for q in sorted(node.descriptor.sensor_suite, key=lambda q: q.value):
        spec = node.sensors[q]
        truth = f.value(q, position, t)
        raw = truth * node.bias_mul.get(q, 1.0) + node.bias_add.get(q, 0.0)
        sigma = f.noise_sigma.get(q, 0.0)
        if sigma > 0.0:
            raw += node._noise[q].normal(0.0, sigma)
        prev = node.last_filtered.get(q)
        if prev is None or dt is None:
            value = raw  # sensor settles on its first reading
        else:
            value = lag_filter(prev, raw, dt, spec.t90_s)
        node.last_filtered[q] = value
        if q in NON_NEGATIVE_QUANTITIES and value < 0.0:
            value = 0.0
        flags: set[Flag] = set()
        if spec.warmup_s > 0 and (t - node.powered_since) < spec.warmup_s:
            flags.add(Flag.WARMING_UP)
        if spec.lod > 0.0 and value < spec.lod:
            value = 0.0
            flags.add(Flag.BELOW_LOD)
        if spec.resolution > 0.0:
            quantized = quantize(value, spec.resolution)
            if quantized != value:
                flags.add(Flag.QUANTIZED)
            value = quantized
        out.append(
            validate_measurement(
                Measurement(
                    node_id=node.descriptor.node_id,
                    timestamp=t,
                    position=position,
                    quantity=q,
                    value=value,
                    flags=frozenset(flags),
                )
            )
        )
    return out

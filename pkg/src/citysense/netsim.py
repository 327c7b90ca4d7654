"""Discrete-event network simulation: sampling ticks, link-level delivery,
coordinator batching, and server ingestion.

Topology is a star: fixed-site nodes always reach the coordinator over the
sub-GHz short-range link (subject to Bernoulli per-message loss); a mobile
node uses its short-range radio when some fixed-site node is inside radio
range and otherwise falls back to the wide-area uplink straight to the
server. The coordinator batches everything it heard and uplinks on a fixed
reporting grid, which in turn triggers index recomputation server-side.

The event loop is logically single-threaded: events are processed in strict
(time, sequence) order, so equal seeds give byte-identical results.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from .domain import (
    GAS_QUANTITIES,
    GeoPoint,
    Measurement,
    NodeDescriptor,
    NodeKind,
    Quantity,
    Radio,
    ReportBatch,
    haversine_distance,
)
from .field import loss_generator
from .indexes import IndexComputer, IndexValue
from .nodes import sample

if TYPE_CHECKING:
    from .scenario import ScenarioConfig

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """The scenario references something that does not resolve."""


@dataclass(frozen=True)
class LinkModel:
    """Delivery contract of one radio technology; no PHY modelling."""

    kind: Radio
    range_m: float
    loss_prob: float
    latency_s: float

    def __post_init__(self):
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError("loss_prob must be within [0, 1]")
        if self.range_m <= 0.0:
            raise ValueError("range_m must be positive")
        if self.latency_s < 0.0:
            raise ValueError("latency_s must be non-negative")


DEFAULT_LINKS: dict[Radio, LinkModel] = {
    Radio.SHORT_RANGE_FIXED: LinkModel(Radio.SHORT_RANGE_FIXED, 500.0, 0.0, 1.0),
    Radio.SHORT_RANGE_MOBILE: LinkModel(Radio.SHORT_RANGE_MOBILE, 300.0, 0.0, 1.0),
    Radio.WIDE_AREA: LinkModel(Radio.WIDE_AREA, math.inf, 0.0, 2.0),
}


class DeliveryOutcome(str, Enum):
    DELIVERED_TO_COORDINATOR = "delivered_to_coordinator"
    DELIVERED_TO_SERVER = "delivered_to_server"
    LOST = "lost"


@dataclass(frozen=True)
class DeliveryRecord:
    measurement: Measurement
    outcome: DeliveryOutcome
    link: Radio | None
    arrival_t: int | None  # None when lost


@dataclass(frozen=True)
class NetworkTopology:
    """Static routing context: who anchors the short-range mesh and which
    link parameters apply."""

    coordinator_id: str | None
    anchors: tuple[tuple[str, GeoPoint], ...]  # static nodes a mobile can reach
    links: dict[Radio, LinkModel]


def route_measurement(
    m: Measurement,
    node: NodeDescriptor,
    topo: NetworkTopology,
    rng: np.random.Generator,
) -> DeliveryRecord:
    """Decide how one freshly sampled measurement travels.

    Fixed-site kinds go to the coordinator over the short-range link; a
    mobile checks whether any static node is within its short-range radio
    range and otherwise uplinks directly over the wide area network. Loss is
    Bernoulli per message with the chosen link's probability; a lost message
    is an outcome, not an error, and is never retried.
    """
    if node.kind is NodeKind.COORDINATOR:
        # Local readings enter the coordinator buffer without a radio hop.
        return DeliveryRecord(m, DeliveryOutcome.DELIVERED_TO_COORDINATOR, None, m.timestamp)
    if node.kind is NodeKind.MOBILE:
        mobile_link = topo.links[Radio.SHORT_RANGE_MOBILE]
        in_range = any(
            haversine_distance(m.position, pos) <= mobile_link.range_m
            for _, pos in topo.anchors
        )
        if in_range and topo.coordinator_id is not None:
            link = mobile_link
            outcome = DeliveryOutcome.DELIVERED_TO_COORDINATOR
        else:
            link = topo.links[Radio.WIDE_AREA]
            outcome = DeliveryOutcome.DELIVERED_TO_SERVER
    else:
        if topo.coordinator_id is None:
            link = topo.links[Radio.WIDE_AREA]
            outcome = DeliveryOutcome.DELIVERED_TO_SERVER
        else:
            link = topo.links[Radio.SHORT_RANGE_FIXED]
            outcome = DeliveryOutcome.DELIVERED_TO_COORDINATOR
    if link.loss_prob > 0.0 and rng.random() < link.loss_prob:
        return DeliveryRecord(m, DeliveryOutcome.LOST, link.kind, None)
    return DeliveryRecord(m, outcome, link.kind, int(m.timestamp + link.latency_s))


def coordinator_uplink(
    coordinator_id: str,
    window_start: int,
    window_end: int,
    buffer: list[tuple[int, Measurement]],
) -> ReportBatch:
    """Assemble the reporting batch for the window [window_start, window_end).

    Batched items are removed from the buffer; measurements that have not
    arrived yet (or belong to a later window) stay. An empty batch is legal
    and merely signalled in the log.
    """
    picked: list[Measurement] = []
    remaining: list[tuple[int, Measurement]] = []
    for arrival_t, m in buffer:
        if arrival_t <= window_end and window_start <= m.timestamp < window_end:
            picked.append(m)
        else:
            remaining.append((arrival_t, m))
    buffer[:] = remaining
    picked.sort(key=lambda m: (m.timestamp, m.node_id, m.quantity.value))
    if not picked:
        logger.warning("empty uplink batch at t=%d", window_end)
    return ReportBatch(
        coordinator_id=coordinator_id,
        uplink_time=window_end,
        measurements=tuple(picked),
    )


# Event payloads, dequeued in (time, sequence) order; sequence numbers are
# assigned at push time, so ties resolve by insertion order.


@dataclass(frozen=True)
class SampleTick:
    node_id: str


@dataclass(frozen=True)
class UplinkTick:
    coordinator_id: str


@dataclass(frozen=True)
class Delivery:
    destination: str  # "coordinator" | "server"
    measurement: Measurement | None = None
    batch: ReportBatch | None = None


@dataclass(frozen=True)
class IndexTick:
    window_end: int


class EventQueue:
    """Priority queue over (time, sequence); deterministic total order."""

    def __init__(self):
        self._heap: list[tuple[int, int, object]] = []
        self._seq = itertools.count()

    def push(self, t: int, event: object) -> None:
        heapq.heappush(self._heap, (t, next(self._seq), event))

    def pop(self) -> tuple[int, int, object]:
        return heapq.heappop(self._heap)

    def __len__(self) -> int:
        return len(self._heap)


@dataclass
class Tally:
    emitted: int = 0
    to_coordinator: int = 0
    to_server: int = 0
    lost: int = 0

    @property
    def delivered(self) -> int:
        return self.to_coordinator + self.to_server


@dataclass
class SimulationResult:
    """Everything a run produced, in deterministic order."""

    scenario_name: str
    seed: int
    server_measurements: list[tuple[int, Measurement]] = field(default_factory=list)
    batches: list[ReportBatch] = field(default_factory=list)
    deliveries: list[DeliveryRecord] = field(default_factory=list)
    index_updates: list[IndexValue] = field(default_factory=list)
    tallies: dict[tuple[str, Quantity], Tally] = field(default_factory=dict)

    def tally_for_node(self, node_id: str) -> Tally:
        agg = Tally()
        for (nid, _), t in self.tallies.items():
            if nid == node_id:
                agg.emitted += t.emitted
                agg.to_coordinator += t.to_coordinator
                agg.to_server += t.to_server
                agg.lost += t.lost
        return agg

    def gas_reports_per_window(self, t_i: int, start_epoch: int) -> dict[int, int]:
        """Distinct (node, tick) gas reports the server holds per uplink
        window, keyed by 1-based window number."""
        seen: dict[int, set[tuple[str, int]]] = {}
        for _, m in self.server_measurements:
            if m.quantity in GAS_QUANTITIES:
                window = (m.timestamp - start_epoch) // t_i + 1
                seen.setdefault(window, set()).add((m.node_id, m.timestamp))
        return {w: len(s) for w, s in sorted(seen.items())}


def run(scenario: "ScenarioConfig") -> SimulationResult:
    """Execute the scenario and return its full, deterministic output."""
    scenario.validate()
    states = scenario.build_node_states()
    field_model = scenario.field
    start = scenario.start_epoch

    coordinator = next(
        (s.descriptor.node_id for s in states if s.descriptor.kind is NodeKind.COORDINATOR),
        None,
    )
    anchors = tuple(
        (s.descriptor.node_id, s.descriptor.home_position)
        for s in states
        if s.descriptor.kind is not NodeKind.MOBILE
    )
    topo = NetworkTopology(coordinator_id=coordinator, anchors=anchors, links=scenario.links)
    loss_rngs = {
        s.descriptor.node_id: loss_generator(scenario.seed, s.descriptor.node_id)
        for s in states
    }
    by_id = {s.descriptor.node_id: s for s in states}

    result = SimulationResult(scenario_name=scenario.name, seed=scenario.seed)
    computer = IndexComputer(thermal_model=scenario.thermal_model)
    queue = EventQueue()
    buffer: list[tuple[int, Measurement]] = []

    for s in states:
        if not s.descriptor.sensor_suite:
            continue
        for t in range(0, scenario.duration_s, scenario.sample_period_s):
            queue.push(start + t, SampleTick(s.descriptor.node_id))
    uplink_grid = range(
        scenario.uplink_period_s, scenario.duration_s + 1, scenario.uplink_period_s
    )
    if coordinator is not None:
        for t in uplink_grid:
            queue.push(start + t, UplinkTick(coordinator))
    else:
        # No coordinator: still recompute indexes on the reporting grid.
        wa_latency = int(scenario.links[Radio.WIDE_AREA].latency_s)
        for t in uplink_grid:
            queue.push(start + t + wa_latency, IndexTick(window_end=start + t))

    while queue:
        t, _, event = queue.pop()
        if isinstance(event, SampleTick):
            node = by_id[event.node_id]
            for m in sample(node, field_model, t):
                record = route_measurement(m, node.descriptor, topo, loss_rngs[event.node_id])
                result.deliveries.append(record)
                tally = result.tallies.setdefault((m.node_id, m.quantity), Tally())
                tally.emitted += 1
                if record.outcome is DeliveryOutcome.LOST:
                    tally.lost += 1
                elif record.outcome is DeliveryOutcome.DELIVERED_TO_COORDINATOR:
                    tally.to_coordinator += 1
                    queue.push(record.arrival_t, Delivery("coordinator", measurement=m))
                else:
                    tally.to_server += 1
                    queue.push(record.arrival_t, Delivery("server", measurement=m))
        elif isinstance(event, UplinkTick):
            batch = coordinator_uplink(
                event.coordinator_id, t - scenario.uplink_period_s, t, buffer
            )
            wa_latency = scenario.links[Radio.WIDE_AREA].latency_s
            queue.push(t + int(wa_latency), Delivery("server", batch=batch))
        elif isinstance(event, IndexTick):
            result.index_updates.extend(computer.update(event.window_end))
        elif isinstance(event, Delivery):
            if event.destination == "coordinator":
                buffer.append((t, event.measurement))
            elif event.measurement is not None:
                result.server_measurements.append((t, event.measurement))
                computer.ingest([event.measurement])
            else:
                batch = event.batch
                result.batches.append(batch)
                for m in batch.measurements:
                    result.server_measurements.append((t, m))
                computer.ingest(batch.measurements)
                # Every received report triggers an index refresh with
                # windows ending at the report-slot boundary.
                result.index_updates.extend(computer.update(batch.uplink_time))
    return result

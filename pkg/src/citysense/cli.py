"""Command line surface: run scenarios, recompute indexes, compare
populations, evaluate the traffic index.

Exit codes: 0 success, 1 configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path as FsPath

import yaml

from .analytics import (
    NoOverlapError,
    associate_mobile_to_fixed,
    compare_populations,
    write_comparison_report,
)
from .domain import GeoPoint, NodeKind
from .indexes import (
    DEFAULT_MANEUVER_EQUIVALENTS,
    DegenerateCompositionError,
    IndexComputer,
    TrafficAccessConfig,
    apparent_temperature_model,
    identity_thermal_model,
    index_record_line,
    traffic_index,
)
from .netsim import ConfigError, run
from .scenario import load_scenario, with_seed
from .store import MeasurementStore, StorageError, serialize_delivery, write_delivery_log

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    # Usage mistakes are configuration errors, not data errors.
    def error(self, message):
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="citysense", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a scenario and persist its outputs")
    p_sim.add_argument("--scenario", required=True, help="scenario YAML path or bundled name")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    p_idx = sub.add_parser("indexes", help="recompute index records from stored data")
    p_idx.add_argument("data_dir", help="directory holding measurement files")
    p_idx.add_argument("--out", required=True, help="output directory")
    p_idx.add_argument("--uplink-period-s", type=int, default=900)
    p_idx.add_argument(
        "--thermal", choices=("identity", "apparent"), default="apparent",
        help="thermal model feeding the comfort index",
    )

    p_cmp = sub.add_parser("compare", help="compare two measurement populations")
    p_cmp.add_argument("data_dir", help="directory holding measurement files + nodes.json")
    p_cmp.add_argument("--mode", choices=("paths", "mobile-fixed"), required=True)
    p_cmp.add_argument("--out", required=True, help="output directory")
    p_cmp.add_argument(
        "--radius-m", type=float, default=500.0,
        help="association radius for mobile-fixed mode",
    )

    p_tr = sub.add_parser("traffic", help="evaluate the traffic index for an access")
    p_tr.add_argument("config", help="access configuration YAML")
    return parser


# ---------------------------------------------------------------------------
# simulate


def _cmd_simulate(args) -> int:
    cfg = load_scenario(args.scenario)
    if args.seed is not None:
        cfg = with_seed(cfg, args.seed)
    result = run(cfg)

    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with MeasurementStore(out, overwrite=True) as store:
        for _, m in result.server_measurements:
            store.append(m)
    write_delivery_log(
        (
            serialize_delivery(
                d.measurement.timestamp,
                d.measurement.node_id,
                d.measurement.quantity,
                d.outcome.value,
                d.link.value if d.link else None,
                d.arrival_t,
            )
            for d in result.deliveries
        ),
        out / "delivery-log.txt",
    )
    nodes_doc = {
        n.descriptor.node_id: {
            "kind": n.descriptor.kind.value,
            "lat": n.descriptor.home_position.lat if n.descriptor.home_position else None,
            "lon": n.descriptor.home_position.lon if n.descriptor.home_position else None,
            "path": n.path_tag,
            "quantities": sorted(q.value for q in n.descriptor.sensor_suite),
        }
        for n in cfg.nodes
    }
    (out / "nodes.json").write_text(json.dumps(nodes_doc, indent=2, sort_keys=True) + "\n")

    print(f"scenario {cfg.name!r} seed {cfg.seed}: {cfg.duration_s} s simulated")
    total_emitted = total_lost = 0
    for node in cfg.nodes:
        tally = result.tally_for_node(node.descriptor.node_id)
        if tally.emitted == 0:
            continue
        total_emitted += tally.emitted
        total_lost += tally.lost
        print(
            f"  {node.descriptor.node_id}: emitted {tally.emitted}, "
            f"to coordinator {tally.to_coordinator}, direct {tally.to_server}, "
            f"lost {tally.lost}"
        )
    rate = total_lost / total_emitted if total_emitted else 0.0
    print(f"  server received {len(result.server_measurements)} measurements, "
          f"loss rate {rate:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# indexes


def _cmd_indexes(args) -> int:
    try:
        store = MeasurementStore(args.data_dir)
    except (StorageError, ValueError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    records = store.all()
    if not records:
        print(f"data error: no measurements under {args.data_dir}", file=sys.stderr)
        return EXIT_DATA
    model = identity_thermal_model if args.thermal == "identity" else apparent_temperature_model
    computer = IndexComputer(thermal_model=model)
    t_i = args.uplink_period_s
    t_min, t_max = records[0].timestamp, records[-1].timestamp
    grid = range((t_min // t_i + 1) * t_i, (t_max // t_i + 2) * t_i, t_i)

    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for old in out.glob("indexes_*.txt"):
        old.unlink()
    lines_by_station: dict[str, list[str]] = {}
    latest: dict[tuple[str, str], str] = {}
    i = 0
    for t in grid:
        while i < len(records) and records[i].timestamp < t:
            computer.ingest([records[i]])
            i += 1
        for iv in computer.update(t):
            lines_by_station.setdefault(iv.station_id, []).append(index_record_line(iv))
            latest[(iv.station_id, iv.kind.value)] = iv.color.value
    for station in sorted(lines_by_station):
        (out / f"indexes_{station}.txt").write_text(
            "\n".join(lines_by_station[station]) + "\n"
        )
    for (station, kind), color in sorted(latest.items()):
        print(f"{station} {kind}: {color}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare


def _load_nodes_doc(data_dir: FsPath) -> dict:
    nodes_path = data_dir / "nodes.json"
    if not nodes_path.is_file():
        raise StorageError(f"missing {nodes_path}; run `citysense simulate` first")
    return json.loads(nodes_path.read_text())


def _cmd_compare(args) -> int:
    data_dir = FsPath(args.data_dir)
    try:
        store = MeasurementStore(data_dir)
        nodes_doc = _load_nodes_doc(data_dir)
    except (StorageError, ValueError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    records = store.all()
    by_node: dict[str, list] = {}
    for m in records:
        by_node.setdefault(m.node_id, []).append(m)

    if args.mode == "paths":
        tags: dict[str, list[str]] = {}
        for nid, meta in nodes_doc.items():
            if meta["kind"] == NodeKind.FIXED.value and meta.get("path"):
                tags.setdefault(meta["path"], []).append(nid)
        if len(tags) != 2:
            print(
                f"data error: paths mode needs exactly two path tags, found {sorted(tags)}",
                file=sys.stderr,
            )
            return EXIT_DATA
        # Deterministic orientation: alphabetically first tag is population a,
        # second is the reference population b.
        tag_a, tag_b = sorted(tags)
        pop_a = [m for nid in tags[tag_a] for m in by_node.get(nid, [])]
        pop_b = [m for nid in tags[tag_b] for m in by_node.get(nid, [])]
        labels = (tag_a, tag_b)
    else:
        fixed = [
            (nid, GeoPoint(meta["lat"], meta["lon"]))
            for nid, meta in sorted(nodes_doc.items())
            if meta["kind"] == NodeKind.FIXED.value
        ]
        mobile = [
            m
            for nid, meta in sorted(nodes_doc.items())
            if meta["kind"] == NodeKind.MOBILE.value
            for m in by_node.get(nid, [])
        ]
        association = associate_mobile_to_fixed(mobile, fixed, radius_m=args.radius_m)
        pop_a = [m for ms in association.by_station.values() for m in ms]
        pop_b = [m for sid in association.by_station for m in by_node.get(sid, [])]
        labels = ("mobile", "fixed")
        print(
            f"associated {len(pop_a)} mobile samples to "
            f"{len(association.by_station)} stations within {args.radius_m:.0f} m "
            f"({len(association.unassociated)} unassociated)"
        )
    try:
        report = compare_populations(pop_a, pop_b, labels=labels)
    except (NoOverlapError, ValueError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA

    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for old in out.glob("pmf_*.dat"):
        old.unlink()
    write_comparison_report(report, out)
    print(f"{'quantity':22s} {'mean_' + labels[0]:>14s} {'mean_' + labels[1]:>14s} {'rel_err':>8s}")
    for row in report.rows:
        print(
            f"{row.quantity.value:22s} {row.mean_a:14.4f} {row.mean_b:14.4f} {row.eta:8.3f}"
        )
    if report.incomparable:
        print("incomparable:", ", ".join(q.value for q in report.incomparable))
    return EXIT_OK


# ---------------------------------------------------------------------------
# traffic


def _cmd_traffic(args) -> int:
    path = FsPath(args.config)
    if not path.is_file():
        raise ConfigError(f"access configuration not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping")
    allowed = {
        "composition", "maneuver_shares", "steepness_pct", "grade",
        "localization", "s_b", "maneuver_equivalents",
    }
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    try:
        cfg = TrafficAccessConfig(
            composition={str(k): float(v) for k, v in (raw.get("composition") or {}).items()},
            maneuver_shares={
                str(k): float(v) for k, v in (raw.get("maneuver_shares") or {"straight": 1.0}).items()
            },
            steepness_pct=float(raw.get("steepness_pct", 0.0)),
            grade=str(raw.get("grade", "flat")),
            localization=str(raw.get("localization", "residential")),
            s_b=float(raw.get("s_b", 1800.0)),
            maneuver_equivalents=(
                {str(k): float(v) for k, v in raw["maneuver_equivalents"].items()}
                if raw.get("maneuver_equivalents")
                else dict(DEFAULT_MANEUVER_EQUIVALENTS)
            ),
        )
        k1, k2, k3, k4 = cfg.factors()
        iv = traffic_index(cfg)
    except (DegenerateCompositionError, ValueError) as e:
        raise ConfigError(str(e)) from None
    print(f"composition factor  K1 = {k1:.6f}")
    print(f"steepness factor    K2 = {k2:.6f}")
    print(f"localization factor K3 = {k3:.6f}")
    print(f"maneuvering factor  K4 = {k4:.6f}")
    print(f"base factor         s_b = {cfg.s_b:.1f}")
    print(f"TI = {iv.value:.4f} EV/s")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "indexes": _cmd_indexes,
        "compare": _cmd_compare,
        "traffic": _cmd_traffic,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except StorageError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

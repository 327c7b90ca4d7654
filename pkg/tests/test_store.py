import math

import pytest
from hypothesis import given, strategies as st

from citysense.analytics import associate_mobile_to_fixed
from citysense.domain import (
    Flag,
    GeoPoint,
    Measurement,
    NodeDescriptor,
    NodeKind,
    Quantity,
    Radio,
    ReportBatch,
)
from citysense.store import (
    MeasurementStore,
    QueryFilter,
    parse_measurement,
    serialize_measurement,
)

P = GeoPoint(43.716, 10.3966)
T0 = 1_429_488_000  # 2015-04-20T00:00:00Z
M_PER_DEG_LAT = math.pi * 6371000.0 / 180.0


def offset(base, north_m):
    return GeoPoint(base.lat + north_m / M_PER_DEG_LAT, base.lon)


def meas(node="T1", t=T0, quantity=Quantity.CO2, value=451.0, position=P, flags=frozenset()):
    return Measurement(node, t, position, quantity, value, flags)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@st.composite
def measurements(draw):
    q = draw(st.sampled_from(list(Quantity)))
    value = draw(finite)
    if q in {Quantity.PM25, Quantity.HC, Quantity.CO2, Quantity.CO, Quantity.O3, Quantity.WIND_SPEED}:
        value = abs(value)
    return Measurement(
        node_id=draw(st.from_regex(r"[A-Za-z0-9_-]{1,12}", fullmatch=True)),
        timestamp=draw(st.integers(0, 4_000_000_000)),
        position=GeoPoint(
            draw(st.floats(-90, 90, allow_nan=False)),
            draw(st.floats(-180, 180, allow_nan=False)),
        ),
        quantity=q,
        value=value,
        flags=frozenset(draw(st.sets(st.sampled_from(list(Flag))))),
    )


class TestRecordFormat:
    def test_example_line(self):
        m = meas(flags=frozenset({Flag.QUANTIZED}))
        line = serialize_measurement(m)
        assert line == "2015-04-20T00:00:00Z,T1,43.716,10.3966,co2,451.0,ppmV,quantized"

    def test_flags_are_sorted_and_semicolon_joined(self):
        m = meas(flags=frozenset({Flag.QUANTIZED, Flag.BELOW_LOD}))
        assert serialize_measurement(m).endswith(",below_lod;quantized")

    @given(measurements())
    def test_round_trip_is_bit_exact(self, m):
        assert parse_measurement(serialize_measurement(m)) == m

    def test_rejects_malformed_line(self):
        with pytest.raises(ValueError):
            parse_measurement("not,a,record")

    def test_rejects_unit_mismatch(self):
        line = "2015-04-20T00:00:00Z,T1,43.716,10.3966,co2,451.0,mg/m3,"
        with pytest.raises(ValueError):
            parse_measurement(line)


def batch_of(n, t0=T0):
    ms = tuple(
        meas(node=f"N{i % 9}", t=t0 + 300 * (i // 9)) for i in range(n)
    )
    return ReportBatch("C0", t0 + 900, ms)


class TestStore:
    def test_append_batch_counts_writes(self, tmp_path):
        with MeasurementStore(tmp_path) as store:
            assert store.append(batch_of(27)) == 27

    def test_reappend_is_idempotent(self, tmp_path):
        with MeasurementStore(tmp_path) as store:
            assert store.append(batch_of(27)) == 27
            assert store.append(batch_of(27)) == 0
            assert len(store) == 27

    def test_empty_batch_writes_nothing(self, tmp_path):
        with MeasurementStore(tmp_path) as store:
            assert store.append(ReportBatch("C0", T0, ())) == 0

    def test_idempotent_across_reopen(self, tmp_path):
        with MeasurementStore(tmp_path) as store:
            store.append(batch_of(27))
        with MeasurementStore(tmp_path) as store:
            assert store.append(batch_of(27)) == 0
            assert len(store.all()) == 27

    def test_round_trip_through_files(self, tmp_path):
        original = sorted(
            (meas(node=f"N{i}", value=451.0 + i / 7.0) for i in range(10)),
            key=lambda m: (m.timestamp, m.node_id, m.quantity.value),
        )
        with MeasurementStore(tmp_path) as store:
            store.append(original)
        reopened = MeasurementStore(tmp_path)
        assert reopened.all() == original

    def test_day_partitioning_and_in_file_order(self, tmp_path):
        day = 86400
        ms = [
            meas(t=T0 + day + 600),
            meas(t=T0 + 300),
            meas(t=T0),
            meas(t=T0 + day),
        ]
        with MeasurementStore(tmp_path) as store:
            store.append(ms)
        files = sorted(p.name for p in tmp_path.glob("measurements-*.txt"))
        assert files == ["measurements-2015-04-20.txt", "measurements-2015-04-21.txt"]
        for p in tmp_path.glob("measurements-*.txt"):
            stamps = [line.split(",")[0] for line in p.read_text().splitlines()]
            assert stamps == sorted(stamps)

    def test_query_full_range_returns_all(self, tmp_path):
        store = MeasurementStore(tmp_path)
        store.append(batch_of(27))
        out = store.query(QueryFilter(t0=0, t1=2**62))
        assert len(out) == 27

    def test_query_results_independent_of_append_order(self, tmp_path):
        ms = [meas(node=f"N{i}", t=T0 + 300 * i) for i in range(6)]
        a = MeasurementStore(tmp_path / "a")
        a.append(ms)
        b = MeasurementStore(tmp_path / "b")
        b.append(list(reversed(ms)))
        f = QueryFilter(t0=0, t1=2**62)
        assert a.query(f) == b.query(f)

    def test_query_empty_time_range(self, tmp_path):
        store = MeasurementStore(tmp_path)
        store.append(batch_of(27))
        assert store.query(QueryFilter(t0=T0 - 1000, t1=T0)) == []

    def test_query_by_node_and_quantity(self, tmp_path):
        store = MeasurementStore(tmp_path)
        store.append([meas(node="A"), meas(node="B"), meas(node="A", quantity=Quantity.O3, value=50.0)])
        out = store.query(
            QueryFilter(t0=0, t1=2**62, node_ids=frozenset({"A"}), quantities=frozenset({Quantity.CO2}))
        )
        assert len(out) == 1 and out[0].node_id == "A" and out[0].quantity is Quantity.CO2

    def test_geo_query_matches_association_prefilter(self, tmp_path):
        # a 500 m circle around one station equals that station's
        # association input set on a single-station fixture
        store = MeasurementStore(tmp_path)
        samples = [
            meas(node="M1", t=T0 + i * 300, position=offset(P, 120 * i))
            for i in range(8)
        ]
        store.append(samples)
        circle = store.query(
            QueryFilter(t0=0, t1=2**62, geo_center=P, geo_radius_m=500.0)
        )
        a = NodeDescriptor(
            "A", NodeKind.FIXED, frozenset({Quantity.CO2}),
            frozenset({Radio.SHORT_RANGE_FIXED}), home_position=P,
        )
        assoc = associate_mobile_to_fixed(samples, [a], radius_m=500.0)
        assert sorted(circle, key=lambda m: m.timestamp) == sorted(
            assoc.by_station.get("A", ()), key=lambda m: m.timestamp
        )

    def test_filter_validation(self):
        with pytest.raises(ValueError):
            QueryFilter(t0=10, t1=10)
        with pytest.raises(ValueError):
            QueryFilter(t0=0, t1=1, geo_center=P)
        with pytest.raises(ValueError):
            QueryFilter(t0=0, t1=1, geo_center=P, geo_radius_m=0.0)

    def test_overwrite_mode_clears_existing_files(self, tmp_path):
        with MeasurementStore(tmp_path) as store:
            store.append(batch_of(27))
        with MeasurementStore(tmp_path, overwrite=True) as store:
            assert len(store) == 0
            store.append([meas()])
        assert len(MeasurementStore(tmp_path).all()) == 1

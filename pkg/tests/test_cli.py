import hashlib
import json

import pytest

from citysense.cli import main


def digest_tree(root):
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file():
            out[str(p.relative_to(root))] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out


@pytest.fixture
def sim_dir(small_scenario_file, tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--scenario", str(small_scenario_file), "--out", str(out)]) == 0
    return out


class TestSimulate:
    def test_writes_expected_outputs(self, sim_dir):
        names = {p.name for p in sim_dir.iterdir()}
        assert "delivery-log.txt" in names
        assert "nodes.json" in names
        assert any(n.startswith("measurements-") for n in names)
        nodes = json.loads((sim_dir / "nodes.json").read_text())
        assert nodes["T1"]["kind"] == "fixed"
        assert nodes["M1"]["lat"] is None

    def test_missing_scenario_file_exits_nonzero_and_names_path(self, tmp_path, capsys):
        rc = main(["simulate", "--scenario", str(tmp_path / "ghost.yaml"), "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "ghost.yaml" in capsys.readouterr().err

    def test_same_seed_identical_digests(self, small_scenario_file, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main([
                "simulate", "--scenario", str(small_scenario_file),
                "--out", str(out), "--seed", "42",
            ]) == 0
        assert digest_tree(a) == digest_tree(b)

    def test_seed_changes_output(self, small_scenario_file, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--scenario", str(small_scenario_file), "--out", str(a), "--seed", "1"])
        main(["simulate", "--scenario", str(small_scenario_file), "--out", str(b), "--seed", "2"])
        assert digest_tree(a) != digest_tree(b)

    def test_rerun_overwrites_deterministically(self, small_scenario_file, sim_dir):
        before = digest_tree(sim_dir)
        assert main(["simulate", "--scenario", str(small_scenario_file), "--out", str(sim_dir)]) == 0
        assert digest_tree(sim_dir) == before


class TestIndexes:
    def test_emits_per_station_records(self, sim_dir, tmp_path, capsys):
        out = tmp_path / "idx"
        assert main(["indexes", str(sim_dir), "--out", str(out)]) == 0
        files = sorted(p.name for p in out.glob("indexes_*.txt"))
        assert "indexes_T1.txt" in files
        line = (out / "indexes_T1.txt").read_text().splitlines()[0]
        kind, station, stamp, value, color = line.split(",")
        assert kind in {"aqi_o3", "aqi_pm", "tci"}
        assert station == "T1"
        assert stamp.endswith("Z")
        assert "T1" in capsys.readouterr().out

    def test_empty_store_is_data_error(self, tmp_path):
        assert main(["indexes", str(tmp_path / "nothing"), "--out", str(tmp_path / "o")]) == 2


class TestCompare:
    def test_mobile_fixed_mode(self, sim_dir, tmp_path):
        out = tmp_path / "cmp"
        rc = main(["compare", str(sim_dir), "--mode", "mobile-fixed", "--out", str(out)])
        assert rc == 0
        doc = json.loads((out / "comparison.json").read_text())
        assert doc["labels"] == ["mobile", "fixed"]
        assert "co2" in doc["rows"]
        assert (out / "pmf_co2_mobile.dat").exists()
        assert (out / "pmf_co2_fixed.dat").exists()

    def test_paths_mode(self, sim_dir, tmp_path):
        out = tmp_path / "cmp"
        rc = main(["compare", str(sim_dir), "--mode", "paths", "--out", str(out)])
        assert rc == 0
        doc = json.loads((out / "comparison.json").read_text())
        assert doc["labels"] == ["loop", "other"]

    def test_radius_flag_controls_association(self, sim_dir, tmp_path, capsys):
        counts = {}
        for radius in ("5", "500"):
            rc = main([
                "compare", str(sim_dir), "--mode", "mobile-fixed",
                "--out", str(tmp_path / f"cmp{radius}"), "--radius-m", radius,
            ])
            assert rc == 0
            first_line = capsys.readouterr().out.splitlines()[0]
            counts[radius] = int(first_line.split()[1])
        assert counts["5"] < counts["500"]

    def test_missing_nodes_json_is_data_error(self, sim_dir, tmp_path, capsys):
        (sim_dir / "nodes.json").unlink()
        rc = main(["compare", str(sim_dir), "--mode", "paths", "--out", str(tmp_path / "x")])
        assert rc == 2
        assert "nodes.json" in capsys.readouterr().err

    def test_determinism(self, sim_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["compare", str(sim_dir), "--mode", "mobile-fixed", "--out", str(out)]) == 0
        assert digest_tree(a) == digest_tree(b)


class TestTraffic:
    def _write(self, tmp_path, text):
        p = tmp_path / "access.yaml"
        p.write_text(text)
        return p

    def test_prints_ti_and_factors(self, tmp_path, capsys):
        p = self._write(
            tmp_path,
            "composition: {cars: 0.5, motorcycles: 0.5}\n"
            "steepness_pct: 5\ngrade: uphill\nlocalization: business\n",
        )
        assert main(["traffic", str(p)]) == 0
        out = capsys.readouterr().out
        assert "K1" in out and "K4" in out
        assert "TI = 1955.6391" in out

    def test_all_cars_base_value(self, tmp_path, capsys):
        p = self._write(tmp_path, "composition: {cars: 1.0}\n")
        assert main(["traffic", str(p)]) == 0
        assert "TI = 1800.0000" in capsys.readouterr().out

    def test_bad_shares_config_error(self, tmp_path, capsys):
        p = self._write(tmp_path, "composition: {cars: 0.2}\n")
        assert main(["traffic", str(p)]) == 1

    def test_degenerate_composition_config_error(self, tmp_path):
        p = self._write(
            tmp_path,
            "composition: {cars: 1.0}\n"
            "maneuver_equivalents: {straight: 0.0, turning_right: 1.25, turning_left: 1.75}\n",
        )
        assert main(["traffic", str(p)]) == 1

    def test_missing_file(self, tmp_path):
        assert main(["traffic", str(tmp_path / "none.yaml")]) == 1


class TestParser:
    def test_usage_error_exit_code_is_config(self):
        with pytest.raises(SystemExit) as e:
            main(["simulate"])  # missing required flags
        assert e.value.code == 1

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as e:
            main(["banana"])
        assert e.value.code == 1

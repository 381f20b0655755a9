import json
from pathlib import Path

import pytest

from windfleet.cli import main
from windfleet.pipeline import load_config_file, parse_scenario
from windfleet.errors import ConfigError


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    """One deterministic synthetic bundle shared by the CLI tests."""
    path = tmp_path_factory.mktemp("bundle")
    code = main(["synth", "--out", str(path), "--n-turbines", "10",
                 "--years", "2010:2011", "--wind", "sinusoidal:8,2,720",
                 "--hub", "80,2", "--rotor", "100,3",
                 "--efficiency", "0.3,-0.003", "--seed", "5"])
    assert code == 0
    return path


def run_report(fixture_dir, out, extra=()):
    return main(["report", "--config", str(fixture_dir / "run.conf"),
                 "--out", str(out), *extra])


class TestSynthCommand:
    def test_bundle_files(self, fixture_dir):
        for name in ("turbines.csv", "wind.wgrd", "generation.csv",
                     "reference.csv", "run.conf"):
            assert (fixture_dir / name).is_file()

    def test_config_parses(self, fixture_dir):
        values = load_config_file(fixture_dir / "run.conf")
        assert values["start_year"] == "2010"
        assert Path(values["turbines"]).is_file()


class TestConvertGrid:
    def make_csv(self, path, drop_last=False):
        rows = ["time_index,lat,lon,u10,v10,u100,v100"]
        for t in range(2):
            for lat in (36.0, 37.0):
                for lon in (-99.0, -98.0):
                    rows.append(f"{t},{lat},{lon},3,4,6,8")
        if drop_last:
            rows.pop()
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    def test_round_trip(self, tmp_path):
        csv_path = tmp_path / "grid.csv"
        self.make_csv(csv_path)
        out = tmp_path / "grid.wgrd"
        assert main(["convert-grid", "--csv", str(csv_path), "--out", str(out),
                     "--start-time", "2010-01-01"]) == 0
        from windfleet.windgrid import load_windgrid
        grid = load_windgrid(out)
        assert grid.n_time == 2
        assert grid.t0 == 1262304000
        assert float(grid.u10[0, 0, 0]) == 3.0

    def test_ragged_grid_exit_code(self, tmp_path, capsys):
        csv_path = tmp_path / "grid.csv"
        self.make_csv(csv_path, drop_last=True)
        code = main(["convert-grid", "--csv", str(csv_path),
                     "--out", str(tmp_path / "x.wgrd")])
        assert code == 3
        assert "ragged grid" in capsys.readouterr().err


class TestPinCommand:
    def test_series_csv(self, fixture_dir, tmp_path):
        out = tmp_path / "pin.csv"
        code = main(["pin", "--turbines", str(fixture_dir / "turbines.csv"),
                     "--windgrid", str(fixture_dir / "wind.wgrd"),
                     "--years", "2010:2011", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "year,value,unit"
        assert len(lines) == 3
        year, value, unit = lines[1].split(",")
        assert year == "2010" and unit == "W" and float(value) > 0


class TestReportCommand:
    def test_full_run(self, fixture_dir, tmp_path, capsys):
        out = tmp_path / "out"
        assert run_report(fixture_dir, out) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["schema_version"] == 1
        assert report["series"]["efficiency"]["values"] == pytest.approx(
            [0.3, 0.297], rel=1e-9)
        assert (out / "series.csv").is_file()
        assert (out / "output_power_density.svg").is_file()
        assert not (out / ".staging").exists()

    def test_worker_counts_byte_identical(self, fixture_dir, tmp_path):
        out1, out2 = tmp_path / "w1", tmp_path / "w2"
        assert run_report(fixture_dir, out1, ["--workers", "1"]) == 0
        assert run_report(fixture_dir, out2, ["--workers", "2"]) == 0
        names = sorted(p.name for p in out1.iterdir())
        assert names == sorted(p.name for p in out2.iterdir())
        for name in names:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_repeated_runs_reproducible(self, fixture_dir, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert run_report(fixture_dir, out1) == 0
        assert run_report(fixture_dir, out2) == 0
        for p in out1.iterdir():
            assert p.read_bytes() == (out2 / p.name).read_bytes(), p.name

    def test_every_figure_has_data_csv(self, fixture_dir, tmp_path):
        out = tmp_path / "out"
        assert run_report(fixture_dir, out) == 0
        # plots are views: each chart's numbers live in one of the CSV tables
        data_for = {
            "output_power_density.svg": "series.csv",
            "driving_factors.svg": "decomposition.csv",
            "efficiency.svg": "series.csv",
            "additive_effects.svg": "decomposition.csv",
            "waterfall.svg": "waterfall.csv",
            "efficiency_vs_density.svg": "monthly.csv",
            "capacity_factors.svg": "series.csv",
            "missingness.svg": "missingness.csv",
            "relative_difference.svg": "relative_difference.csv",
        }
        svgs = {p.name for p in out.iterdir() if p.suffix == ".svg"}
        assert svgs == set(data_for)
        for csv_name in data_for.values():
            assert (out / csv_name).is_file(), csv_name

    def test_missing_windgrid_path(self, fixture_dir, tmp_path, capsys):
        code = main(["report", "--config", str(fixture_dir / "run.conf"),
                     "--windgrid", str(tmp_path / "nowhere.wgrd"),
                     "--out", str(tmp_path / "o")])
        assert code == 2
        err = capsys.readouterr().err
        assert err.startswith("windgrid: file not found")

    def test_unknown_config_key(self, tmp_path, capsys):
        conf = tmp_path / "bad.conf"
        conf.write_text("frobnicate = 1\n")
        code = main(["report", "--config", str(conf), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "unknown key" in capsys.readouterr().err

    def test_corrupt_data_exit_code(self, fixture_dir, tmp_path, capsys):
        bad = tmp_path / "bad"
        bad.mkdir()
        for name in ("turbines.csv", "generation.csv", "reference.csv"):
            (bad / name).write_bytes((fixture_dir / name).read_bytes())
        (bad / "wind.wgrd").write_bytes(b"XXXX" + (fixture_dir / "wind.wgrd").read_bytes()[4:])
        (bad / "run.conf").write_text((fixture_dir / "run.conf").read_text())
        code = main(["report", "--config", str(bad / "run.conf"),
                     "--out", str(tmp_path / "o")])
        assert code == 3
        assert "windgrid:" in capsys.readouterr().err

    def test_failed_run_leaves_no_partial_bundle(self, fixture_dir, tmp_path):
        out = tmp_path / "out"
        code = run_report(fixture_dir, out, ["--base-year", "2031"])
        assert code == 2
        assert not out.exists() or not any(out.iterdir())

    def test_pre_2010_years_flagged_low_confidence(self, tmp_path):
        bundle = tmp_path / "old"
        assert main(["synth", "--out", str(bundle), "--n-turbines", "6",
                     "--years", "2008:2010", "--seed", "2"]) == 0
        out = tmp_path / "out"
        assert main(["report", "--config", str(bundle / "run.conf"),
                     "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["validation"]["low_confidence_years"] == [2008, 2009]


class TestDecomposeTrendsSubcommands:
    def write_series(self, path, values, unit="W", start=2010):
        rows = ["year,value,unit"] + [f"{start + i},{v},{unit}"
                                      for i, v in enumerate(values)]
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    def test_decompose(self, tmp_path):
        self.write_series(tmp_path / "n.csv", [2, 4], "count")
        self.write_series(tmp_path / "area.csv", [200, 400], "m²")
        self.write_series(tmp_path / "pin.csv", [1000, 2200])
        self.write_series(tmp_path / "pout.csv", [100, 230])
        out = tmp_path / "dec.json"
        code = main(["decompose", "--n", str(tmp_path / "n.csv"),
                     "--area", str(tmp_path / "area.csv"),
                     "--pin", str(tmp_path / "pin.csv"),
                     "--pout", str(tmp_path / "pout.csv"), "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["factors"]["n"] == [2.0, 4.0]
        assert payload["factors"]["area_per_turbine"] == [100.0, 100.0]
        assert payload["indexed_factors"]["n"] == [100.0, 200.0]

    def test_trends_series(self, tmp_path):
        self.write_series(tmp_path / "s.csv", [1.0, 2.0, 3.0])
        out = tmp_path / "fit.json"
        assert main(["trends", "--series", str(tmp_path / "s.csv"),
                     "--out", str(out)]) == 0
        fit = json.loads(out.read_text())["trend"]
        assert fit["slope"] == pytest.approx(1.0)

    def test_trends_counterfactual(self, tmp_path):
        self.write_series(tmp_path / "e.csv", [0.3, 0.28, 0.31, 0.29], "dimensionless")
        self.write_series(tmp_path / "d.csv", [400, 420, 390, 410], "W/m²")
        out = tmp_path / "cf.json"
        out_csv = tmp_path / "cf.csv"
        assert main(["trends", "--efficiency", str(tmp_path / "e.csv"),
                     "--density", str(tmp_path / "d.csv"),
                     "--out", str(out), "--out-csv", str(out_csv)]) == 0
        assert "counterfactual" in json.loads(out.read_text())
        assert out_csv.read_text().startswith("year,value,unit")

    def test_trends_needs_inputs(self, tmp_path, capsys):
        assert main(["trends", "--out", str(tmp_path / "x.json")]) == 2


class TestValidateSubcommand:
    def test_tables(self, fixture_dir, tmp_path):
        out = tmp_path / "val"
        code = main(["validate", "--turbines", str(fixture_dir / "turbines.csv"),
                     "--years", "2010:2011",
                     "--reference", str(fixture_dir / "reference.csv"),
                     "--out", str(out)])
        assert code == 0
        scen = (out / "scenarios.csv").read_text().strip().splitlines()
        assert scen[0] == "scenario,year,capacity_mw"
        assert len(scen) > 1
        rel = (out / "relative_difference.csv").read_text().strip().splitlines()
        # the synthetic reference equals the default-scenario capacity
        default_rows = [r for r in rel[1:] if r.startswith("default,")]
        assert default_rows
        for row in default_rows:
            assert abs(float(row.split(",")[2])) < 1e-9
        assert (out / "missingness.csv").is_file()


class TestScenarioParsing:
    def test_named_scenarios(self):
        spec = parse_scenario("drop-flagged+lifetime-20")
        assert spec.drop_decommissioned_flagged
        assert spec.lifetime_years == 20
        assert parse_scenario("default").lifetime_years is None
        assert not parse_scenario("discard-missing-capacity").impute_capacity

    def test_bad_scenario(self):
        with pytest.raises(ConfigError):
            parse_scenario("lifetime-zero")
        with pytest.raises(ConfigError):
            parse_scenario("frob")

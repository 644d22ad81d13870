import csv
import json

import numpy as np
import pytest

from coolchain import cli, exact
from coolchain.model import Layout, TfimParams
from coolchain.params_io import load_bundled_table, write_param_table


@pytest.fixture
def table_file(tmp_path):
    params, header = load_bundled_table(0.40, 0.60)
    path = tmp_path / "table.txt"
    write_param_table(path, params, header)
    return str(path)


def read_csv(path):
    """Return (echo comment lines, header row, data rows)."""
    echo, rows = [], []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                echo.append(line[1:].strip())
            else:
                rows.append(next(csv.reader([line])))
    return echo, rows[0], rows[1:]


class TestGround:
    def test_both_methods_agree(self, tmp_path, capsys):
        rc = cli.main(["ground", "6", "0.45", "0.55", "--out-dir", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "E0[dense]" in out and "E0[fermion]" in out
        _, header, rows = read_csv(tmp_path / "ground_energy.csv")
        assert header == ["method", "energy"]
        values = {name: float(v) for name, v in rows}
        assert values["dense"] == pytest.approx(values["fermion"], abs=1e-10)
        assert values["dense"] == pytest.approx(-3.7720, abs=1e-4)

    def test_large_chain_fermion_value(self, tmp_path):
        rc = cli.main(
            ["ground", "28", "0.45", "0.55", "--method", "fermion",
             "--out-dir", str(tmp_path)]
        )
        assert rc == 0
        _, _, rows = read_csv(tmp_path / "ground_energy.csv")
        assert float(rows[0][1]) == pytest.approx(-18.00148, abs=1e-4)

    def test_dense_refused_above_limit(self, tmp_path, capsys):
        rc = cli.main(
            ["ground", "16", "0.4", "0.6", "--method", "dense",
             "--out-dir", str(tmp_path)]
        )
        assert rc == 2
        assert "error" in capsys.readouterr().err


class TestCool:
    def test_exact_matches_library(self, tmp_path, table_file):
        rc = cli.main(
            ["cool", "--params", table_file, "--n", "4", "--cycles", "3",
             "--out-dir", str(tmp_path)]
        )
        assert rc == 0
        _, header, rows = read_csv(tmp_path / "cool_trajectory.csv")
        assert header == ["initial", "cycle", "energy", "residual_density"]
        params, _ = load_bundled_table(0.40, 0.60)
        layout = Layout.for_system(4)
        ref = exact.run_protocol(
            exact.density_from_label("0000", layout), params, 3, TfimParams(4, 0.4, 0.6)
        ).energies
        assert [float(r[2]) for r in rows] == pytest.approx(list(ref), abs=1e-10)

    def test_zero_cycles_emits_initial_row_only(self, tmp_path, table_file):
        rc = cli.main(
            ["cool", "--params", table_file, "--n", "4", "--cycles", "0",
             "--initial", "0000,++++", "--out-dir", str(tmp_path)]
        )
        assert rc == 0
        _, _, rows = read_csv(tmp_path / "cool_trajectory.csv")
        assert len(rows) == 2
        assert float(rows[0][2]) == pytest.approx(-1.2)
        assert float(rows[1][2]) == pytest.approx(-2.4)

    def test_exact_refused_for_large_register(self, tmp_path, table_file, capsys):
        rc = cli.main(
            ["cool", "--params", table_file, "--n", "12", "--out-dir", str(tmp_path)]
        )
        assert rc == 2
        assert "mps" in capsys.readouterr().err

    def test_exact_refuses_noise(self, tmp_path, table_file, capsys):
        rc = cli.main(
            ["cool", "--params", table_file, "--n", "4", "--xi", "0.01",
             "--out-dir", str(tmp_path)]
        )
        assert rc == 2
        assert "noiseless" in capsys.readouterr().err

    def test_mps_engine_reports_errors(self, tmp_path, table_file):
        rc = cli.main(
            ["cool", "--params", table_file, "--n", "4", "--cycles", "2",
             "--engine", "mps", "--shots", "4", "--chi", "16", "--seed", "3",
             "--out-dir", str(tmp_path)]
        )
        assert rc == 0
        _, header, rows = read_csv(tmp_path / "cool_trajectory.csv")
        assert header[2:4] == ["mean_energy", "std_error"]
        assert len(rows) == 3
        assert float(rows[0][2]) == pytest.approx(-1.2)


class TestTrain:
    def test_params_mode_writes_table_and_curve(self, tmp_path, table_file):
        cfg = tmp_path / "train.ini"
        cfg.write_text(
            "[train]\n"
            "mode = params\n"
            f"params_file = {table_file}\n"
            "n = 4\nj = 0.4\nh = 0.6\n"
            "max_iterations = 10\n"
        )
        rc = cli.main(["train", str(cfg), "--out-dir", str(tmp_path), "--seed", "1"])
        assert rc == 0
        from coolchain.params_io import read_param_table

        params, header = read_param_table(tmp_path / "trained_params.txt")
        assert params.p == 3
        assert header["provenance"].startswith("params-file:")
        assert float(header["steady_proxy"]) < -2.5
        echo, curve_header, curve_rows = read_csv(tmp_path / "training_curve.csv")
        assert curve_header == ["p", "iteration", "objective", "steady_proxy"]
        assert len(curve_rows) >= 1
        assert any(line.startswith("mode=params") for line in echo)

    def test_missing_config_fails(self, tmp_path, capsys):
        rc = cli.main(["train", str(tmp_path / "absent.ini"), "--out-dir", str(tmp_path)])
        assert rc == 2


class TestNoiseSweep:
    def test_grid_cells(self, tmp_path, table_file):
        rc = cli.main(
            ["noise-sweep", "--params", table_file, "--sizes", "4", "--xi", "0,0.01",
             "--shots", "4", "--chi", "16", "--cycles", "2",
             "--no-truncation-check", "--out-dir", str(tmp_path), "--seed", "2"]
        )
        assert rc == 0
        _, header, rows = read_csv(tmp_path / "noise_sweep.csv")
        assert header[:4] == ["N", "xi", "shots", "chi"]
        assert len(rows) == 2
        for row in rows:
            assert np.isfinite(float(row[4]))


class TestCorrelations:
    def test_zero_distance_column_is_unity(self, tmp_path, table_file):
        rc = cli.main(
            ["correlations", "--params", table_file, "--n", "4",
             "--distances", "0,1", "--shots", "4", "--chi", "16", "--cycles", "2",
             "--out-dir", str(tmp_path), "--seed", "5"]
        )
        assert rc == 0
        echo, header, rows = read_csv(tmp_path / "correlations.csv")
        assert header[:4] == ["distance", "site_i", "site_j", "ground_reference"]
        assert any(line == "reference=exact-ground-state" for line in echo)
        d0 = rows[0]
        assert float(d0[3]) == pytest.approx(1.0)
        assert float(d0[4]) == pytest.approx(1.0)


class TestManifestAndRerun:
    def test_manifest_lists_outputs(self, tmp_path):
        cli.main(["ground", "4", "0.4", "0.6", "--out-dir", str(tmp_path)])
        manifest = json.loads((tmp_path / "ground_manifest.json").read_text())
        assert manifest["command"] == "ground"
        assert manifest["outputs"] == [str(tmp_path / "ground_energy.csv")]
        assert "numpy" in manifest["artifact_versions"]

    def test_rerun_reproduces_csv_bit_identically(self, tmp_path, table_file):
        args = ["cool", "--params", table_file, "--n", "4", "--cycles", "2",
                "--engine", "mps", "--shots", "4", "--chi", "16", "--seed", "7",
                "--out-dir", str(tmp_path)]
        assert cli.main(args) == 0
        out = tmp_path / "cool_trajectory.csv"
        first = out.read_bytes()
        out.unlink()
        rc = cli.main(["rerun", str(tmp_path / "cool_manifest.json")])
        assert rc == 0
        assert out.read_bytes() == first

    def test_out_dir_env_honored(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path / "env_out"))
        assert cli.main(["ground", "4", "0.4", "0.6"]) == 0
        assert (tmp_path / "env_out" / "ground_energy.csv").exists()


class TestDefaults:
    def test_default_shot_table(self):
        assert cli.default_shots(4) == 7000
        assert cli.default_shots(8) == 3500
        assert cli.default_shots(6) == 3500
        assert cli.default_shots(28) == 100
        assert cli.default_shots(40) == 100

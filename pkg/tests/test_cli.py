import json

import numpy as np
import pandas as pd
import pytest

from app.cli.main import build_parser, main
from app.core.config import settings
from app.services.dataset import save_dataset
from app.models.dataset import DataSet


@pytest.fixture
def cloud_csv(tmp_path):
    rng = np.random.default_rng(5)
    path = tmp_path / "cloud.csv"
    save_dataset(DataSet.from_arrays(real_part=rng.normal(0.0, 1.0, size=(300, 2))), str(path))
    return str(path)


def read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


class TestAlphaCommand:
    def test_writes_the_filter_report(self, cloud_csv, tmp_path):
        out = tmp_path / "out"
        code = main(["alpha", "--data", cloud_csv, "--alpha", "0.05", "--zeta", "0.5",
                     "--out", str(out), "--no-timestamp"])
        assert code == 0
        report = read_json(out / "alpha.json")
        assert report["D"] == 300
        assert report["zeta"] == 0.5
        assert report["zeta_selected_automatically"] is False
        assert report["D_alpha"] == len(report["kept_indices"])
        assert report["generated_at"] is None

    def test_missing_file_is_a_usage_error(self, tmp_path, capsys):
        code = main(["alpha", "--data", str(tmp_path / "absent.csv"), "--out", str(tmp_path)])
        assert code == 2
        assert "dataset not found" in capsys.readouterr().err

    def test_bad_zeta_is_a_usage_error(self, cloud_csv, tmp_path):
        assert main(["alpha", "--data", cloud_csv, "--zeta", "-1", "--out", str(tmp_path)]) == 2


class TestReduceCommand:
    def test_identity_thinning_and_minimal_plan(self, cloud_csv, tmp_path):
        out = tmp_path / "out"
        code = main(["reduce", "--data", cloud_csv, "--alpha", "0.02", "--rho", "0", "--eta", "0",
                     "--zeta", "0.5", "--seed", "3", "--out", str(out), "--no-timestamp"])
        assert code == 0
        report = read_json(out / "reduction.json")
        assert report["z"] == 1
        assert report["z_eta"] == 1
        assert report["weights"] == [1]
        assert report["b_bar"] == 2
        assert report["seed"] == 3

    def test_seed_is_required(self, cloud_csv, tmp_path, no_env_seed, capsys):
        code = main(["reduce", "--data", cloud_csv, "--out", str(tmp_path)])
        assert code == 2
        assert "--seed" in capsys.readouterr().err

    def test_seed_falls_back_to_the_environment(self, cloud_csv, tmp_path, monkeypatch):
        monkeypatch.setattr(settings, "CONTOUR_OPT_SEED", 42)
        code = main(["reduce", "--data", cloud_csv, "--zeta", "0.5", "--eta", "0.3", "--out", str(tmp_path),
                     "--no-timestamp"])
        assert code == 0
        assert read_json(tmp_path / "reduction.json")["seed"] == 42

    def test_unreachable_plan_is_a_computational_failure(self, cloud_csv, tmp_path):
        code = main(["reduce", "--data", cloud_csv, "--alpha", "0.001", "--rho", "0.5", "--zeta", "0.5",
                     "--eta", "0.1", "--seed", "1", "--out", str(tmp_path)])
        assert code == 1


class TestOpfCommand:
    def test_same_seed_same_bytes(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        for out in (first, second):
            code = main(["opf", "--case", "case6", "--seed", "7", "--rho", "0.5", "--zeta", "0.1",
                         "--eta", "0.05", "--out", str(out), "--no-timestamp"])
            assert code == 0
        assert (first / "opf.json").read_bytes() == (second / "opf.json").read_bytes()
        report = read_json(first / "opf.json")
        assert report["ordering_holds"]
        assert len(report["stages"]) == 3
        frame = pd.read_csv(first / "opf.csv")
        assert frame["stage"].tolist() == ["D_alpha", "D_alpha_z", "D_alpha_eta"]

    def test_z_only_with_sweep(self, tmp_path):
        code = main(["opf", "--seed", "7", "--rho", "0.5", "--zeta", "0.1", "--eta", "0.05", "--stage", "z-only",
                     "--eta-sweep", "0.02:0.1:2", "--out", str(tmp_path), "--no-timestamp"])
        assert code == 0
        assert len(read_json(tmp_path / "opf.json")["stages"]) == 2
        sweep = pd.read_csv(tmp_path / "eta_sweep.csv")
        assert sweep["eta"].tolist() == pytest.approx([0.02, 0.1])

    def test_unknown_case_is_a_usage_error(self, tmp_path):
        assert main(["opf", "--case", "nowhere", "--seed", "1", "--out", str(tmp_path)]) == 2

    def test_invalid_case_file_is_a_usage_error(self, tmp_path, write_file):
        path = write_file("case.json", json.dumps({"name": "x", "reference_bus": 1, "buses": []}))
        assert main(["opf", "--case", path, "--seed", "1", "--out", str(tmp_path)]) == 2


class TestVerifyCommand:
    def test_unknown_experiment(self):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["verify", "nonsense"])
        assert exc.value.code == 2

    def test_small_varrho_run(self, tmp_path):
        code = main(["verify", "varrho", "--trials", "20", "--seed", "1", "--out", str(tmp_path),
                     "--no-timestamp"])
        assert code == 0
        report = read_json(tmp_path / "verify_varrho.json")
        assert len(report["experiments"]) == 10
        frame = pd.read_csv(tmp_path / "verify_varrho.csv")
        assert list(frame.columns) == ["z", "observed", "bound", "sigma", "verdict", "failures"]

    def test_scaling_run(self, tmp_path):
        code = main(["verify", "scaling", "--trials", "1", "--seed", "0", "--eta-sweep", "0.05:0.1:2",
                     "--out", str(tmp_path), "--no-timestamp"])
        assert code == 0
        assert read_json(tmp_path / "verify_scaling.json")["etas"] == [0.05, 0.1]


class TestConfigPrecedence:
    def test_flags_override_the_config_file(self, cloud_csv, tmp_path, write_file):
        config = write_file("run.json", json.dumps({"alpha": 0.2, "zeta": 0.5, "out": str(tmp_path / "cfg")}))
        code = main(["alpha", "--data", cloud_csv, "--config", config, "--alpha", "0.01", "--no-timestamp"])
        assert code == 0
        report = read_json(tmp_path / "cfg" / "alpha.json")
        assert report["alpha"] == 0.01
        assert report["zeta"] == 0.5

    def test_settings_fill_the_gaps(self, cloud_csv, tmp_path):
        code = main(["alpha", "--data", cloud_csv, "--zeta", "0.5", "--out", str(tmp_path), "--no-timestamp"])
        assert code == 0
        assert read_json(tmp_path / "alpha.json")["alpha"] == settings.DEFAULT_ALPHA

    def test_missing_config_file(self, cloud_csv, tmp_path):
        code = main(["alpha", "--data", cloud_csv, "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)])
        assert code == 2

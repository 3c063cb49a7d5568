"""Command-line surface tests (run in-process through main)."""

import json

import numpy as np
import pytest

from potd.cli import main
from potd.core import LabeledDataset
from potd.harness import (
    accuracy,
    knn_predict,
    load_csv_dataset,
    save_csv_dataset,
    stratified_split,
)


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture
def model_csv(tmp_path):
    path = tmp_path / "model1.csv"
    assert run_cli(
        "gen", "--model", "I", "--n", "200", "--p", "6", "--seed", "5",
        "--dump", str(path),
    ) == 0
    return str(path)


@pytest.fixture
def cshape_csv(tmp_path):
    path = tmp_path / "cshape.csv"
    assert run_cli(
        "gen", "--model", "cshape", "--n-per-class", "150", "--seed", "2",
        "--dump", str(path),
    ) == 0
    return str(path)


class TestHelpAndUsage:
    @pytest.mark.parametrize(
        "cmd",
        ["fit", "embed", "gen", "bench-synthetic", "bench-real", "oracle-check"],
    )
    def test_help_exits_zero(self, cmd, capsys):
        assert run_cli(cmd, "--help") == 0
        out = capsys.readouterr().out
        assert "--seed" in out

    def test_version(self, capsys):
        assert run_cli("--version") == 0

    def test_unknown_command_usage_error(self):
        assert run_cli("frobnicate") == 2


class TestFit:
    def test_writes_orthonormal_basis(self, model_csv, tmp_path):
        out = tmp_path / "basis.csv"
        assert run_cli(
            "fit", "--data", model_csv, "--r", "2", "--output", str(out)
        ) == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "v1,v2"
        mat = np.array([[float(v) for v in line.split(",")] for line in rows[1:]])
        assert mat.shape == (6, 2)
        assert np.allclose(mat.T @ mat, np.eye(2), atol=1e-10)
        sv = (tmp_path / "basis.csv.singular_values.csv").read_text().splitlines()
        assert sv[0] == "singular_value"
        meta = json.loads((tmp_path / "basis.csv.meta.json").read_text())
        assert meta["config"]["r"] == 2
        assert meta["chosen_r"] == 2

    def test_auto_dim_on_planar_data(self, tmp_path):
        # the optimal matching pairs (0,0)->(0,3) and (10,0)->(14,0), so the
        # displacement rows span exactly two directions with comparable
        # weight; coordinates 3..5 contribute nothing
        X = np.array(
            [
                [0.0, 0.0, 0.0, 0.0, 0.0],
                [10.0, 0.0, 0.0, 0.0, 0.0],
                [0.0, 3.0, 0.0, 0.0, 0.0],
                [14.0, 0.0, 0.0, 0.0, 0.0],
            ]
        )
        y = np.array(["a", "a", "b", "b"])
        path = tmp_path / "planar.csv"
        save_csv_dataset(LabeledDataset(X, y), str(path))
        out = tmp_path / "basis.csv"
        assert run_cli(
            "fit", "--data", str(path), "--auto-dim", "0.9", "--no-whiten",
            "--output", str(out),
        ) == 0
        meta = json.loads((tmp_path / "basis.csv.meta.json").read_text())
        assert meta["chosen_r"] == 2

    def test_missing_file_exit_2(self, tmp_path, capsys):
        code = run_cli(
            "fit", "--data", str(tmp_path / "nope.csv"), "--r", "2",
            "--output", str(tmp_path / "b.csv"),
        )
        assert code == 2
        assert "dataset not found" in capsys.readouterr().err

    def test_deterministic_output_bytes(self, model_csv, tmp_path):
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        for out in (out_a, out_b):
            assert run_cli(
                "fit", "--data", model_csv, "--r", "2", "--output", str(out)
            ) == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_config_file_overrides_flags(self, model_csv, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"r": 3}))
        out = tmp_path / "basis.csv"
        assert run_cli(
            "fit", "--data", model_csv, "--r", "2", "--output", str(out),
            "--config", str(cfg),
        ) == 0
        header = out.read_text().splitlines()[0]
        assert header == "v1,v2,v3"

    def test_unknown_config_key_exit_2(self, model_csv, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"warp_factor": 9}))
        assert run_cli(
            "fit", "--data", model_csv, "--r", "2",
            "--output", str(tmp_path / "b.csv"), "--config", str(cfg),
        ) == 2


class TestEmbed:
    def test_pca_embedding_columns(self, model_csv, tmp_path):
        out = tmp_path / "emb.csv"
        assert run_cli(
            "embed", "--data", model_csv, "--method", "PCA", "--r", "2",
            "--output", str(out),
        ) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "z1,z2,label"
        assert len(lines) == 201

    def test_cshape_classes_separate_under_potd(self, cshape_csv, tmp_path):
        # per-class standardization forces identical class means, so the
        # figure's qualitative separation is quantified as local (KNN)
        # separability of the 2-D embedding instead of a mean gap
        out = tmp_path / "emb.csv"
        assert run_cli(
            "embed", "--data", cshape_csv, "--method", "POTD", "--r", "2",
            "--output", str(out),
        ) == 0
        emb = load_csv_dataset(str(out), "label")
        rng = np.random.default_rng(np.random.SeedSequence([72]))
        train_idx, test_idx = stratified_split(emb.y, 0.5, rng)
        pred = knn_predict(
            LabeledDataset(emb.X[train_idx], emb.y[train_idx]),
            emb.X[test_idx],
            10,
        )
        assert accuracy(pred, emb.y[test_idx]) >= 0.65

    def test_r_exceeding_p_exit_2(self, model_csv, tmp_path):
        assert run_cli(
            "embed", "--data", model_csv, "--method", "PCA", "--r", "99",
            "--output", str(tmp_path / "e.csv"),
        ) == 2


class TestBenchSynthetic:
    def test_report_contains_requested_rows(self, tmp_path):
        out = tmp_path / "rep.json"
        csv_out = tmp_path / "rep.csv"
        assert run_cli(
            "bench-synthetic", "--models", "I", "--p-values", "5",
            "--methods", "POTD,PCA", "--n", "80", "--replications", "2",
            "--output", str(out), "--csv", str(csv_out),
        ) == 0
        payload = json.loads(out.read_text())
        settings = {(r["method"], r["setting"]) for r in payload["rows"]}
        assert settings == {("POTD", "I-5"), ("PCA", "I-5")}
        assert payload["config"]["replications"] == 2
        assert "timestamp" in payload["meta"]
        assert csv_out.read_text().startswith("schema_version,method")

    def test_unknown_method_lists_valid(self, tmp_path, capsys):
        code = run_cli(
            "bench-synthetic", "--methods", "POTD,BANANA",
            "--replications", "1", "--output", str(tmp_path / "r.json"),
        )
        assert code == 2
        assert "POTD, SIR, SAVE, PCA" in capsys.readouterr().err

    def test_deterministic_modulo_timestamp(self, tmp_path):
        out = tmp_path / "rep.json"
        outs = []
        for _ in range(2):
            assert run_cli(
                "bench-synthetic", "--models", "I", "--p-values", "5",
                "--methods", "PCA", "--n", "60", "--replications", "2",
                "--output", str(out),
            ) == 0
            payload = json.loads(out.read_text())
            # the timestamp is confined to the meta block
            payload["meta"].pop("timestamp")
            outs.append(payload)
        assert outs[0] == outs[1]


class TestBenchReal:
    def test_defaults_echoed(self, model_csv, tmp_path):
        out = tmp_path / "rep.json"
        assert run_cli(
            "bench-real", "--data", model_csv, "--methods", "PCA",
            "--dims", "2", "--replications", "2", "--output", str(out),
        ) == 0
        payload = json.loads(out.read_text())
        assert payload["config"]["K"] == 10
        assert payload["meta"]["cli_config"]["k"] == 10
        assert payload["config"]["setting"] == "model1"

    def test_default_dims(self):
        from potd.cli import build_parser

        args = build_parser().parse_args(
            ["bench-real", "--data", "x.csv", "--output", "y.json"]
        )
        assert args.dims == [2, 4, 6, 8, 10]
        assert args.k == 10

    def test_missing_label_column_exit_2(self, tmp_path, capsys):
        path = tmp_path / "d.csv"
        path.write_text("f1,f2\n1,2\n3,4\n")
        code = run_cli(
            "bench-real", "--data", str(path), "--replications", "1",
            "--output", str(tmp_path / "r.json"),
        )
        assert code == 2


class TestOracleCheck:
    def test_default_passes(self, capsys):
        assert run_cli("oracle-check", "--size", "6") == 0
        out = capsys.readouterr().out
        assert "oracle check passed" in out

    def test_size_cap_exit_2(self):
        assert run_cli("oracle-check", "--size", "20") == 2

    def test_gap_table_nonincreasing(self, capsys):
        assert run_cli("oracle-check", "--size", "5") == 0
        lines = [
            line for line in capsys.readouterr().out.splitlines()
            if line.strip() and line.lstrip()[0].isdigit()
        ]
        gaps = [float(line.split()[2]) for line in lines]
        assert all(b <= a + 1e-9 for a, b in zip(gaps, gaps[1:]))

"""End-to-end CLI behavior: exit codes, file outputs, determinism, golden run."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from ronpaint import cli
from ronpaint.patterns import default_patterns_path

DATA_DIR = Path(cli.__file__).parent / "data"
TRAIN_CSV = DATA_DIR / "demo_train.csv"
VALIDATE_CSV = DATA_DIR / "demo_validate.csv"
BENCHMARK_CSV = DATA_DIR / "benchmark.csv"
GOLDEN_EVALUATE = Path(__file__).parent / "data" / "golden_evaluate.txt"


def run_cli(*argv: str) -> int:
    return cli.main(list(argv))


@pytest.fixture(scope="module")
def trained_model(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("model") / "model.json"
    code = run_cli(
        "train", "--data", str(TRAIN_CSV), "--trees", "60",
        "--seed", "0", "--out", str(out),
    )
    assert code == 0
    return out


class TestExitCodes:
    def test_no_command_is_usage_error(self, capsys):
        assert run_cli() == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_unknown_flag_is_usage_error(self, capsys):
        assert run_cli("train", "--nonsense") == 1

    def test_missing_required_flag_is_usage_error(self, capsys):
        assert run_cli("train", "--data", str(TRAIN_CSV)) == 1

    def test_missing_file_is_input_error(self, tmp_path, capsys):
        code = run_cli(
            "train", "--data", str(tmp_path / "absent.csv"),
            "--out", str(tmp_path / "m.json"),
        )
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            run_cli("--version")
        assert excinfo.value.code == 0
        assert "ronpaint" in capsys.readouterr().out


class TestDatasetValidation:
    def write_csv(self, tmp_path, body: str) -> Path:
        path = tmp_path / "data.csv"
        path.write_text("name,smiles,ron,label\n" + body, encoding="utf-8")
        return path

    def train(self, tmp_path, csv_path) -> int:
        return run_cli(
            "train", "--data", str(csv_path), "--trees", "5",
            "--out", str(tmp_path / "m.json"),
        )

    def test_all_bad_rows_reported_together(self, tmp_path, capsys):
        csv_path = self.write_csv(
            tmp_path,
            "okay,CC,,low\n"
            "bad-smiles,C((C)),90,low\n"
            "bad-ron,CC,ninety,\n"
            "bad-label,CC,,medium\n",
        )
        assert self.train(tmp_path, csv_path) == 1
        err = capsys.readouterr().err
        assert "3 bad row(s)" in err
        assert "bad-smiles" in err and "bad-ron" in err and "bad-label" in err

    def test_label_contradicting_ron_rejected(self, tmp_path, capsys):
        csv_path = self.write_csv(tmp_path, "liar,CC,120,low\nok,CCC,60,low\n")
        assert self.train(tmp_path, csv_path) == 1
        assert "contradicts ron" in capsys.readouterr().err

    def test_wrong_header_rejected(self, tmp_path, capsys):
        path = tmp_path / "data.csv"
        path.write_text("molecule,smiles,ron,label\nx,CC,90,low\n", encoding="utf-8")
        assert self.train(tmp_path, path) == 1
        assert "header" in capsys.readouterr().err

    def test_empty_table_rejected(self, tmp_path, capsys):
        csv_path = self.write_csv(tmp_path, "")
        assert self.train(tmp_path, csv_path) == 1
        assert "no data rows" in capsys.readouterr().err

    def test_row_without_ron_or_label_rejected(self, tmp_path, capsys):
        csv_path = self.write_csv(tmp_path, "blank,CC,,\n")
        assert self.train(tmp_path, csv_path) == 1
        assert "at least one of ron or label" in capsys.readouterr().err


class TestTrain:
    def test_prints_importances_and_summary(self, trained_model, capsys, tmp_path):
        out = tmp_path / "m.json"
        code = run_cli(
            "train", "--data", str(TRAIN_CSV), "--trees", "20",
            "--seed", "1", "--out", str(out),
        )
        assert code == 0
        stdout = capsys.readouterr().out
        assert "trained 20 trees" in stdout
        assert "top features by Gini importance:" in stdout
        assert stdout.count("\n  ") >= 10  # rank table rows
        assert "accuracy varies from" in stdout
        assert "variance = " in stdout
        assert out.exists()

    def test_retrain_is_byte_identical(self, tmp_path, monkeypatch):
        # identical argv from two directories: the embedded manifest records
        # the command line, so the paths passed must match too
        outputs = []
        for sub in ("first", "second"):
            workdir = tmp_path / sub
            workdir.mkdir()
            monkeypatch.chdir(workdir)
            assert run_cli(
                "train", "--data", str(TRAIN_CSV), "--trees", "30",
                "--seed", "7", "--out", "model.json",
            ) == 0
            outputs.append((workdir / "model.json").read_bytes())
        assert outputs[0] == outputs[1]


class TestEvaluate:
    def test_golden_benchmark_report(self, capsys):
        code = run_cli(
            "evaluate", "--data", str(BENCHMARK_CSV), "--trees", "60",
            "--rounds", "5", "--seed", "0", "--holdout", "0.5",
        )
        assert code == 0
        assert capsys.readouterr().out == GOLDEN_EVALUATE.read_text(encoding="utf-8")

    def test_json_report(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = run_cli(
            "evaluate", "--data", str(BENCHMARK_CSV), "--trees", "10",
            "--rounds", "3", "--seed", "0", "--out", str(out),
        )
        assert code == 0
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert len(payload["rounds"]["accuracy"]) == 3
        assert set(payload["summary"]) == {"accuracy", "precision", "recall", "roc_auc"}
        assert payload["manifest"]["command"] == "evaluate"
        assert payload["report"].startswith("rounds: 3")


class TestExplain:
    def test_prints_weight_table(self, trained_model, capsys):
        code = run_cli(
            "explain", "C=CC(=C)CCC=C(C)C", "--model", str(trained_model),
            "--samples", "200", "--seed", "0",
        )
        assert code == 0
        stdout = capsys.readouterr().out
        assert "p(high-octane) = " in stdout
        assert "intercept = " in stdout
        assert "molecule score (1 bootstraps)" in stdout

    def test_paint_without_out_rejected(self, trained_model, capsys):
        code = run_cli(
            "explain", "CC", "--model", str(trained_model), "--paint",
        )
        assert code == 1
        assert "--out" in capsys.readouterr().err

    def test_patterns_flag_must_match_model(self, trained_model, tmp_path, capsys):
        other = tmp_path / "other.patterns"
        other.write_text("solo\tC-C\n", encoding="utf-8")
        code = run_cli(
            "explain", "CC", "--model", str(trained_model),
            "--patterns", str(other),
        )
        assert code == 1
        assert "does not match" in capsys.readouterr().err

    def test_matching_patterns_flag_accepted(self, trained_model, capsys):
        code = run_cli(
            "explain", "CCO", "--model", str(trained_model),
            "--patterns", str(default_patterns_path()), "--samples", "100",
        )
        assert code == 0

    def test_bad_smiles_is_input_error(self, trained_model, capsys):
        assert run_cli("explain", "C((C))", "--model", str(trained_model)) == 1

    def test_outputs_are_deterministic(self, trained_model, tmp_path):
        outputs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{tag}.json"
            code = run_cli(
                "explain", "C=CC(=C)CCC=C(C)C", "--model", str(trained_model),
                "--samples", "300", "--bootstraps", "2", "--seed", "3",
                "--out", str(out), "--paint",
            )
            assert code == 0
            svg = out.with_suffix(".svg")
            sidecar = svg.with_name(svg.name + ".manifest.json")
            outputs.append(
                (out.read_bytes(), svg.read_bytes(), sidecar.read_bytes())
            )
        # manifests embed argv, which differs only in the --out path
        assert outputs[0][0].replace(b"/a.json", b"/b.json") == outputs[1][0]
        assert outputs[0][1] == outputs[1][1]
        assert outputs[0][2].replace(b"/a.json", b"/b.json") == outputs[1][2]

    def test_json_payload_shape(self, trained_model, tmp_path):
        out = tmp_path / "e.json"
        assert run_cli(
            "explain", "c1ccccc1", "--model", str(trained_model),
            "--samples", "200", "--out", str(out),
        ) == 0
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert payload["name"] == "c1ccccc1"
        assert 0.0 <= payload["probability_high"] <= 1.0
        assert payload["manifest"]["inputs"]["model"]["sha256"]
        weights = [row["weight"] for row in payload["features"]]
        assert weights == sorted(weights, key=abs, reverse=True)
        for row in payload["features"]:
            assert {"feature", "pattern_id", "pattern", "weight",
                    "accuracy", "precision", "recall", "importance"} <= row.keys()


class TestValidate:
    def test_correlations_reported(self, trained_model, tmp_path, capsys):
        out = tmp_path / "v.json"
        code = run_cli(
            "validate", "--model", str(trained_model), "--data", str(VALIDATE_CSV),
            "--bootstraps", "2", "--samples", "150", "--out", str(out), "--paint",
        )
        assert code == 0
        stdout = capsys.readouterr().out
        assert "spearman score vs probability: P = " in stdout
        assert "spearman probability vs ron: P = " in stdout
        assert "spearman score vs ron: P = " in stdout
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert len(payload["molecules"]) == 16
        assert set(payload["correlations"]) == {
            "score_vs_probability", "probability_vs_ron", "score_vs_ron",
        }
        svg = out.with_suffix(".svg")
        assert svg.exists()
        text = svg.read_text(encoding="utf-8")
        assert "myrcene" in text
        assert svg.with_name(svg.name + ".manifest.json").exists()

    def test_requires_measured_ron(self, trained_model, tmp_path, capsys):
        path = tmp_path / "v.csv"
        path.write_text(
            "name,smiles,ron,label\na,CC,,low\nb,CCC,,low\nc,CCCC,,low\n",
            encoding="utf-8",
        )
        code = run_cli(
            "validate", "--model", str(trained_model), "--data", str(path),
            "--bootstraps", "1",
        )
        assert code == 1
        assert "measured ron is required" in capsys.readouterr().err

    def test_requires_three_rows(self, trained_model, tmp_path, capsys):
        path = tmp_path / "v.csv"
        path.write_text(
            "name,smiles,ron,label\na,CC,99,\nb,CCC,80,\n", encoding="utf-8"
        )
        code = run_cli(
            "validate", "--model", str(trained_model), "--data", str(path),
            "--bootstraps", "1",
        )
        assert code == 1
        assert "at least 3 rows" in capsys.readouterr().err


class TestSubprocessEntryPoints:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "ronpaint", "--version"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.startswith("ronpaint ")

    def test_usage_error_exit_code(self):
        proc = subprocess.run(
            [sys.executable, "-m", "ronpaint", "train"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 1
        assert "error:" in proc.stderr

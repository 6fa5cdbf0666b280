from __future__ import annotations

import json
from pathlib import Path

import pytest

from unitloc.cli import main


def run_cli(*argv: str) -> int:
    return main(list(argv))


class TestGenConv:
    def test_generates_files(self, tmp_path, capsys):
        code = run_cli(
            "gen-conv", "--task", "mtokm", "--size", "50", "--seed", "7",
            "--validation-size", "5", "--test-size", "5", "--out-dir", str(tmp_path),
        )
        assert code == 0
        assert (tmp_path / "mtokm.train.src").exists()
        assert (tmp_path / "mtokm.manifest.json").exists()
        assert (tmp_path / "manifest.json").exists()

    def test_rerun_byte_identical(self, tmp_path):
        blobs = []
        for run in range(2):
            out = tmp_path / f"run{run}"
            assert run_cli(
                "gen-conv", "--task", "ftoc", "--size", "40", "--seed", "3",
                "--validation-size", "4", "--test-size", "4", "--out-dir", str(out),
            ) == 0
            blobs.append(b"".join(p.read_bytes() for p in sorted(out.iterdir())))
        assert blobs[0] == blobs[1]

    def test_size_zero_usage_error(self, tmp_path):
        code = run_cli("gen-conv", "--task", "mtokm", "--size", "0", "--out-dir", str(tmp_path))
        assert code == 64

    def test_infeasible_exit_2(self, tmp_path):
        code = run_cli(
            "gen-conv", "--task", "mtokm", "--size", "10", "--digit-lengths", "1", "2",
            "--test-size", "5", "--out-dir", str(tmp_path),
        )
        assert code == 2

    def test_unknown_task_usage_error(self, tmp_path):
        code = run_cli("gen-conv", "--task", "nope", "--size", "10", "--out-dir", str(tmp_path))
        assert code == 64


class TestSynthLoc:
    def test_fixture_pipeline(self, tmp_path):
        src = Path("src/unitloc/data/fixtures/fixture.src")
        tgt = Path("src/unitloc/data/fixtures/fixture.tgt")
        code = run_cli(
            "synth-loc", "--source", str(src), "--target", str(tgt),
            "--train-size", "20", "--test-size", "10", "--seed", "5",
            "--upsample", "30", "--challenge", "--out-dir", str(tmp_path),
        )
        assert code == 0
        for task in ("mtokm", "ftoc"):
            for stem in (f"loc.{task}.train", f"loc.{task}.test", f"loc.{task}.train.upsampled", f"loc.{task}.challenge"):
                assert (tmp_path / f"{stem}.src").exists(), stem
                assert (tmp_path / f"{stem}.meta.jsonl").exists(), stem
        stats = json.loads((tmp_path / "loc.stats.json").read_text())
        assert stats["mtokm"]["distinct_conversions"] > 0

    def test_missing_input_exit_66(self, tmp_path):
        code = run_cli("synth-loc", "--source", "nope.src", "--target", "nope.tgt", "--out-dir", str(tmp_path))
        assert code == 66

    def test_insufficient_data_exit_65(self, tmp_path):
        src = tmp_path / "a.src"
        tgt = tmp_path / "a.tgt"
        src.write_text("no units here\n")
        tgt.write_text("keine einheiten\n")
        code = run_cli(
            "synth-loc", "--source", str(src), "--target", str(tgt),
            "--train-size", "5", "--test-size", "2", "--out-dir", str(tmp_path),
        )
        assert code == 65


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("tiny")
    data = root / "data"
    assert run_cli(
        "gen-conv", "--task", "ftoc", "--size", "120", "--seed", "11",
        "--validation-size", "20", "--test-size", "20", "--out-dir", str(data),
    ) == 0
    run = root / "run"
    config = root / "config.json"
    config.write_text(json.dumps({
        "seed": 11,
        "train": {
            "corpora": [[str(data / "ftoc.train.src"), str(data / "ftoc.train.tgt")]],
            "validation": [str(data / "ftoc.validation.src"), str(data / "ftoc.validation.tgt")],
            "max_epochs": 2,
            "batch_size": 32,
        },
        "model": {"encoder_layers": 1, "decoder_layers": 1, "model_size": 32,
                  "attention_heads": 2, "feed_forward_hidden": 64, "max_seq_len": 24},
    }))
    assert run_cli("train", "--config", str(config), "--out-dir", str(run)) == 0
    return root, data, run


class TestTrainTranslateEvaluate:
    def test_train_artifacts(self, tiny_run):
        _, _, run = tiny_run
        assert (run / "best.ulck").exists()
        assert (run / "last.ulck").exists()
        lines = (run / "metrics.tsv").read_text().splitlines()
        assert lines[0].startswith("step\t")

    def test_translate_and_evaluate(self, tiny_run, capsys):
        root, data, run = tiny_run
        hyp = root / "hyp.txt"
        assert run_cli(
            "translate", "--checkpoint", str(run / "best.ulck"),
            "--source", str(data / "ftoc.test.src"), "--output", str(hyp),
        ) == 0
        assert len(hyp.read_text().splitlines()) == 20
        out = root / "eval"
        code = run_cli(
            "evaluate", "--hyp", str(hyp), "--ref", str(data / "ftoc.test.tgt"),
            "--label", "ftoc-test", "--tolerance", "1e-4", "--tolerance", "0",
            "--out-dir", str(out), "--curve-size", "120",
        )
        assert code == 0
        captured = capsys.readouterr().out
        assert "ftoc-test" in captured
        assert (out / "report.ftoc-test.tsv").exists()
        assert (out / "report.ftoc-test.json").exists()
        assert (out / "report.ftoc-test.by_length.png").exists()
        assert (out / "curve.tsv").exists()
        assert (out / "curve.png").exists()

    def test_evaluate_both_tolerances_emitted(self, tiny_run):
        root, data, run = tiny_run
        out = root / "eval"
        text = (out / "report.ftoc-test.tsv").read_text().splitlines()
        assert len(text) == 3  # header + one row per tolerance
        assert text[1].split("\t")[1] == "0.0001"
        assert text[2].split("\t")[1] == "0"

    def test_missing_checkpoint_exit_66(self, tmp_path):
        code = run_cli(
            "translate", "--checkpoint", str(tmp_path / "missing.ulck"),
            "--source", str(tmp_path / "missing.src"), "--output", str(tmp_path / "out.txt"),
        )
        assert code == 66

    def test_evaluate_alignment_error_exit_65(self, tmp_path):
        hyp = tmp_path / "h.txt"
        ref = tmp_path / "r.txt"
        hyp.write_text("8 3 8 km\n")
        ref.write_text("8 3 8 km\n1 2 km\n")
        assert run_cli("evaluate", "--hyp", str(hyp), "--ref", str(ref), "--out-dir", str(tmp_path), "--no-figures") == 65

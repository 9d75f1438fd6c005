import json

import numpy as np
import pytest
from click.testing import CliRunner

from remflow.cli import main
from remflow.imageio import load_mask, save_mask


@pytest.fixture()
def runner():
    return CliRunner()


def run(runner, args):
    return runner.invoke(main, args, catch_exceptions=False)


SUBCOMMANDS = ("synth", "preprocess", "train", "infer", "refine", "eval",
               "overlay", "export", "serve")


def test_help_on_every_subcommand(runner):
    for name in SUBCOMMANDS:
        result = run(runner, [name, "--help"])
        assert result.exit_code == 0, name
        assert "--" in result.output


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One small dataset + 16px checkpoint shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cliws")
    runner = CliRunner()
    result = runner.invoke(main, ["synth", "--n", "6", "--out",
                                  str(root / "ds"), "--seed", "0", "--size",
                                  "64", "--split", "0.5,0.25,0.25"])
    assert result.exit_code == 0, result.output
    config = {"image_size": 32, "generator_depth": 3, "base_channels": 8}
    (root / "gan32.json").write_text(json.dumps(config))

    ds32 = root / "ds32"
    result = runner.invoke(main, ["synth", "--n", "4", "--out", str(ds32),
                                  "--seed", "0", "--size", "32", "--split",
                                  "1,0,0"])
    assert result.exit_code == 0, result.output
    result = runner.invoke(main, ["train", "--manifest", str(ds32),
                                  "--config", str(root / "gan32.json"),
                                  "--out-checkpoint", str(root / "toy.rfgan"),
                                  "--steps", "3"])
    assert result.exit_code == 0, result.output
    return root


def test_synth_deterministic_bytes(runner, tmp_path):
    for name in ("a", "b"):
        result = run(runner, ["synth", "--n", "3", "--out",
                              str(tmp_path / name), "--seed", "4", "--size",
                              "64", "--split", "1,0,0"])
        assert result.exit_code == 0
    for rel in ("manifest.json", "photos/s00000004.png", "masks/s00000004.png"):
        assert (tmp_path / "a" / rel).read_bytes() == \
            (tmp_path / "b" / rel).read_bytes()


def test_preprocess_roundtrip(runner, workspace, tmp_path):
    src = workspace / "ds" / "photos" / "s00000000.png"
    out = tmp_path / "std.png"
    result = run(runner, ["preprocess", "--in", str(src), "--out", str(out),
                          "--size", "128"])
    assert result.exit_code == 0
    from remflow.imageio import load_photo

    assert load_photo(out).shape == (128, 128, 3)


def test_infer_writes_mask(runner, workspace, tmp_path):
    out = tmp_path / "pred.png"
    result = run(runner, ["infer", "--checkpoint", str(workspace / "toy.rfgan"),
                          "--in",
                          str(workspace / "ds32" / "photos" / "s00000000.png"),
                          "--out", str(out)])
    assert result.exit_code == 0, result.output
    mask = load_mask(out)
    assert mask.shape == (32, 32)


def test_infer_missing_checkpoint_exit_1(runner, workspace, tmp_path):
    result = runner.invoke(main, ["infer", "--checkpoint",
                                  str(tmp_path / "missing.rfgan"), "--in",
                                  str(workspace / "ds" / "photos" / "s00000000.png"),
                                  "--out", str(tmp_path / "x.png")])
    assert result.exit_code == 1
    # one machine-parsable line on stderr naming the path
    assert result.stderr.startswith("RF-ERR:")
    assert "missing.rfgan" in result.stderr
    assert len(result.stderr.strip().splitlines()) == 1


def test_refine_mock_offline_and_deterministic(runner, workspace, tmp_path):
    mask = workspace / "ds" / "masks" / "s00000001.png"
    outs = []
    for name in ("r1.png", "r2.png"):
        out = tmp_path / name
        result = run(runner, ["refine", "--in", str(mask), "--provider",
                              "mock", "--out", str(out), "--text",
                              "make all holes uniform"])
        assert result.exit_code == 0, result.output
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_refine_unknown_text_exit_1(runner, workspace, tmp_path):
    mask = workspace / "ds" / "masks" / "s00000001.png"
    result = runner.invoke(main, ["refine", "--in", str(mask), "--out",
                                  str(tmp_path / "o.png"), "--text",
                                  "sing a song"])
    assert result.exit_code == 1
    assert "RF-ERR:" in result.stderr


def test_eval_self_comparison_perfect(runner, workspace, tmp_path):
    pred = tmp_path / "pred"
    pred.mkdir()
    manifest = json.loads((workspace / "ds" / "manifest.json").read_text())
    for entry in manifest["entries"]:
        if entry["split"] == "test":
            data = (workspace / "ds" / entry["mask"]).read_bytes()
            (pred / f"{entry['id']}.png").write_bytes(data)
    report_path = tmp_path / "report.json"
    table_path = tmp_path / "table.txt"
    result = run(runner, ["eval", "--manifest", str(workspace / "ds"),
                          "--pred", str(pred), "--label", "self",
                          "--report", str(report_path),
                          "--table", str(table_path)])
    assert result.exit_code == 0, result.output
    assert "SSIM" in result.output and "1.0000" in result.output
    assert "IoU" in result.output
    assert table_path.read_text() in result.output
    report = json.loads(report_path.read_text())
    assert report["aggregate"]["iou"]["mean"] == 1.0

    # comparing two labeled reports gives the two-method layout
    result = run(runner, ["eval", "--compare", str(report_path),
                          str(report_path)])
    assert result.exit_code == 0
    header = result.output.splitlines()[0]
    assert header.count("|") == 2 and "self (n=" in header


def test_eval_missing_prediction_nonzero_exit(runner, workspace, tmp_path):
    pred = tmp_path / "empty"
    pred.mkdir()
    result = runner.invoke(main, ["eval", "--manifest", str(workspace / "ds"),
                                  "--pred", str(pred), "--label", "x"])
    assert result.exit_code == 1
    assert "RF-ERR:" in result.stderr


def test_eval_threshold_gate_exit_3(runner, workspace, tmp_path):
    pred = tmp_path / "noisy"
    pred.mkdir()
    rng = np.random.default_rng(0)
    manifest = json.loads((workspace / "ds" / "manifest.json").read_text())
    for entry in manifest["entries"]:
        if entry["split"] == "test":
            save_mask(pred / f"{entry['id']}.png", rng.random((64, 64)) < 0.5)
    result = runner.invoke(main, ["eval", "--manifest", str(workspace / "ds"),
                                  "--pred", str(pred), "--label", "noise",
                                  "--min-iou", "0.99"])
    assert result.exit_code == 3
    assert "RF-ERR: [threshold]" in result.stderr


def test_overlay_and_export(runner, workspace, tmp_path):
    mask = workspace / "ds" / "masks" / "s00000000.png"
    ov = tmp_path / "ov.png"
    result = run(runner, ["overlay", "--gt", str(mask), "--gen", str(mask),
                          "--refined", str(mask), "--out", str(ov)])
    assert result.exit_code == 0 and ov.is_file()

    for fmt in ("svg", "dxf"):
        out = tmp_path / f"c.{fmt}"
        result = run(runner, ["export", "--mask", str(mask), "--format", fmt,
                              "--out", str(out)])
        assert result.exit_code == 0 and out.is_file()
    assert b"evenodd" in (tmp_path / "c.svg").read_bytes()
    assert b"AC1009" in (tmp_path / "c.dxf").read_bytes()


def test_export_deterministic(runner, workspace, tmp_path):
    mask = workspace / "ds" / "masks" / "s00000000.png"
    blobs = []
    for name in ("x1.dxf", "x2.dxf"):
        out = tmp_path / name
        run(runner, ["export", "--mask", str(mask), "--format", "dxf",
                     "--out", str(out)])
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]


def test_train_rerun_byte_identical(runner, workspace, tmp_path):
    outs = []
    for name in ("t1", "t2"):
        ck = tmp_path / f"{name}.rfgan"
        log = tmp_path / f"{name}.csv"
        result = run(runner, ["train", "--manifest", str(workspace / "ds32"),
                              "--config", str(workspace / "gan32.json"),
                              "--out-checkpoint", str(ck), "--steps", "2",
                              "--log", str(log)])
        assert result.exit_code == 0, result.output
        outs.append((ck.read_bytes(), log.read_bytes()))
    assert outs[0] == outs[1]

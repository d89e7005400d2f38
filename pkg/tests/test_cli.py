import io
import json
import subprocess
import sys

import numpy as np
import pytest

from jetpat.cli import main
from jetpat.kernels import dtg_kernel_2d

SMALL = ["--synth-classes", "3", "--synth-samples", "6", "--synth-size", "32"]


def run(argv):
    out = io.StringIO()
    code = main(argv, out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    code, text = run(["-q", "synth", "--out", str(root), "--classes", "3", "--samples", "10",
                      "--size", "32"])
    assert code == 0 and "wrote 30 images in 3 classes" in text
    return root


def test_experiment_on_directory_prints_json(synth_dir):
    code, text = run(["-q", "experiment", "--data", str(synth_dir), "--classifier", "nsc",
                      "--k", "10", "--seed", "7"])
    assert code == 0
    report = json.loads(text)
    assert report["config"]["seed"] == 7 and report["config"]["classifier"] == "nsc"
    assert len(report["fold_accuracies"]) == 10
    assert "extract_seconds_per_image" in report


def test_no_timing_output_is_byte_identical():
    argv = ["-q", "experiment", "--synthetic", "--k", "3", "--no-timing"] + SMALL
    first, second = run(argv), run(argv)
    assert first[0] == 0 and first[1] == second[1]
    assert "seconds" not in first[1]


def test_text_format():
    code, text = run(["-q", "experiment", "--synthetic", "--k", "3", "--format", "text",
                      "--classifier", "nnc"] + SMALL)
    assert code == 0 and text.startswith("protocol") and "confusion" in text


def test_missing_image_exits_2_and_names_path(capsys):
    code, _ = run(["extract", "--image", "missing.png"])
    assert code == 2
    assert "missing.png" in capsys.readouterr().err


def test_k_one_is_a_usage_error(capsys):
    code, _ = run(["experiment", "--synthetic", "--k", "1"])
    assert code == 1
    assert "k" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["experiment", "--synthetic", "--bogus"], ["frobnicate"],
                                  [], ["experiment"],
                                  ["experiment", "--synthetic", "--data", "x"]])
def test_usage_errors_exit_1(argv):
    assert run(argv)[0] == 1


def test_help_lists_defaults(capsys):
    assert run(["experiment", "--help"])[0] == 0
    text = capsys.readouterr().out
    for flag, default in [("--sigma", "1.0"), ("--radius", "1.0"), ("--neighbors", "8"),
                          ("--k", "10"), ("--classifier", "nsc"), ("--mapping", "uniform")]:
        assert flag in text
        assert f"default: {default}" in text
    assert "--include-zeroth" in text and "default: False" in text


def test_kernel_dump_matches_library():
    code, text = run(["-q", "kernel-dump", "--m", "1", "--n", "1"])
    assert code == 0
    dense = np.loadtxt(io.StringIO(text), delimiter=",")
    np.testing.assert_array_equal(dense, dtg_kernel_2d(1, 1, 1.0).dense)
    assert run(["-q", "kernel-dump", "--m", "2", "--n", "1"])[0] == 1


def test_extract_outputs(synth_dir, tmp_path):
    images = sorted(str(p) for p in synth_dir.glob("*/*.png"))[:2]
    code, text = run(["-q", "extract", "--label", "x"] + sum((["--image", p] for p in images), []))
    assert code == 0
    lines = text.splitlines()
    assert len(lines) == 3 and len(lines[0].split(",")) == 2 + 295
    out_bin = tmp_path / "f.bin"
    assert run(["-q", "extract", "--image", images[0], "--out", str(out_bin),
                "--dump-jet", str(tmp_path / "jet")])[0] == 0
    assert out_bin.stat().st_size > 295 * 8
    assert len(list((tmp_path / "jet").glob("*.pgm"))) == 6


def test_bench_reports_slope():
    code, text = run(["-q", "bench", "--sizes", "32", "64", "--repeats", "1"])
    assert code == 0
    result = json.loads(text)
    assert [r["size"] for r in result["timings"]] == [32, 64]
    assert "loglog_slope" in result


def test_cache_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("JETPAT_CACHE_DIR", str(tmp_path))
    argv = ["-q", "experiment", "--synthetic", "--k", "3", "--no-timing"] + SMALL
    cold = run(argv)
    assert list(tmp_path.glob("features-*.bin"))
    assert run(argv) == cold


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "jetpat.cli", "kernel-dump", "--m", "0",
                           "--n", "0"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "resolved config" in proc.stderr

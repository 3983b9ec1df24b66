import json
import os
import subprocess
import sys

import numpy as np
import pytest

from bifbm import cli
from bifbm.errors import NotPositiveDefinite
from bifbm.io import read_csv

SMALL = {
    "sample": ["--alpha", "0.6", "--beta", "0.9", "--level", "6", "--paths", "3", "--seed", "2"],
    "coeffs": ["--alpha", "0.6", "--beta", "0.9", "--level", "6", "--paths", "2", "--gamma", "0.5"],
    "besov": ["--alpha", "0.6", "--beta", "0.9", "--level", "7", "--paths", "70"],
    "moments": ["--alpha", "0.7", "--beta", "0.8", "--level", "5"],
    "lln": ["--alpha", "0.75", "--beta", "0.8", "--level", "7", "--paths", "70"],
    "ito-nisio": ["--alpha", "0.9", "--beta", "0.7", "--level", "6", "--paths", "70",
                  "--holder-gamma", "0.5"],
    "holder": ["--alpha", "0.9", "--beta", "0.7", "--level", "6", "--paths", "70"],
}


def run(command, args, out):
    return cli.main([command, *args, "--out", str(out)])


def snapshot(directory):
    out = {}
    for name in sorted(os.listdir(directory)):
        with open(os.path.join(directory, name), "rb") as fh:
            out[name] = fh.read()
    return out


@pytest.mark.parametrize("command", sorted(SMALL))
def test_byte_identical_across_threads(command, tmp_path):
    snaps = []
    for threads in ("1", "2", "4"):
        out = tmp_path / threads
        assert run(command, SMALL[command] + ["--threads", threads], out) == 0
        snaps.append(snapshot(out))
    assert snaps[0] and snaps[0] == snaps[1] == snaps[2]


@pytest.mark.parametrize("command", sorted(SMALL))
def test_summary_and_manifest(command, tmp_path, capsys):
    assert run(command, SMALL[command], tmp_path) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("PASS ")
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == command
    assert manifest["version"] == cli.__version__
    assert manifest["params"]["alpha"] == float(SMALL[command][1])
    assert {"level", "seed", "n_paths"} <= set(manifest)
    assert "threads" not in manifest and "out" not in manifest
    summary = (tmp_path / "summary.txt").read_text().splitlines()
    assert all(s.startswith("PASS") for s in summary[1:])


def test_sample_files(tmp_path):
    run("sample", SMALL["sample"], tmp_path)
    header, rows = read_csv(tmp_path / "path_00001.csv")
    assert header == ["t", "value"]
    assert len(rows) == 65 and float(rows[0][1]) == 0.0
    assert float(rows[-1][0]) == 1.0
    with open(tmp_path / "path_00000.csv", "rb") as fh:
        assert b"\r\n" in fh.read()


def test_coeffs_files(tmp_path):
    run("coeffs", SMALL["coeffs"], tmp_path)
    header, rows = read_csv(tmp_path / "coeffs_00000.csv")
    assert header == ["j", "k", "f_jk"]
    assert len(rows) == 2 + 63
    reports = json.loads((tmp_path / "reports.json").read_text())
    assert len(reports) == 2 and reports[0]["gamma"] == 0.5


def test_json_format(tmp_path):
    assert run("lln", SMALL["lln"] + ["--format", "json"], tmp_path) == 0
    rows = json.loads((tmp_path / "levels.json").read_text())
    assert rows[0]["j"] == 1 and "c_p" in rows[0]
    assert not (tmp_path / "levels.csv").exists()


def test_moments_outputs(tmp_path):
    run("moments", SMALL["moments"], tmp_path)
    lemmas = json.loads((tmp_path / "lemmas.json").read_text())
    assert {r["lemma"] for r in lemmas} >= {"lln_variance_bound", "gaussian_pair_bound"}
    assert all(r["pass"] for r in lemmas)
    rho = np.loadtxt(tmp_path / "rho.csv", delimiter=",", skiprows=1)
    assert rho.shape == (32, 32) and np.all(np.diag(rho) == 1)


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sample config\nalpha = 0.6\nbeta = 0.9\nlevel = 5\npaths = 2\nseed = 4\n")
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert cli.main(["sample", "--config", str(cfg), "--out", str(a)]) == 0
    assert cli.main(["sample", "--alpha", "0.6", "--beta", "0.9", "--level", "5", "--paths", "2",
                     "--seed", "4", "--out", str(b)]) == 0
    assert cli.main(["sample", "--config", str(cfg), "--seed", "5", "--out", str(c)]) == 0
    sa, sb, sc = snapshot(a), snapshot(b), snapshot(c)
    assert {k: v for k, v in sa.items() if k != "manifest.json"} == \
        {k: v for k, v in sb.items() if k != "manifest.json"}
    assert sa["path_00000.csv"] != sc["path_00000.csv"]
    assert json.loads(sc["manifest.json"])["seed"] == 5


@pytest.mark.parametrize("args", [
    ["sample", "--alpha", "1.2", "--level", "5"],
    ["sample", "--alpha", "0.5", "--beta", "0", "--level", "5"],
    ["sample", "--alpha", "0.5"],
    ["sample", "--level", "5"],
    ["sample", "--alpha", "0.5", "--level", "14"],
    ["sample", "--alpha", "0.5", "--level", "5", "--paths", "0"],
    ["sample", "--alpha", "0.5", "--beta", "0.5", "--kernel", "fractional", "--level", "5"],
    ["ito-nisio", "--alpha", "0.5", "--beta", "1", "--level", "6"],
    ["ito-nisio", "--alpha", "0.9", "--beta", "0.7", "--level", "6", "--truncations", "8,4,64"],
    ["besov", "--alpha", "0.6", "--beta", "0.9", "--level", "6", "--p", "0.5"],
    ["besov", "--alpha", "0.6", "--beta", "0.9", "--level", "6", "--gamma-offsets", "a,b"],
    ["lln", "--alpha", "0.5", "--level", "5"],
    ["sample", "--alpha", "0.5", "--level", "5", "--config", "/nonexistent.cfg"],
])
def test_invalid_config_exits_2(args, tmp_path, capsys):
    assert cli.main(args + ["--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("bifbm: error:")


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("alpha = 0.5\nlevel = 5\nhurst = 0.3\n")
    assert cli.main(["sample", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_numerical_failure_exits_3(tmp_path, capsys, monkeypatch):
    def fail(*args, **kwargs):
        raise NotPositiveDefinite(3, -1e-15, 1e-13)

    monkeypatch.setattr(cli, "sample_paths", fail)
    assert cli.main(["sample", "--alpha", "0.5", "--level", "4", "--out", str(tmp_path)]) == 3
    assert "pivot 3" in capsys.readouterr().err


def test_jitter_recorded(tmp_path):
    assert cli.main(["sample", "--alpha", "0.5", "--level", "4", "--jitter",
                     "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["jitter_value"] == 1e-12


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "bifbm", "sample", "--alpha", "1.5", "--level", "4",
         "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert proc.stderr.startswith("bifbm: error:")

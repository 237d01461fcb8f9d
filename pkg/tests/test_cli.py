"""Command-line front end: subcommands, file formats, config parsing."""

import csv
import json
import math

import pytest

from fscm.cli import main, read_config
from fscm.mesh import load_mesh


def test_mesh_roundtrip(tmp_path, capsys):
    out = tmp_path / "mesh.txt"
    assert main(["mesh", "--n", "4", "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0].split()
    mesh = load_mesh(out)
    assert [int(v) for v in header] == [mesh.n_points, mesh.n_triangles]
    assert mesh.n_triangles == 3 * 2 * 4 * 4


def test_singular_table(capsys):
    assert main(["singular", "--n", "16"]) == 0
    out = capsys.readouterr().out
    assert "beta_star = 0.633857561" in out
    lines = [l for l in out.splitlines() if l and "," in l]
    assert lines[0].split(",")[0] == "n"
    assert len(lines) == 3             # header + levels 8 and 16


def test_solve2d_json(capsys):
    assert main(["solve2d", "--n", "8", "--mu", "1.0",
                 "--problem", "singular2d"]) == 0
    out = capsys.readouterr().out
    record = json.loads(out)
    assert record["n"] == 8
    assert record["cH"] * record["beta_star"] == pytest.approx(1.0, abs=0.1)
    assert record["a_error"] < 0.2


def test_solve2d_unknown_problem():
    with pytest.raises(SystemExit):
        main(["solve2d", "--n", "8", "--mu", "1.0", "--problem", "bogus"])


def test_solve3d_csv(tmp_path, capsys):
    out = tmp_path / "modes.csv"
    assert main(["solve3d", "--n", "8", "--modes", "3", "--L", "1.0",
                 "--problem", "singular3d", "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "mu", "cH", "thresholdApplied", "mode_a_error"]
    assert len(rows) == 4
    assert float(rows[1][1]) == pytest.approx(math.pi**2)
    assert rows[3][4] == ""            # no exact solution for mode 3


def test_converge_csv(tmp_path, capsys):
    out = tmp_path / "rates.csv"
    assert main(["converge", "--suite", "fem2d", "--levels", "2",
                 "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["level", "h", "N", "a_error", "h1_error", "cH",
                       "slope_running"]
    assert len(rows) == 3
    assert rows[1][6] == ""            # no slope at the first level
    assert 0.3 < float(rows[2][6]) < 1.2


def test_read_config(tmp_path):
    path = tmp_path / "fscm.cfg"
    path.write_text("# solver knobs\nc_star = 2.5\ntol = 1e-8\n")
    cfg = read_config(path)
    assert cfg.c_star == 2.5
    assert cfg.tol == 1e-8
    assert cfg.alpha0 == 0.55          # untouched default


def test_read_config_rejects_unknown(tmp_path):
    path = tmp_path / "fscm.cfg"
    path.write_text("r_zero = 0.3\n")
    with pytest.raises(ValueError):
        read_config(path)

import json

import pytest

from affineflow.cli import EXIT_DIVERGED, EXIT_OK, build_parser, main


def run(tmp_path, name, *args):
    out = tmp_path / name
    code = main(["--out-dir", str(out), *args])
    return code, out


def test_stencil_and_manifest(tmp_path):
    code, out = run(tmp_path, "st", "stencil", "--n-theta", "3")
    assert code == EXIT_OK
    lines = (out / "stencil.csv").read_text().splitlines()
    assert lines[0] == "k,angle,dx,dy" and len(lines) == 25
    m = json.loads((out / "manifest.json").read_text())
    assert m["command"] == "stencil" and m["config"]["n_S"] == 24
    assert {"seed", "version", "timestamp", "argv"} <= set(m)


def test_solve_static(tmp_path):
    code, out = run(tmp_path, "ss", "solve-static", "--example", "static-a", "--variant", "standard", "--n", "24")
    assert code == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["status"] == "converged" and rep["error_linf"] < 1e-5
    assert json.loads((out / "manifest.json").read_text())["config"]["dt_policy"] == "h2"


def test_replay_is_byte_identical(tmp_path):
    code, first = run(tmp_path, "a", "convergence", "--example", "c", "--variants", "standard", "--N", "16,24")
    assert code == EXIT_OK
    code, second = run(tmp_path, "b", "--manifest", str(first / "manifest.json"))
    assert code == EXIT_OK
    assert (first / "table.csv").read_bytes() == (second / "table.csv").read_bytes()


def test_evolve_writes_contours(tmp_path):
    code, out = run(tmp_path, "ev", "evolve", "--example", "evolution-diamond", "--n", "48", "--times", "0,0.05",
                    "--save-fields")
    assert code == EXIT_OK
    assert (out / "contour_000.csv").exists() and (out / "contour_001.csv").exists()
    assert (out / "field_001.csv").exists()


def test_invariance_identity(tmp_path):
    code, out = run(tmp_path, "inv", "invariance", "--test", "morphology-identity,affine-rot90", "--N", "24",
                    "--t", "0.1")
    assert code == EXIT_OK
    rows = (out / "invariance.csv").read_text().splitlines()
    assert rows[1].split(",")[5] == "0.0"


def test_model1d_and_instability_exit_codes(tmp_path):
    code, out = run(tmp_path, "m", "model1d", "--example", "x43", "--n", "32")
    assert code == EXIT_OK
    assert json.loads((out / "report.json").read_text())["diverged"] is False
    code, out = run(tmp_path, "i", "instability", "--demo", "1d-x43", "--max-iter", "20000")
    assert code == EXIT_DIVERGED
    rep = json.loads((out / "report.json").read_text())
    assert [r["diverged"] for r in rep["runs"]] == [True, False]


def test_bad_arguments():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["solve-static", "--example", "z"])
    assert main([]) == 1

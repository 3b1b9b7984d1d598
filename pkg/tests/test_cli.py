import json
import math
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from mixunion.cli import main
from mixunion.models import Markov2Model, random_joint_table

SCHEMA = json.loads(resources.files("mixunion").joinpath("schemas/report.json").read_text())
GEOM_08 = '{"kind": "geometric", "family": "phi", "C": 1, "rho": 0.8}'


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    return code, doc


@pytest.fixture
def files(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("\n".join(["0.25"] * 100) + "\n")
    prof = tmp_path / "prof.json"
    prof.write_text(GEOM_08)
    band = tmp_path / "band.csv"
    model = Markov2Model(0.2, 0.3, 10)
    band.write_text("".join(f"{i},{j},{v!r}\n" for (i, j), v in model.band().entries.items()))
    m10 = tmp_path / "m10.json"
    m10.write_text(json.dumps(model.marginals().to_json()))
    return {"m": str(m), "prof": str(prof), "band": str(band), "m10": str(m10)}


def test_bound_phi_json(capsys, files):
    code, doc = run_json(capsys, "bound", "phi", "--marginals", files["m"],
                         "--profile", files["prof"], "--L", "2")
    assert code == 0
    rep = doc["reports"][0]
    assert rep["form"] in ("phi-clean", "phi-main") and rep["L"] == 2
    assert rep["exponent"] == pytest.approx(100 * (0.25 - 0.8 ** 3) / 3) or rep["exponent"] == 0.0


def test_bound_phi_opt_row2(capsys, files):
    code, doc = run_json(capsys, "bound", "phi-opt", "--marginals", files["m"],
                         "--profile", files["prof"])
    rep = doc["reports"][0]
    assert code == 0 and rep["L"] == 11 and round(rep["bound"], 3) == 0.779


def test_bound_poly_alpha_inline(capsys):
    code, doc = run_json(capsys, "bound", "poly-alpha", "--SN", "3000", "--N", "10000",
                         "--C", "1", "--gamma", "2")
    assert code == 0
    assert doc["reports"][0]["bound"] == pytest.approx(1 - math.exp(-15) - 0.02, abs=1e-12)


def test_bound_human_output(capsys, files):
    code, out, _ = run(capsys, "bound", "geom-phi", "--p", "0.4", "--N", "50",
                       "--C", "1", "--rho", "0.5")
    assert code == 0 and "bound=0.964326" in out and "L=2" in out


@pytest.mark.parametrize("kind, extra", [
    ("alpha", ["--profile-json", '{"kind":"geometric","family":"alpha","C":1,"rho":0.5}', "--L", "1"]),
    ("alpha-lower-mass", ["--profile-json", '{"kind":"geometric","family":"alpha","C":1,"rho":0.5}', "--L", "1"]),
    ("window-phi", ["--profile-json", GEOM_08, "--L", "1", "--i", "2", "--n", "1"]),
    ("window-alpha", ["--profile-json", '{"kind":"polynomial","family":"alpha","C":1,"gamma":2}', "--L", "1", "--n", "1"]),
])
def test_bound_other_kinds(capsys, files, kind, extra):
    code, doc = run_json(capsys, "bound", kind, "--marginals", files["m10"], *extra)
    assert code == 0 and 0 <= doc["reports"][0]["bound"] <= 1


def test_bound_second_order_and_chung_erdos(capsys, files):
    exact = Markov2Model(0.2, 0.3, 10).exact_union
    code, doc = run_json(capsys, "bound", "second-order", "--marginals", files["m10"],
                         "--band", files["band"], "--L", "2", "--weighted",
                         "--profile-json", '{"kind":"geometric","family":"phi","C":1,"rho":0.5}')
    assert code == 0 and doc["reports"][0]["bound"] <= exact
    code, doc = run_json(capsys, "bound", "chung-erdos", "--marginals", files["m10"],
                         "--band", files["band"])
    assert code == 0 and doc["reports"][0]["bound"] == pytest.approx(0.7193941352517177)


@pytest.mark.parametrize("argv, needle", [
    (["bound", "phi", "--marginals", "/nonexistent.csv", "--L", "1"], "--marginals"),
    (["bound", "phi", "--p", "0.3", "--N", "5", "--L", "1"], "--profile"),
    (["bound", "phi", "--p", "0.3", "--N", "5", "--profile-json", GEOM_08], "--L"),
    (["bound", "alpha", "--p", "0.3", "--N", "5", "--profile-json", GEOM_08, "--L", "1"], "alpha profile"),
    (["bound", "chung-erdos", "--p", "0.3", "--N", "5"], "--band"),
    (["bound", "alpha-lower-mass", "--p", "0", "--N", "3", "--L", "0",
      "--profile-json", '{"kind":"m-dependent","family":"alpha","m":0}'], "lower-mass"),
    (["bound", "window-phi", "--p", "0.1", "--N", "5", "--n", "3", "--L", "0",
      "--profile-json", GEOM_08], "insufficient-mass"),
])
def test_input_errors_exit_two(capsys, argv, needle):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""
    assert len(err.strip().splitlines()) == 1 and needle in err


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bound", "nonsense"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_verify_table(capsys):
    code, out, _ = run(capsys, "verify-table")
    assert code == 0
    assert "(0.20,0.30,50)" in out and "0.99999" in out and "(2, 0.990)" in out
    assert "0.713" in out and "(11, 0.779)" in out
    code2, out2, _ = run(capsys, "verify-table")
    assert out2 == out
    code, doc = run_json(capsys, "verify-table")
    assert doc["status"] == "ok" and all(r["match"] for r in doc["rows"])


def test_verify_table_reports_mismatch(capsys, monkeypatch):
    from mixunion import cli
    broken = dict(cli.REFERENCE_TABLE)
    row = dict(broken[(0.2, 0.3, 50)])
    row["L0"] = 3
    broken[(0.2, 0.3, 50)] = row
    monkeypatch.setattr(cli, "REFERENCE_TABLE", broken)
    code, out, _ = run(capsys, "verify-table")
    assert code == 1 and "L0: got 2, expected 3" in out


def test_validate_pass_fail_and_precondition(capsys):
    code, doc = run_json(capsys, "validate", "--models", "10", "--N-max", "5", "--seed", "1")
    assert code == 0 and doc["validity"]["failed"] == 0
    code, out, _ = run(capsys, "validate", "--models", "10", "--N-max", "5", "--perturb", "0.1")
    assert code == 1 and "counterexample" in out and "weights" in out
    code, _, err = run(capsys, "validate", "--N-max", "12")
    assert code == 2 and "--N-max" in err


def test_compare_markov(capsys):
    code, doc = run_json(capsys, "compare", "--markov", "0.2", "0.3", "10",
                         "--L-min", "2", "--L-max", "5")
    assert code == 0
    exact = doc["reference"]["exact_union"]
    assert [r["L"] for r in doc["rows"]] == [2, 3, 4, 5]
    for r in doc["rows"]:
        for col in ("phi", "alpha", "second_order", "chung_erdos"):
            assert r[col] <= exact + 1e-12
    code, out, _ = run(capsys, "compare", "--markov", "0.2", "0.3", "10", "--L-min", "2")
    assert "all columns are valid lower bounds" in out
    assert "better" not in out.lower()


def test_compare_block_reduction(capsys):
    code, doc = run_json(capsys, "compare", "--block", "2", "0.1", "30", "--L-min", "2", "--L-max", "2")
    assert code == 0
    assert doc["rows"][0]["phi"] == pytest.approx(1 - math.exp(-9.0 / 3), abs=1e-14)  # N = 90, S_N = 9


def test_compare_independent_table(capsys, tmp_path):
    from mixunion.models import product_table
    path = tmp_path / "indep.bin"
    t = product_table([0.2, 0.3, 0.1, 0.4])
    t.save(path)
    code, doc = run_json(capsys, "compare", "--table", str(path), "--L-max", "0")
    row = doc["rows"][0]
    assert code == 0 and row["L"] == 0
    assert row["phi"] <= t.union() + 1e-12 and row["chung_erdos"] <= t.union() + 1e-12


def test_compare_random_table_and_mc(capsys, tmp_path):
    import numpy as np
    path = tmp_path / "t.json"
    random_joint_table(6, np.random.default_rng(5)).save(path)
    code, doc = run_json(capsys, "compare", "--table", str(path))
    assert code == 0
    code, _, err = run(capsys, "compare", "--markov", "0.2", "0.3", "10", "--mc-trials", "1000")
    assert code == 2 and "--seed" in err
    code, doc = run_json(capsys, "compare", "--markov", "0.2", "0.3", "10",
                         "--mc-trials", "20000", "--seed", "3")
    mc = doc["reference"]["monte_carlo"]
    assert code == 0 and mc["trials"] == 20000


def test_out_respects_output_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("MIXUNION_OUTPUT_DIR", str(tmp_path))
    code, _, _ = run(capsys, "verify-table", "--out", "sub/report.json")
    doc = json.loads((tmp_path / "sub" / "report.json").read_text())
    assert code == 0 and doc["command"] == "verify-table"
    jsonschema.validate(doc, SCHEMA)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "mixunion", "validate", "--N-max", "11"],
                         capture_output=True, text=True)
    assert res.returncode == 2 and "N-max" in res.stderr

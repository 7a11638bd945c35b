import json
from fractions import Fraction
from pathlib import Path

import pytest

from treepile.cli import run

TREES = Path(__file__).resolve().parents[1] / "trees"
CHERRY = str(TREES / "cherry.json")
LINE3 = str(TREES / "line3.json")
INTERIOR = str(TREES / "interior2.json")


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_and_states(capsys):
    code, out, _ = call(capsys, "validate", "--tree", CHERRY)
    assert code == 0 and json.loads(out) == {"valid": True, "vertices": 3, "states": 8}
    code, out, _ = call(capsys, "states", "--tree", CHERRY)
    lines = out.splitlines()
    assert lines[0] == "rank;config" and lines[4] == "3;0,1,1" and len(lines) == 9


def test_validation_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"vertices": [{"id": "r", "parent": null, "threshold": 1, "x": "1/2"}]}')
    code, _, err = call(capsys, "validate", "--tree", str(bad))
    assert code == 2 and "sum" in err
    code, _, _ = call(capsys, "validate", "--tree", str(tmp_path / "missing.json"))
    assert code == 2
    code, _, _ = call(capsys, "matrix")
    assert code == 2


def test_apply_trace(capsys):
    code, out, _ = call(capsys, "apply", "--tree", CHERRY, "--config", "1,0,0", "--op", "tau:a", "--op", "σ:b")
    doc = json.loads(out)
    assert code == 0 and doc["trace"] == ["1,0,0", "0,0,1", "0,1,1"]
    code, _, _ = call(capsys, "apply", "--tree", CHERRY, "--config", "1,0,0", "--op", "push:a")
    assert code == 2


def test_matrix_json(capsys):
    code, out, _ = call(capsys, "matrix", "--tree", CHERRY)
    rows = json.loads(out)
    assert code == 0 and rows[3][6] == "1/5" and rows[0][0] == "3/5"


def test_stationary_methods_agree(capsys):
    results = {}
    for method in ("exact", "product"):
        code, out, _ = call(capsys, "stationary", "--tree", CHERRY, "--method", method, "--format", "csv")
        assert code == 0
        results[method] = out
    assert results["exact"] == results["product"]
    lines = results["exact"].splitlines()
    assert lines[0] == "config;probability" and lines[1] == "0,0,0;1/12"


def test_stationary_lifting(capsys):
    _, a, _ = call(capsys, "stationary", "--tree", LINE3, "--solver", "lifting")
    _, b, _ = call(capsys, "stationary", "--tree", LINE3, "--solver", "bareiss")
    assert a == b


def test_landslide_product_hypothesis_exit_code(capsys):
    code, _, err = call(capsys, "stationary", "--tree", INTERIOR, "--method", "product")
    assert code == 4 and "threshold 1" in err
    code, out, _ = call(capsys, "stationary", "--tree", INTERIOR, "--method", "product", "--model", "trickle")
    assert code == 0


def test_partition(capsys):
    code, out, _ = call(capsys, "partition", "--tree", CHERRY)
    doc = json.loads(out)
    assert code == 0 and doc["product_formula"] == "12/125" and doc["product_form_matches"] is True


def test_charpoly_methods(capsys):
    _, exact, _ = call(capsys, "charpoly", "--tree", LINE3)
    _, formula, _ = call(capsys, "charpoly", "--tree", LINE3, "--method", "formula")
    assert json.loads(exact)["charpoly"] == json.loads(formula)["charpoly"]


def test_spectrum(capsys):
    code, out, _ = call(capsys, "spectrum", "--tree", CHERRY, "--format", "csv")
    rows = [line.split(";") for line in out.splitlines()[1:]]
    assert code == 0 and sum(int(m) for _, m in rows) == 8
    assert {Fraction(v) for v, _ in rows} == {Fraction(k, 5) for k in (0, 1, 2, 3, 5)}
    code, out, _ = call(capsys, "spectrum", "--tree", CHERRY, "--method", "numeric")
    assert code == 0 and sum(e["multiplicity"] for e in json.loads(out)["eigenvalues"]) == 8


def test_monoid_and_cap(capsys):
    code, out, _ = call(capsys, "monoid", "--tree", CHERRY)
    doc = json.loads(out)
    assert code == 0 and doc["size"] == 43 and doc["r_trivial"] and doc["r_trivial_direct"]
    code, _, err = call(capsys, "monoid", "--tree", CHERRY, "--max-monoid", "10")
    assert code == 3 and "10" in err
    code, _, _ = call(capsys, "states", "--tree", LINE3, "--max-states", "4")
    assert code == 3


def test_cayley_dot(capsys):
    code, out, _ = call(capsys, "cayley", "--tree", CHERRY)
    assert code == 0 and out.startswith("digraph right_cayley")
    code, out, _ = call(capsys, "cayley", "--tree", CHERRY, "--side", "left", "--format", "csv")
    assert out.splitlines()[0] == "source;generator;target"


def test_converge(capsys):
    code, out, _ = call(capsys, "converge", "--tree", CHERRY, "--ks", "0,12", "--initial", "0,0,0")
    lines = out.splitlines()
    assert code == 0 and lines[1].startswith("0;11/12;")
    code, _, _ = call(capsys, "converge", "--tree", CHERRY, "--format", "json")
    assert code == 2


def test_upset_stat(capsys):
    code, out, _ = call(capsys, "upset-stat", "--tree", CHERRY, "--format", "json", "--pairs", "500")
    doc = json.loads(out)
    assert code == 0 and doc["monotone_violations"] == 0 and doc["claim2_violations"] == 0
    assert doc["elements"] == 42


def test_conjecture(capsys):
    code, out, _ = call(capsys, "conjecture", "--thresholds", "1,2")
    doc = json.loads(out)
    assert code == 0 and doc["match"] and doc["engine"] == "symbolic"


def test_out_manifest_and_reruns(capsys, tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        code = run(["converge", "--tree", CHERRY, "--ks", "5,20", "--trials", "3000", "--seed", "11",
                    "--out", str(path)])
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    man = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    assert man["command"] == "converge" and man["seed"] == 11
    assert len(man["input_sha256"]) == 64 and man["version"]
    assert capsys.readouterr().out == ""


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        run(["--version"])
    assert info.value.code == 0
    assert "treepile" in capsys.readouterr().out

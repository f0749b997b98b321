import csv
import json
import subprocess
import sys

import pytest

from ohdnet.cli import main
from ohdnet.reports import SCHEMA, csv_text, verdict_json


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out), "--jobs", "1"])
    return code, out


def read_json(out):
    return json.loads((out / "verdict.json").read_text())


def test_gap_unit_ladder(tmp_path):
    code, out = run(tmp_path, "gap", "--family", "ladder:unit", "--pair", "a1,b1", "--nmax", "200")
    assert code == 0
    doc = read_json(out)
    assert doc["schema"] == SCHEMA and doc["verdict"] == "in-O_HD-evidence"
    with open(out / "gap.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["n", "R_F", "R_W", "gap", "energy", "residual"]
    assert rows[-1]["n"] == "200"


def test_gap_geometric_default_pair(tmp_path):
    code, out = run(tmp_path, "gap", "--family", "ladder:geometric")
    assert code == 0
    assert read_json(out)["verdict"] == "not-in-O_HD-evidence"


def test_gap_undecided_exit_code(tmp_path):
    code, _ = run(tmp_path, "gap", "--family", "ladder:geometric", "--nmax", "4")
    assert code == 2


def test_gap_missing_pair_for_file(tmp_path):
    f = tmp_path / "tri.txt"
    f.write_text("a b 1\nb c 1\nc a 1\n")
    code, _ = run(tmp_path, "gap", "--network", str(f))
    assert code == 1
    code, out = run(tmp_path, "gap", "--network", str(f), "--pair", "a,b", "--nmax", "3")
    assert code == 0
    assert read_json(out)["R_F"] == pytest.approx(2 / 3)


def test_bad_inputs(tmp_path):
    assert run(tmp_path, "gap", "--network", str(tmp_path / "missing.txt"), "--pair", "a,b")[0] == 1
    assert run(tmp_path, "gap", "--family", "nope")[0] == 1
    assert run(tmp_path, "gap", "--family", "ladder:unit", "--nmax", "0")[0] == 1
    assert run(tmp_path, "gap", "--family", "ladder:unit", "--pair", "a1")[0] == 1
    assert run(tmp_path, "gap", "--family", "ladder:unit", "--pair", "a1,zz")[0] == 1
    assert main(["frobnicate"]) == 1


def test_transience_tree(tmp_path):
    code, out = run(tmp_path, "transience", "--family", "btree:unit", "--vertex", "root")
    assert code == 0
    doc = read_json(out)
    assert doc["verdict"] == "transient" and doc["n_max"] == 16
    assert doc["resistance"] == pytest.approx(1.0, abs=1e-3)


def test_transience_grid_vertex_literal(tmp_path):
    code, out = run(tmp_path, "transience", "--family", "grid:2", "--vertex", "(0, 0)", "--nmax", "12")
    assert read_json(out)["vertex"] == [0, 0]
    rows = list(csv.DictReader(open(out / "transience.csv")))
    assert all(float(r["NW"]) <= float(r["R"]) + 1e-12 for r in rows)


def test_barricade_n1(tmp_path):
    code, out = run(tmp_path, "barricade", "--family", "n1", "--count", "50")
    assert code == 0
    doc = read_json(out)
    assert doc["certified"] and doc["found"] == 50
    rows = list(csv.DictReader(open(out / "barricades.csv")))
    assert len(rows) == 50 and float(rows[-1]["partial_sum"]) == pytest.approx(50.0)


def test_certify(tmp_path):
    code, out = run(tmp_path, "certify", "--family", "ladder:geometric", "--A", "side1", "--B", "side2")
    assert code == 0
    assert read_json(out)["verdict"] == "not-in-O_HD-certified"
    code, out = run(tmp_path, "certify", "--family", "ladder:unit", "--A", "side1", "--B", "side2")
    assert code == 2


def test_certify_vertex_files(tmp_path):
    fa, fb = tmp_path / "A.txt", tmp_path / "B.txt"
    fa.write_text("a1 a2\n")
    fb.write_text("b1\nb2\n")
    code, out = run(tmp_path, "certify", "--family", "ladder:unit", "--A", str(fa), "--B", str(fb), "--nmax", "10")
    assert code == 2
    assert run(tmp_path, "certify", "--family", "ladder:unit", "--A", "nowhere", "--B", str(fb))[0] == 1


def test_deterministic_output(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert main(["gap", "--family", "ladder:geometric", "--nmax", "60", "--out", str(out), "--seed", "7",
                     "--jobs", str(k + 1)]) == 0
        outs.append(((out / "gap.csv").read_bytes(), (out / "verdict.json").read_bytes()))
    assert outs[0] == outs[1]
    assert json.loads(outs[0][1])["seed"] == 7


def test_families_listing(capsys):
    assert main(["families"]) == 0
    assert "ladder:unit" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "ohdnet", "families"], capture_output=True, text=True)
    assert res.returncode == 0 and "n2" in res.stdout


def test_report_formatting():
    text = csv_text([{"a": 0.1, "b": float("inf"), "c": True}], ["a", "b", "c"])
    assert text == "a,b,c\n0.1,inf,true\n"
    doc = json.loads(verdict_json("x", {"v": float("nan"), "s": {3, 1}}))
    assert doc["v"] is None and doc["s"] == [1, 3]

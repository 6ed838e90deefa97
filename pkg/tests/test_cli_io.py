import json
import os
import subprocess
import sys
from fractions import Fraction

import pytest

from hilbring.cli_io import (atomic_write, export_table, parse_surface_file, render, resolve_surface, run,
                             table_from_json, threads)
from hilbring.errors import IoError, SchemaError, UnknownName
from hilbring.frobenius import builtin, dump_surface
from hilbring.taut_ring import ring_table, same_table


def invoke(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("argv, code", [
    (["betti", "--surface", "k3", "--n", "3"], 0),
    (["verify", "--surface", "p2", "--relations", "heisenberg", "--max-weight", "2"], 0),
    (["verify", "--surface", "p2", "--relations", "cubic-boundary", "--max-weight", "3"], 1),
    (["cr-compare", "--surface", "k3", "--n", "2"], 0),
    (["cr-compare", "--surface", "p2", "--n", "2", "--allow-c1"], 1),
    (["cr-compare", "--surface", "p2", "--n", "2"], 2),
    (["betti", "--surface", "nope", "--n", "2"], 2),
    (["chern", "--surface", "p2", "--n", "2", "--poly", "c2"], 2),
    (["betti", "--surface", "k3"], 2),
    (["frobnicate"], 2),
])
def test_exit_codes(capsys, argv, code):
    got, out, err = invoke(capsys, *argv)
    assert got == code
    if code == 2:
        assert err.startswith("hilb: error:")


def test_betti_csv_sorted(capsys):
    code, out, _ = invoke(capsys, "betti", "--surface", "p2", "--n", "3")
    lines = out.strip().splitlines()
    assert lines[0] == "n,d,betti"
    rows = [tuple(map(int, l.split(","))) for l in lines[1:]]
    assert rows == sorted(rows)
    assert sum(b for n, d, b in rows if n == 3) == 22


def test_chern_outputs(capsys):
    code, out, _ = invoke(capsys, "chern", "--surface", "k3", "--n", "2", "--poly", "c2^2")
    assert code == 0 and json.loads(out)["value"] == {"num": 828, "den": 1}
    code, out, _ = invoke(capsys, "chern", "--surface", "k3", "--n", "2", "--poly", "c4", "--universal")
    data = json.loads(out)
    assert data == {"n": 2, "terms": [{"a": 0, "b": 1, "num": 3, "den": 2}, {"a": 0, "b": 2, "num": 1, "den": 2}]}


def test_cup_monomials(capsys):
    code, out, _ = invoke(capsys, "cup", "--surface", "p2", "--v", "q1(1)q1(1)", "--w", "q1(1)q1(1)")
    assert code == 0 and json.loads(out)["n"] == 2
    code, _, err = invoke(capsys, "cup", "--surface", "p2", "--v", "q1(1)", "--w", "q1(1)q1(1)")
    assert code == 2 and "weights" in err


def test_surface_file_round_trip(tmp_path, capsys):
    path = tmp_path / "k3.json"
    path.write_text(json.dumps(dump_surface(builtin("k3"))))
    model = parse_surface_file(path)
    assert same_table(ring_table(model, 2), ring_table(builtin("k3"), 2))
    _, from_file, _ = invoke(capsys, "betti", "--surface", str(path), "--n", "3")
    _, from_builtin, _ = invoke(capsys, "betti", "--surface", "k3", "--n", "3")
    assert from_file == from_builtin


def test_surface_file_errors(tmp_path):
    data = dump_surface(builtin("p2"))
    missing = dict(data)
    del missing["integral"]
    p = tmp_path / "missing.json"
    p.write_text(json.dumps(missing))
    with pytest.raises(SchemaError, match="integral"):
        parse_surface_file(p)

    zero = json.loads(json.dumps(data))
    zero["integral"][0]["den"] = 0
    p.write_text(json.dumps(zero))
    with pytest.raises(SchemaError, match="zero denominator"):
        parse_surface_file(p)

    p.write_text('{"basis": [1,\n 2,,]}')
    with pytest.raises(SchemaError, match="line 2"):
        parse_surface_file(p)

    with pytest.raises(UnknownName):
        resolve_surface(str(tmp_path / "absent.json"))


def test_ring_table_export_import(tmp_path):
    model = builtin("p1xp1")
    table = ring_table(model, 2)
    path = tmp_path / "ring.json"
    export_table(table, path, "json", model)
    again = table_from_json(json.loads(path.read_text()))
    assert same_table(table, again)
    assert again.unit_coeff == table.unit_coeff and again.form == table.form
    assert render(table, "json", model) == path.read_text()
    with pytest.raises(SchemaError):
        table_from_json({"basis": []})


def test_atomic_write(tmp_path):
    target = tmp_path / "out.txt"
    target.write_text("old")
    atomic_write(target, "new")
    assert target.read_text() == "new"
    assert os.listdir(tmp_path) == ["out.txt"]
    with pytest.raises(IoError):
        atomic_write(tmp_path / "no" / "such" / "dir.txt", "x")
    assert os.listdir(tmp_path) == ["out.txt"]


def test_unwritable_output(tmp_path, capsys):
    code, _, err = invoke(capsys, "betti", "--surface", "p2", "--n", "2", "--out", str(tmp_path / "x" / "y.csv"))
    assert code == 2 and "cannot write" in err


def test_resource_marker(capsys):
    code, out, err = invoke(capsys, "ring", "--surface", "k3", "--n", "4", "--time-budget", "0.5")
    assert code == 1 and err.startswith("hilb: resource:") and out == ""


def test_threads_env(monkeypatch):
    monkeypatch.setenv("HILB_THREADS", "3")
    assert threads() == 3
    monkeypatch.setenv("HILB_THREADS", "many")
    with pytest.raises(SchemaError):
        threads()


def test_console_entry_point_is_deterministic(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        proc = subprocess.run([sys.executable, "-m", "hilbring.cli_io", "ring", "--surface", "p2", "--n", "2",
                               "--out", str(out)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]

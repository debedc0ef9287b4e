import csv
import io
import json

import numpy as np
import pytest

from helpers import graphs
from stochmatch import cli
from stochmatch.graph import save


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def test_order_gap_example():
    code, out, _ = run(["examples", "order-gap", "--out", "json"])
    assert code == 0
    data = json.loads(out)
    assert data["opt_order_v1v2"] == pytest.approx(1, abs=1e-12)
    assert data["opt_order_v2v1"] == pytest.approx(1.25, abs=1e-12)
    assert data["order_gap"] == pytest.approx(0.8, abs=1e-12)


def test_noncommittal_gap_example():
    code, out, _ = run(["examples", "noncommittal-gap", "--out", "json"])
    assert code == 0
    assert abs(json.loads(out)["ratio"] - 0.856269) <= 1e-6


def test_unit_patience_solve(tmp_path):
    g = graphs(200, 1, offline=(4, 4), online=(3, 3), max_patience=1)[0]
    path = tmp_path / "g.json"
    save(g, path)
    code, out, _ = run(["solve", "--input", str(path), "--kind", "new", "--kind", "std", "--out", "json"])
    assert code == 0
    data = json.loads(out)
    assert abs(data["opt_new"] - data["opt_std"]) <= 1e-8


def test_csv_layout():
    code, out, _ = run(["examples", "order-gap"])
    assert code == 0
    assert "\r" not in out and out.endswith("\n")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["instance", "quantity", "value", "stderr", "lo", "hi", "trials", "seed"]
    assert [r[1] for r in rows[1:]] == ["opt_order_v1v2", "opt_order_v2v1", "order_gap"]
    assert rows[3][2] == "%.12g" % 0.8


def test_estimates_carry_stderr():
    code, out, _ = run(["examples", "half-rom", "--param", "0.5", "--trials", "20000"])
    assert code == 0
    row = [r for r in csv.DictReader(io.StringIO(out)) if r["quantity"] == "value_plain_rom"][0]
    assert float(row["stderr"]) > 0 and int(row["trials"]) == 20000 and int(row["seed"]) == 20240301


def test_invalid_input_exits_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"offline": 1, "online": 1, "patience": [1],
                               "edges": [{"u": 0, "v": 0, "p": 1.5, "w": 1.0}]}))
    code, _, err = run(["solve", "--input", str(bad)])
    assert code == 1 and "probability" in err
    malformed = tmp_path / "malformed.json"
    malformed.write_text(json.dumps({"prob": [[0.5]]}))
    assert run(["solve", "--input", str(malformed)])[0] == 1
    assert run(["solve", "--input", str(tmp_path / "missing.json")])[0] == 1
    assert run(["bench", "--input", str(bad), "--example", "order-gap"])[0] == 1
    assert run(["examples", "nope"])[0] == 1
    assert run(["examples", "order-gap", "--trials", "0"])[0] == 1


def test_limit_violation_is_reported(tmp_path):
    g = graphs(201, 1, offline=(5, 5), online=(3, 3))[0]
    path = tmp_path / "big.json"
    save(g, path)
    code, _, err = run(["bench", "--input", str(path), "--quantity", "committal"])
    assert code == 1 and "limit" in err


def test_band_failure_exits_2(monkeypatch):
    def failing(args, rep):
        rep.exact("x", "q", 0.0)
        rep.check(False, "forced")
    monkeypatch.setitem(cli.EXAMPLES, "order-gap", failing)
    code, _, err = run(["examples", "order-gap"])
    assert code == 2 and "forced" in err


def test_bench_and_simulate_run():
    code, out, _ = run(["bench", "--example", "noncommittal-gap", "--quantity", "committal",
                        "--quantity", "noncommittal", "--out", "json"])
    assert code == 0
    data = json.loads(out)
    assert data["opt_committal"] == pytest.approx(3.36, abs=1e-9)
    code, out, _ = run(["simulate", "--example", "order-gap", "--trials", "5000", "--out", "json"])
    assert code == 0


def test_sweeps_emit_rows():
    code, out, _ = run(["sweep", "single-offline", "--n", "2..4"])
    assert code == 0 and out.count("\n") > 3
    code, out, _ = run(["sweep", "half-rom", "--eps", "0.5,0.1", "--trials", "5000"])
    assert code == 0


def test_list_parsing():
    assert cli.parse_int_list("2..5") == [2, 3, 4, 5]
    assert cli.parse_int_list("10,20,40") == [10, 20, 40]
    with pytest.raises(Exception):
        cli.parse_int_list("a..b")

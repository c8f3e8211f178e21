import json

import pytest

from schubcomp.cli import main


def run(capsys, tmp_path, *argv):
    rc = main(["--out", str(tmp_path), *argv])
    out, err = capsys.readouterr()
    return rc, out, err


def manifest(tmp_path):
    return json.loads((tmp_path / "manifest.json").read_text())


def test_eval_value_only(capsys, tmp_path):
    rc, out, _ = run(capsys, tmp_path, "eval", "--perm", "1,4,3,2", "--value-only")
    assert rc == 0 and out.strip() == "5"
    m = manifest(tmp_path)
    assert m["command"] == "eval" and m["exit_status"] == 0
    assert "eval.json" in m["outputs"] and m["peak_memory_bytes"] > 0


def test_eval_json_record(capsys, tmp_path):
    rc, out, _ = run(capsys, tmp_path, "eval", "--perm", "1,4,3,2", "--formula", "descent",
                     "--arith", "float")
    rec = json.loads(out)
    assert rc == 0 and rec["value"] == "5" and rec["formula"] == "descent"


@pytest.mark.parametrize("argv", [
    ["eval", "--perm", "1232"],
    ["eval", "--perm", "1,4,3,2", "--formula", "nope"],
    ["frobnicate"],
    ["eval"],
    ["enumerate", "--n", "9"],
])
def test_usage_errors_exit_1(capsys, tmp_path, argv):
    rc, _, err = run(capsys, tmp_path, *argv)
    assert rc == 1 and err


def test_oracle(capsys, tmp_path):
    rc, out, _ = run(capsys, tmp_path, "oracle", "--perm", "1,4,3,2", "--method", "pipe-dream")
    assert rc == 0 and json.loads(out)["value"] == "5"


def test_enumerate_reduced_n4(capsys, tmp_path):
    rc, out, err = run(capsys, tmp_path, "enumerate", "--n", "4", "--reduced")
    assert rc == 0 and len(out.strip().split("\n\n")) == 41 and "41 grids" in err


def test_enumerate_height_csv(capsys, tmp_path):
    rc, out, _ = run(capsys, tmp_path, "enumerate", "--n", "3", "--format", "height-csv")
    assert rc == 0 and len(out.strip().split("\n\n")) == 7


def test_max_search_full(capsys, tmp_path):
    rc, out, _ = run(capsys, tmp_path, "max-search", "--n", "6")
    assert rc == 0
    rec = json.loads((tmp_path / "search.json").read_text())
    assert rec == json.loads(out) and rec["n"] == 6


def test_layered_opt(capsys, tmp_path):
    rc, out, _ = run(capsys, tmp_path, "layered-opt", "--n", "8", "--verify")
    rec = json.loads(out)
    assert rc == 0 and rec["blocks"] == [1, 2, 5] and rec["value"] == "9438"


def test_connectivity(capsys, tmp_path):
    rc, out, _ = run(capsys, tmp_path, "connectivity", "--n", "4", "--droops", "--stuck")
    rec = json.loads(out)
    assert rc == 0 and rec["flips_connected"] and rec["stuck_raw"] == 0


def test_mcmc_same_seed_same_bytes(capsys, tmp_path):
    args = ["mcmc-sample", "--n", "6", "--seed", "17", "--chains", "2", "--burn-in", "2000",
            "--thin", "50", "--samples", "40", "--archive"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--out", str(a), *args]) == 0
    assert main(["--out", str(b), *args]) == 0
    capsys.readouterr()
    for name in ("perm_matrix.csv", "height_avg.csv", "mixed_diff.csv", "length_trace.csv",
                 "samples.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    m = manifest(a)
    assert [s["key"] for s in m["seeds"]] == [17, 16]
    assert (a / "samples.txt").read_text().count("\n") == 80


def test_cftp_diag_json(capsys, tmp_path):
    rc, out, _ = run(capsys, tmp_path, "cftp-diag", "--n", "4", "--mode", "sublattice")
    rec = json.loads(out)
    assert rc == 0 and rec["pairs"] == 9 and rec["non_reduced_asms"] == 1
    rc, out, _ = run(capsys, tmp_path, "cftp-diag", "--n", "3", "--mode", "violations")
    assert json.loads(out)["violations"] == 0


def test_bench_layered_small(capsys, tmp_path):
    rc, out, _ = run(capsys, tmp_path, "bench", "--n", "5..6", "--timeout", "30")
    assert rc == 0
    lines = out.strip().split("\n")
    assert lines[0].split("\t")[:4] == ["n", "layers", "length", "log2/n^2"]
    assert len(lines) == 3 and "*" not in out
    rows = json.loads((tmp_path / "bench.json").read_text())
    assert [r["n"] for r in rows] == [5, 6]

import json
import subprocess
import sys

import pytest

from distalf3.cli import RunConfig, parse_and_dispatch
from distalf3.report import emit_report
from distalf3.spectra import SCAN_HEADER


def run(args, capsys):
    code = parse_and_dispatch(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_freecheck_counts(capsys):
    code, out, _ = run(["freecheck", "--rank", "3", "--max-len", "2"], capsys)
    assert code == 0
    assert json.loads(out)["words_checked"] == 36


def test_freecheck_witness_exit(tmp_path, capsys):
    f = tmp_path / "gens.txt"
    f.write_text("1,4,0,1\n1,4,0,1\n")
    code, out, err = run(["freecheck", "--rank", "2", "--max-len", "3", "--gens", str(f)], capsys)
    assert code == 1
    assert json.loads(out)["witness"] == [[0, 1], [1, -1]]
    assert "a b^-1" in err


def test_freecheck_bad_gens_file(tmp_path, capsys):
    f = tmp_path / "gens.txt"
    f.write_text("1,4,0,1\n")
    code, _, _ = run(["freecheck", "--rank", "2", "--gens", str(f)], capsys)
    assert code == 2


@pytest.mark.parametrize("args", [
    ["gap", "--prime", "4"],
    ["gap", "--prime", "2"],
    ["enumerate", "--prime", "9"],
    ["scan", "--pmin", "7", "--pmax", "5"],
    ["nonsense"],
    ["--threads", "0", "gap", "--prime", "5"],
    ["simulate", "--kprimes", "3", "--lprimes", "3"],
])
def test_usage_errors(args, capsys):
    code, _, _ = run(args, capsys)
    assert code == 2


def test_capacity_exit(capsys):
    code, _, err = run(["simulate", "--kprimes", "5,13", "--lprimes", "3,7"], capsys)
    assert code == 3
    assert "capacity" in err


def test_scan_single_prime(capsys):
    code, out, _ = run(["scan", "--pmin", "5", "--pmax", "5", "--class", "1", "--gens", "ab"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == ",".join(SCAN_HEADER)
    assert len(lines) == 2 and lines[1].startswith("5,1,120,true,")


def test_scan_empty_is_header_only(tmp_path, capsys):
    path = tmp_path / "gaps.csv"
    code, _, _ = run(["scan", "--pmin", "14", "--pmax", "16", "--out", str(path)], capsys)
    assert code == 0
    assert path.read_bytes() == (",".join(SCAN_HEADER) + "\n").encode()


def test_scan_class_filter(capsys):
    code, out, _ = run(["scan", "--pmin", "3", "--pmax", "13", "--class", "3", "--gens", "ab"], capsys)
    assert [l.split(",")[0] for l in out.splitlines()[1:]] == ["3", "7", "11"]


def test_enumerate_and_dump(tmp_path, capsys):
    dump = tmp_path / "table.bin"
    code, out, _ = run(["enumerate", "--prime", "5", "--gens", "abc", "--dump", str(dump)], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["generated"] and rep["subgroup_size"] == 120
    assert dump.read_bytes()[:4] == b"SL2T"


def test_gap_command(capsys):
    code, out, _ = run(["gap", "--prime", "5", "--gens", "ab", "--iter", "--seed", "3"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["method"] == "iterative" and rep["seed"] == 3
    assert rep["gap"] / 2 <= rep["sweep_ratio"] + 1e-9


def test_simulate_and_defect(capsys):
    code, out, _ = run(["simulate", "--kprimes", "5", "--lprimes", "3", "--cocycle", "random:2",
                        "--steps", "50"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["transitive"] and rep["orbit_count"] == 1
    assert rep["gap_report"]["gap"] > 0
    code, out, _ = run(["defect", "--kprimes", "5", "--lprimes", "3,7", "--delta", "0.5",
                        "--horizon", "10", "--samples", "20", "--seed", "4"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["delta"] == 0.5 and len(rep["attaining_pair"]) == 2
    code, _, err = run(["defect", "--kprimes", "5", "--lprimes", "3", "--delta", "0.1"], capsys)
    assert code == 2 and "minimal positive distance 0.5" in err


def test_defect_csv(capsys):
    code, out, _ = run(["defect", "--kprimes", "5", "--lprimes", "3", "--delta", "0.5",
                        "--samples", "5", "--format", "csv"], capsys)
    import csv, io
    header, row = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert len(header) == len(row)
    assert float(row[header.index("defect")]) == 0.5


def test_c_override(capsys):
    code, out, _ = run(["--c", "1,4,0,1", "freecheck", "--rank", "3", "--max-len", "2"], capsys)
    assert code == 1
    assert json.loads(out)["config"]["params"]["c"] == [1, 4, 0, 1]


def test_version():
    res = subprocess.run([sys.executable, "-m", "distalf3.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "c=[29, 12, 12, 5]" in res.stdout and "a=[1, 4, 0, 1]" in res.stdout


def test_json_roundtrip(tmp_path):
    rep = {"b": [1, 2.5, None], "a": {"z": True, "y": "s"}}
    text = emit_report(rep, "json", tmp_path / "r.json")
    assert json.loads(text) == rep
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')


def test_runconfig_serializable():
    cfg = RunConfig("gap", {"prime": 5}, seed=3, out="x", threads=2)
    assert json.loads(json.dumps(cfg.to_json())) == {"command": "gap", "params": {"prime": 5},
                                                      "seed": 3, "format": "json"}


@pytest.mark.parametrize("args", [
    ["scan", "--pmin", "3", "--pmax", "23", "--gens", "abc", "--seed", "5"],
    ["simulate", "--kprimes", "5", "--lprimes", "3", "--cocycle", "random:9", "--seed", "2"],
])
def test_byte_identical_outputs(tmp_path, capsys, args):
    outs = []
    for i in range(2):
        path = tmp_path / f"out{i}"
        assert parse_and_dispatch(args + ["--out", str(path)]) == 0
        outs.append(path.read_bytes())
    capsys.readouterr()
    assert outs[0] == outs[1]


def test_threads_do_not_change_dense_results(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    parse_and_dispatch(["scan", "--pmin", "3", "--pmax", "13", "--out", str(a)])
    parse_and_dispatch(["--threads", "2", "scan", "--pmin", "3", "--pmax", "13", "--out", str(b)])
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()

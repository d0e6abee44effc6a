"""Command surface: exit codes, transcript determinism, and report schemas."""
import json
import subprocess
import sys
from random import Random

import pytest

from pircsi import Database, FieldParams, wire
from pircsi.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_entry_point_version():
    out = subprocess.run(
        [sys.executable, "-m", "pircsi.cli", "--version"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "pircsi 0.1.0"


# ---------------------------------------------------------------------- demo


def test_demo_transcript_is_deterministic(capsys):
    args = ("demo", "--model", "I", "--k", "5", "--m", "1", "--q", "3", "--seed", "7")
    code1, out1, _ = _run(capsys, *args)
    code2, out2, _ = _run(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2
    assert "result: PASS" in out1
    assert "query (3 sets):" in out1


def test_demo_single_element_answer(capsys):
    code, out, _ = _run(capsys, "demo", "--model", "II", "--k", "4", "--m", "2")
    assert code == 0
    assert "answer: 1 element\n" in out


def test_demo_query_free_case(capsys):
    code, out, _ = _run(capsys, "demo", "--model", "II", "--k", "3", "--m", "1")
    assert code == 0
    assert "query: none" in out
    assert "answer: 0 elements" in out


def test_demo_reveal_flag(capsys):
    code, out, _ = _run(
        capsys, "demo", "--model", "I", "--k", "6", "--m", "1", "--seed", "2", "--reveal"
    )
    assert code == 0
    assert "reveal: decoding uses slot" in out
    code, out, _ = _run(capsys, "demo", "--model", "I", "--k", "6", "--m", "1", "--seed", "2")
    assert "reveal" not in out


def test_demo_invalid_parameters_exit_two(capsys):
    code, out, err = _run(capsys, "demo", "--model", "I", "--k", "8", "--m", "9")
    assert code == 2
    assert "M=9" in err and "K=8" in err


def test_demo_extension_field(capsys):
    code, out, _ = _run(
        capsys, "demo", "--model", "II", "--k", "5", "--m", "3", "--q", "5", "--ext", "2"
    )
    assert code == 0 and "result: PASS" in out


# --------------------------------------------------------------------- audit


def test_audit_exact_uniform_cell(capsys):
    code, out, _ = _run(capsys, "audit", "--exact", "--model", "II", "--k", "4", "--m", "2")
    assert code == 0
    report = json.loads(out)
    assert report["uniform"] is True
    assert report["worst_deviation"] == "0"
    assert all(fp["posterior"] == ["1/4"] * 4 for fp in report["fingerprints"])


def test_audit_exact_skewed_cell_exits_one(capsys):
    code, out, _ = _run(capsys, "audit", "--exact", "--model", "I", "--k", "7", "--m", "1")
    assert code == 1
    report = json.loads(out)
    assert report["uniform"] is False
    assert report["worst_deviation"] == "8/91"


def test_audit_exact_oversized_cell_guides_to_mc(capsys):
    code, out, err = _run(capsys, "audit", "--exact", "--model", "I", "--k", "14", "--m", "1")
    assert code == 2
    assert "--mc" in err


def test_audit_mc_honest_and_mutated(capsys):
    base = ("audit", "--mc", "--model", "I", "--k", "5", "--m", "1",
            "--trials", "20000", "--seed", "2")
    code, out, _ = _run(capsys, *base)
    assert code == 0
    report = json.loads(out)
    assert report["passed"] is True and report["mutation"] is None

    code, out, _ = _run(capsys, *base, "--mutation", "unshuffled_sets")
    assert code == 1
    report = json.loads(out)
    assert report["passed"] is False and report["mutation"] == "unshuffled_sets"


def test_audit_rate_cell(capsys):
    code, out, _ = _run(capsys, "audit", "--rate", "--model", "I", "--k", "10", "--m", "4")
    assert code == 0
    report = json.loads(out)
    assert report["elements_downloaded"] == 2
    assert report["measured_rate"] == "1/2" == report["capacity"]
    assert report["matches_capacity"] is True


def test_audit_writes_report_files(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code, out, _ = _run(
        capsys, "audit", "--exact", "--model", "II", "--k", "5", "--m", "2",
        "--out", str(out_path),
    )
    assert code == 0 and out == ""
    report = json.loads(out_path.read_text())
    assert report["mode"] == "exact" and report["uniform"] is True


# --------------------------------------------------------------------- sweep


def test_sweep_model_one(capsys):
    code, out, _ = _run(capsys, "sweep", "--model", "I", "--k-min", "2", "--k-max", "6")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "model,K,M,elements_downloaded,measured_rate,capacity,equal"
    assert len(lines) == 1 + sum(K for K in range(2, 7))
    assert all(line.endswith(",true") for line in lines[1:])


def test_sweep_model_two_rate_pattern(capsys):
    code, out, _ = _run(capsys, "sweep", "--model", "II", "--k-min", "12", "--k-max", "12")
    assert code == 0
    rates = [line.split(",")[4] for line in out.strip().splitlines()[1:]]
    assert rates == ["inf", "1"] + ["1/2"] * 9 + ["1"]


def test_sweep_empty_range(capsys):
    code, out, _ = _run(capsys, "sweep", "--model", "I", "--k-min", "9", "--k-max", "3")
    assert code == 0
    assert out.strip() == "model,K,M,elements_downloaded,measured_rate,capacity,equal"


# ----------------------------------------------------------------------- pmf


def test_pmf_dump_classes(capsys):
    code, out, _ = _run(capsys, "pmf", "dump", "--dist", "classes", "--k", "5", "--m", "1")
    assert code == 0
    payload = json.loads(out)
    assert payload["rounds"] == 3 and payload["duplicates"] == 1
    assert payload["normalizer"] == {"num": "1", "den": "5"}
    table = {(row["s"], row["r"]): (row["p"]["num"], row["p"]["den"]) for row in payload["support"]}
    assert table == {(0, 0): ("1", "5"), (0, 1): ("2", "5"), (1, 0): ("2", "5")}


def test_pmf_dump_cover_distributions(capsys):
    code, out, _ = _run(capsys, "pmf", "dump", "--dist", "disjoint", "--k", "8", "--m", "3")
    assert code == 0
    payload = json.loads(out)
    assert payload["support"] == [
        {"r": 1, "p": {"num": "1", "den": "2"}},
        {"r": 2, "p": {"num": "1", "den": "2"}},
    ]
    code, out, _ = _run(capsys, "pmf", "dump", "--dist", "overlap", "--k", "5", "--m", "3")
    assert code == 0
    payload = json.loads(out)
    assert {row["s"]: row["p"]["num"] for row in payload["support"]} == {0: "1", 1: "4"}


def test_pmf_dump_invalid_cell_exits_two(capsys):
    code, out, err = _run(capsys, "pmf", "dump", "--dist", "disjoint", "--k", "5", "--m", "3")
    assert code == 2
    assert "case 2" in err


# ------------------------------------------------------------------- network


def test_db_gen_and_load(tmp_path, capsys):
    path = tmp_path / "messages.db"
    code, out, _ = _run(
        capsys, "db", "gen", "--k", "6", "--q", "3", "--ext", "2",
        "--seed", "4", "--out", str(path),
    )
    assert code == 0
    assert "36 bytes" in out  # 12-byte header + 6 elements of 4 bytes
    db = Database.load(path)
    assert db.K == 6 and db.params == FieldParams(3, 2)
    # same seed, same file
    path2 = tmp_path / "again.db"
    _run(capsys, "db", "gen", "--k", "6", "--q", "3", "--ext", "2",
         "--seed", "4", "--out", str(path2))
    assert path.read_bytes() == path2.read_bytes()


def test_fetch_against_live_server(tmp_path, capsys):
    path = tmp_path / "messages.db"
    _run(capsys, "db", "gen", "--k", "7", "--q", "5", "--ext", "1",
         "--seed", "1", "--out", str(path))
    db = Database.load(path)
    with wire.PirServer(db, port=0) as server:
        addr = f"{server.address[0]}:{server.address[1]}"
        code, out, _ = _run(
            capsys, "fetch", "--db", str(path), "--addr", addr,
            "--model", "II", "--m", "3", "--seed", "6",
        )
        assert code == 0
        assert "result: PASS" in out
        code, out, _ = _run(
            capsys, "fetch", "--db", str(path), "--addr", addr,
            "--model", "I", "--m", "2", "--seed", "6", "--reveal",
        )
        assert code == 0 and "reveal:" in out


def test_fetch_rejects_mismatched_database(tmp_path, capsys):
    local = tmp_path / "local.db"
    served = tmp_path / "served.db"
    _run(capsys, "db", "gen", "--k", "5", "--q", "3", "--out", str(local))
    _run(capsys, "db", "gen", "--k", "6", "--q", "3", "--out", str(served))
    db = Database.load(served)
    with wire.PirServer(db, port=0) as server:
        addr = f"{server.address[0]}:{server.address[1]}"
        code, out, err = _run(
            capsys, "fetch", "--db", str(local), "--addr", addr,
            "--model", "II", "--m", "2",
        )
        assert code == 2
        assert "does not match" in err


def test_fetch_reports_connection_failures(tmp_path, capsys):
    path = tmp_path / "messages.db"
    _run(capsys, "db", "gen", "--k", "5", "--q", "3", "--out", str(path))
    code, out, err = _run(
        capsys, "fetch", "--db", str(path), "--addr", "127.0.0.1:1",
        "--model", "II", "--m", "2",
    )
    assert code == 1
    assert err.startswith("error:")

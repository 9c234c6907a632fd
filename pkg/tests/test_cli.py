import json

import numpy as np
import pytest

from so3cat.cli import RunConfig, export, load_cells, main, run_suite
from so3cat.modular import classify_invariants, modular_data
from so3cat.preproj import hilbert_closed
from so3cat.qnum import make_context

from conftest import system

SKIP = ["pathalg.phi_q"]


def _failing(rep):
    items = rep["level"]["checks"] + [c for f in rep["families"] for c in f["checks"]]
    return [c["check"] for c in items if c["status"] == "fail"]


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(2, tol=0)
    with pytest.raises(ValueError):
        RunConfig(2, families=["B"])
    with pytest.raises(ValueError):
        RunConfig(2, fmt="xml")
    assert RunConfig(4).families == ["A", "Sigma", "E8", "E8c"]


def test_suite_level_two():
    rep = run_suite(RunConfig(2, families=["A", "Sigma"], skip=SKIP))
    assert rep["schema"] == "so3cat/1"
    assert len(rep["invariants"]) == 2
    assert _failing(rep) == []
    assert rep["passed"]


def test_phi_q_failure_surfaces():
    rep = run_suite(RunConfig(2, families=["A"]))
    assert _failing(rep) == ["pathalg.phi_q"]
    assert not rep["passed"]


def test_suite_level_eight():
    rep = run_suite(RunConfig(4, skip=SKIP))
    assert rep["graphs"] == ["A", "Sigma", "E8", "E8c"]
    assert rep["invariant_classes"] == 4
    assert rep["passed"]
    # t on the double-loop graphs is reported, not counted
    status = {f["family"]: next(c["status"] for c in f["checks"] if c["check"] == "pathalg.t_op")
              for f in rep["families"]}
    assert status == {"A": "pass", "Sigma": "reported", "E8": "pass", "E8c": "reported"}


def test_tiny_tolerance_fails_with_residuals():
    rep = run_suite(RunConfig(1, families=["A"], tol=1e-30))
    assert not rep["passed"]
    bad = [c for c in rep["level"]["checks"] if c["status"] == "fail"]
    assert bad and all(c["value"] is not None for c in bad)


def test_report_deterministic():
    cfg = RunConfig(1, families=["A", "Sigma"], solve=True, restarts=3, seed=5)
    assert export(run_suite(cfg), "json") == export(run_suite(cfg), "json")


def test_report_text_table():
    text = export(run_suite(RunConfig(2, families=["A"], skip=SKIP)), "text").decode()
    assert "invariant" in text and "exponents" in text and "nimrep" in text
    assert "pathalg.tl" in text


def test_modular_json_roundtrip():
    md = modular_data(make_context(3))
    d = json.loads(export(md, "json"))
    S = np.array(d["S"]["re"]) + 1j * np.array(d["S"]["im"])
    assert np.array_equal(S, md.S)
    assert export(md, "json") == export(md, "json")


def test_graph_exports():
    _, g, _, _ = system("E8", 4)
    dot = export(g, "dot").decode()
    assert dot.startswith('digraph "E8_4"') and "phi=" in dot
    rows = export(g, "csv").decode().splitlines()
    assert len(rows) == g.n + 1
    d = json.loads(export(g, "json"))
    assert np.array_equal(d["phi"], g.phi)


def test_cells_roundtrip():
    _, g, _, W = system("Sigma", 2)
    d = json.loads(export(W, "json"))
    assert set(d) == {"schema", "graph", "params", "cells"}
    assert set(d["cells"][0]) == {"loop", "re", "im"}
    W2 = load_cells(export(W, "json"), g)
    assert all(W2.W[k] == v for k, v in W.W.items())


def test_hilbert_and_invariant_exports():
    ctx, g, _, _ = system("A", 2)
    rows = export(hilbert_closed(g, ctx), "csv").decode().splitlines()
    assert rows[0] == "degree,from,to,dim"
    inv = classify_invariants(modular_data(ctx))[0]
    assert json.loads(export(inv, "json"))["Z"] == inv.Z.tolist()
    with pytest.raises(ValueError):
        export(inv, "dot")


def test_main_subcommands(tmp_path, capsysbinary):
    assert main(["graph", "--family", "A", "--m", "2", "--format", "dot"]) == 0
    assert b"digraph" in capsysbinary.readouterr().out
    assert main(["modular", "--m", "3", "--format", "json"]) == 0
    assert json.loads(capsysbinary.readouterr().out)["passed"]
    assert main(["invariants", "--m", "2"]) == 0
    capsysbinary.readouterr()
    out = tmp_path / "c.json"
    assert main(["cells", "--family", "Sigma", "--m", "3", "--theta", "0.3", "--format", "json",
                 "--out", str(out)]) == 0
    assert json.loads(out.read_text())["cells"]["params"]["theta"] == 0.3
    assert main(["solve", "--family", "A", "--m", "2", "--restarts", "3"]) == 0
    assert main(["verify-pathalg", "--family", "E8", "--m", "4", "--depth", "4"]) == 1  # phi_q
    assert main(["hilbert", "--family", "A", "--m", "2", "--both", "--resolution"]) == 0
    assert main(["hilbert", "--family", "E8c", "--m", "4", "--closed", "--format", "csv"]) == 0
    assert main(["all", "--m", "2", "--skip", "pathalg.phi_q"]) == 0
    assert main(["all", "--all-m", "2", "--skip", "pathalg.phi_q", "--format", "json"]) == 0
    capsysbinary.readouterr()

import csv

import pytest

from spikegates.cli import main
from spikegates.config import load_weights

NAND = "circuit mynand;\ninput A, B;\noutput Y;\ng: NAND(A, B) -> Y;\n"


def test_validate_pass_and_fail_codes(capsys, tmp_path):
    assert main(["validate", "and"]) == 0
    assert "PASS" in capsys.readouterr().out
    cfg = tmp_path / "c.txt"
    cfg.write_text("decode.spike_threshold = 50\n")
    assert main(["validate", "and", "--config", str(cfg)]) == 1
    assert main(["validate", "dff", "--current", "7", "--energy-mode", "off"]) == 0


def test_bad_input_code(capsys, tmp_path):
    assert main(["validate", "xor"]) == 2
    assert "error" in capsys.readouterr().err
    bad = tmp_path / "bad.nnl"
    bad.write_text("circuit c;\ninput A;\ng: AND(A) -> Y;\n")
    assert main(["compile", str(bad)]) == 2
    assert "arity" in capsys.readouterr().err


def test_simulate_writes_outputs(tmp_path, capsys):
    stim = tmp_path / "s.txt"
    stim.write_text("input A : 0,0,1,1\ninput B : 0,1,0,1\n")
    out = tmp_path / "out"
    assert main(["simulate", "and", "--stimulus", str(stim), "--out", str(out)]) == 0
    assert "Y: 0001" in capsys.readouterr().out
    rows = list(csv.reader((out / "traces.csv").open()))
    assert len(rows) == 1 + 3 * 4000
    assert (out / "Y.svg").exists()


def test_simulate_netlist_file(tmp_path, capsys):
    f = tmp_path / "n.nnl"
    f.write_text(NAND)
    stim = tmp_path / "s.txt"
    stim.write_text("input A : 0,0,1,1\ninput B : 0,1,0,1\n")
    assert main(["simulate", str(f), "--stimulus", str(stim), "--no-energy"]) == 0
    assert "Y: 1110" in capsys.readouterr().out


def test_compile_report_and_graph(tmp_path, capsys):
    f = tmp_path / "n.nnl"
    f.write_text(NAND)
    g = tmp_path / "g.txt"
    assert main(["compile", str(f), "--emit-graph", str(g), "--report"]) == 0
    out = capsys.readouterr().out
    assert "buffers inserted 1" in out
    assert g.read_text().startswith("circuit mynand")


def test_energy_command(capsys):
    assert main(["energy", "nand", "--gating", "on"]) == 0
    out = capsys.readouterr().out
    assert "eps_norm" in out and "suppressed=0" in out


def test_calibrate_then_validate(tmp_path, capsys):
    w = tmp_path / "w.txt"
    assert main(["calibrate", "--current", "4", "--out", str(w)]) == 0
    assert "w_x=" in capsys.readouterr().out
    ws = load_weights(w)
    assert ws.w_y > ws.w_x
    assert main(["validate", "nand", "--weights", str(w)]) == 0


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0

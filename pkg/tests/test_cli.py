import json

import numpy as np
import pytest

from holoqudit import cli
from holoqudit.synthesis import PI


def _run(tmp_path, *argv):
    return cli.main([*argv, "--report", str(tmp_path / "r.json")] if argv[0] != "synth" else list(argv))


def _csv(path):
    text = open(path).read().splitlines()
    comments = [ln for ln in text if ln.startswith("#")]
    return comments, np.loadtxt(path, delimiter=",", comments="#", skiprows=len(comments) + 1)


@pytest.mark.parametrize(
    "text, value",
    [("0.983pi", 0.983 * PI), ("pi", PI), ("-pi", -PI), ("pi/4", PI / 4), ("0.5*pi", 0.5 * PI), ("1.5", 1.5)],
)
def test_parse_angle(text, value):
    assert cli.parse_angle(text) == pytest.approx(value)


def test_parse_angle_rejects():
    with pytest.raises(cli.ConfigurationError):
        cli.parse_angle("twopi")


def test_synth_z(tmp_path, capsys):
    out = tmp_path / "z.csv"
    assert cli.main(["synth", "--gate", "z", "--tau", "30", "--steps", "3000", "--out", str(out)]) == 0
    comments, data = _csv(out)
    assert comments[0].startswith("# holoqudit ") and comments[1].startswith("# config_hash ")
    assert data.shape == (3001, 5) and not np.any(data[:, 1])
    assert "max drive amplitude" in capsys.readouterr().out


def test_synth_hadamard_eta_override(tmp_path):
    out = tmp_path / "h.csv"
    assert cli.main(["synth", "--gate", "hadamard", "--eta-g", "0.983pi", "--out", str(out)]) == 0
    comments, data = _csv(out)
    assert any("eta_g_override 0.983" in c for c in comments)
    np.testing.assert_allclose(data[:, 4] - data[:, 3], PI, atol=1e-12)


def test_simulate_effective_model(tmp_path):
    out = tmp_path / "t.csv"
    code = _run(tmp_path, "simulate", "--gate", "hadamard", "--initial", "zero", "--no-leak",
                "--gamma1", "0", "--gamma2", "0", "--out", str(out))
    assert code == 0
    rep = json.load(open(tmp_path / "r.json"))
    assert rep["final"]["f_s"] == pytest.approx(1.0, abs=1e-6)
    assert rep["config"]["gamma1_over_2pi_khz"] == 0.0
    assert "wall_time_s" in rep
    with open(out) as fh:
        assert [ln for ln in fh if not ln.startswith("#")][0].strip() == "t_ns,p0,pe,p1,ph,fidelity"


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("gate = hadamard\ntau = 30\nsteps = 400\nn_states = 101\n")
    assert _run(tmp_path, "fidelity", "--config", str(cfg), "--steps", "300") == 0
    rep = json.load(open(tmp_path / "r.json"))
    assert rep["config"]["steps"] == 300 and rep["config"]["gate"] == "hadamard"
    first = rep["gate_fidelity"]["f_g"]
    # replaying the echoed config reproduces the numbers bitwise
    replay = tmp_path / "replay.json"
    assert cli.main(["fidelity", "--config", str(tmp_path / "r.json"), "--report", str(replay)]) == 0
    again = json.load(open(replay))
    assert again["gate_fidelity"]["f_g"] == first
    assert again["config_hash"] == rep["config_hash"]


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("gate = z\nwibble = 3\n")
    assert _run(tmp_path, "fidelity", "--config", str(cfg)) == 1
    assert "wibble" in capsys.readouterr().err


def test_budget_command(tmp_path, capsys):
    assert _run(tmp_path, "budget", "--gate", "z", "--steps", "300", "--n-states", "41") == 0
    rep = json.load(open(tmp_path / "r.json"))
    b = rep["error_budget"]
    assert b["leakage_share"] + b["decoherence_share"] == pytest.approx(100.0)
    assert "leakage_share" in capsys.readouterr().out


def test_optimize_warning_exit_code(tmp_path):
    code = _run(tmp_path, "optimize", "--gate", "z", "--method", "op", "--steps", "300", "--budget", "2",
                "--workers", "1")
    rep = json.load(open(tmp_path / "r.json"))
    assert code == (0 if rep["optimization"]["status"] == "ok" else 2)
    assert rep["optimization"]["evaluations"] == 2


def test_sweep_rows(tmp_path):
    out = tmp_path / "s.csv"
    code = _run(tmp_path, "sweep", "--gate", "hadamard", "--var", "tau", "--from", "20", "--to", "60",
                "--step", "5", "--budget", "2", "--dt", "0.2", "--workers", "1", "--out", str(out))
    assert code in (0, 2)
    comments, data = _csv(out)
    assert data.shape[0] == 9
    np.testing.assert_allclose(data[:, 0], np.arange(20, 61, 5))


def test_unknown_gate(tmp_path):
    cfg = tmp_path / "g.cfg"
    cfg.write_text("gate = cnot\n")
    assert _run(tmp_path, "fidelity", "--config", str(cfg)) == 1

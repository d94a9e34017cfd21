import csv
import json

import numpy as np
import pytest

from holoqudit import metrics
from holoqudit.core import embed_operator
from holoqudit.device import CorrectionParams
from holoqudit.dynamics import TimeGrid
from holoqudit.metrics import (
    SearchConfig,
    _coarse_axes,
    error_budget,
    gate_fidelity,
    jsonable,
    optimize,
    search_space,
    sweep,
    theta_grid,
    unitary_images,
    write_sweep_csv,
)
from holoqudit.synthesis import GATES, PI, GateSpec, target_unitary

COARSE = TimeGrid(30.0, 300)


def test_theta_grid():
    th = theta_grid(1001)
    assert len(th) == 1001 and th[0] == 0 and th[-1] < 2 * PI


def test_exact_channel_scores_one(paper_device):
    gate = GateSpec(1.2, 0.3, 2.0)
    u = embed_operator(target_unitary(gate))
    u[1, 1] = u[3, 3] = 1
    images = unitary_images(u)
    f, leak = metrics.score_channel(images, target_unitary(gate), theta_grid(101))
    np.testing.assert_allclose(f, 1.0, atol=1e-14)
    np.testing.assert_allclose(leak, 0.0, atol=1e-15)
    rep = gate_fidelity(gate, paper_device, images=images)
    assert rep.f_g == pytest.approx(1.0, abs=1e-14)
    assert rep.leakage_rate == pytest.approx(0.0, abs=1e-15)


def test_global_phase_and_theta_refinement(paper_device):
    gate = GATES["hadamard"]
    from holoqudit.dynamics import build_envelope, computational_channel

    env = build_envelope(gate, CorrectionParams(), paper_device, COARSE)
    images = computational_channel(env, paper_device, COARSE)
    base = gate_fidelity(gate, paper_device, images=images)
    shifted = gate_fidelity(gate, paper_device, images=images, target=np.exp(0.77j) * target_unitary(gate))
    assert shifted.f_g == pytest.approx(base.f_g, abs=1e-14)
    doubled = gate_fidelity(gate, paper_device, images=images, n_states=2002)
    assert abs(doubled.f_g - base.f_g) < 1e-5
    assert 0 <= base.leakage_rate <= 1
    assert set(base.f_s_named) == {"zero", "plus"}


def test_budget_without_decoherence(paper_device):
    dev = paper_device.replace(gamma1=0.0, gamma2=0.0)
    b = error_budget(GATES["z"], dev, COARSE)
    assert b.decoherence_share == 0.0
    assert b.leakage_share == pytest.approx(100.0)


def test_budget_shares_sum(paper_device):
    b = error_budget(GATES["hadamard"], paper_device, COARSE)
    assert b.leakage_share + b.decoherence_share == pytest.approx(100.0, abs=1.0)
    assert b.total_infidelity > 0


def test_search_space_drops_idle_drive():
    names, bounds, steps = search_space(GATES["z"], "op")
    assert names == ["beta2", "eta_g"]
    assert bounds["eta_g"] == pytest.approx((0.9 * PI, 1.2 * PI))
    assert steps["beta2"] == 0.05
    assert search_space(GATES["z"], "drag")[0] == ["v1", "v2", "eta_g"]
    assert search_space(GATES["hadamard"], "drag")[0] == ["v1", "v2", "v3", "v4", "eta_g"]
    with pytest.raises(ValueError):
        search_space(GATES["z"], "op", SearchConfig(bounds={"beta1": (0, 1)}))


def test_coarse_axes_fit_allowance():
    names, bounds, steps = search_space(GATES["hadamard"], "drag")
    axes = _coarse_axes(names, bounds, steps, 1000)
    assert np.prod([len(a) for a in axes]) <= 1000
    axes = _coarse_axes(["beta2", "eta_g"], {"beta2": (-0.6, 0.1), "eta_g": (0.9, 1.2)},
                        {"beta2": 0.05, "eta_g": 0.03}, 10**6)
    assert [len(a) for a in axes] == [15, 11]


def test_optimize_contract_and_determinism(paper_device):
    cfg = SearchConfig(budget=40, workers=1)
    a = optimize(GATES["z"], paper_device, "op", COARSE, cfg)
    b = optimize(GATES["z"], paper_device, "op", COARSE, SearchConfig(budget=40, workers=3))
    assert a.best_f_g >= a.baseline_f_g
    assert a.evaluations <= 40
    assert a.status == "ok"
    assert [f for _, f in a.search_trace] == [f for _, f in b.search_trace]
    assert a.best_params == b.best_params
    first = a.search_trace[0][0]
    assert (first.beta1, first.beta2, first.eta_g_override) == (0.0, 0.0, PI)


def test_optimize_warning_status(paper_device):
    cfg = SearchConfig(bounds={"beta2": (0.5, 0.6), "eta_g": (0.5 * PI, 0.55 * PI)}, budget=12, workers=1)
    res = optimize(GATES["z"], paper_device, "op", COARSE, cfg)
    assert res.status == "no-improvement"
    assert res.best_params == CorrectionParams("op", eta_g_override=PI)
    assert res.best_f_g == pytest.approx(res.baseline_f_g)


def test_sweep_rows_and_errors(paper_device, monkeypatch):
    real = metrics.optimize

    def flaky(gate, dev, method, grid, cfg):
        if grid.tau > 35:
            raise RuntimeError("boom")
        return real(gate, dev, method, grid, cfg)

    monkeypatch.setattr(metrics, "optimize", flaky)
    rows = sweep(GATES["z"], paper_device, "op", "tau", [40.0, 20.0], dt=0.1, search_config=SearchConfig(budget=6))
    assert [r.value for r in rows] == [20.0, 40.0]
    assert rows[0].status in ("ok", "no-improvement") and rows[0].opt_f_g >= rows[0].baseline_f_g
    assert rows[1].status == "error" and "boom" in rows[1].error
    with pytest.raises(ValueError):
        sweep(GATES["z"], paper_device, "op", "tau", [-1.0])


def test_sweep_csv_and_json(tmp_path, paper_device):
    rows = sweep(GATES["z"], paper_device, "op", "alpha", [225.0], dt=0.1, search_config=SearchConfig(budget=6))
    path = tmp_path / "s.csv"
    write_sweep_csv(rows, path, ["holoqudit test"])
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rec = list(csv.DictReader(lines))
    assert list(rec[0]) == ["value", "baseline_fg", "opt_fg", "beta1", "beta2", "eta_g_over_pi"]
    assert float(rec[0]["value"]) == 225.0
    json.dumps(jsonable({"rows": rows, "z": np.arange(3) * 1j}))

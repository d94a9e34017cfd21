"""Gate-level scores, error budgets and the correction-parameter search."""

import csv
import itertools
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, is_dataclass

import numpy as np
from scipy.optimize import minimize

from .core import COMPUTATIONAL
from .device import CorrectionParams
from .dynamics import TimeGrid, build_envelope, channel_output, computational_channel
from .synthesis import PI, target_unitary

NAMED_STATES = {"zero": 0.0, "plus": PI / 4}
SWEEP_CSV_HEADER = ("value", "baseline_fg", "opt_fg", "beta1", "beta2", "eta_g_over_pi")


@dataclass(frozen=True)
class GateFidelityReport:
    f_g: float
    f_s_named: dict
    leakage_rate: float
    n_states: int = 1001


@dataclass(frozen=True)
class ErrorBudget:
    total_infidelity: float
    leakage_share: float
    decoherence_share: float
    leakage_infidelity: float = 0.0
    decoherence_infidelity: float = 0.0
    cross_term: float = 0.0


@dataclass(frozen=True)
class OptimizationResult:
    best_params: CorrectionParams
    best_f_g: float
    evaluations: int
    search_trace: tuple
    status: str = "ok"
    baseline_f_g: float = float("nan")
    report: GateFidelityReport = None


@dataclass(frozen=True)
class SearchConfig:
    """Box, coarse step and budget for ``optimize``.

    ``bounds``/``steps`` override the defaults per parameter name
    (``beta1``, ``beta2``, ``v1``..``v4``, ``eta_g``). At most
    ``grid_fraction * budget`` evaluations go to the coarse scan.
    """

    bounds: dict = field(default_factory=dict)
    steps: dict = field(default_factory=dict)
    budget: int = 2000
    grid_fraction: float = 0.5
    n_states: int = 41
    workers: int = None
    xatol: float = 1e-4
    fatol: float = 1e-7

    def __post_init__(self):
        if self.budget < 2:
            raise ValueError("budget must allow at least two evaluations")
        for name, (lo, hi) in self.bounds.items():
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ValueError(f"bad bounds for {name}: {(lo, hi)}")


def theta_grid(n_states):
    # endpoint excluded: Theta = 0 and 2 pi are the same state
    return np.linspace(0.0, 2 * PI, int(n_states), endpoint=False)


def score_channel(images, target, thetas):
    """Per-Theta fidelity and leakage for inputs cos(T)|0> + sin(T)|1>."""
    c, s = np.cos(thetas), np.sin(thetas)
    rho = channel_output(images, c, s)
    ideal = np.zeros((len(thetas), 4), dtype=np.complex128)
    ideal[:, list(COMPUTATIONAL)] = (target @ np.stack([c, s])).T
    f = np.real(np.einsum("ni,nij,nj->n", ideal.conj(), rho, ideal))
    leak = np.real(rho[:, 1, 1] + rho[:, 3, 3])
    return np.clip(f, 0.0, 1.0), np.clip(leak, 0.0, 1.0)


def gate_fidelity(gate, device, correction=None, grid=None, n_states=1001, include_leak=True,
                  images=None, target=None):
    """Mean fidelity over the real-amplitude input family.

    ``images`` bypasses the simulation with precomputed channel images (see
    ``computational_channel``); ``target`` overrides the ideal 2x2 gate.
    """
    correction = correction or CorrectionParams()
    grid = grid or TimeGrid(30.0)
    if images is None:
        env = build_envelope(gate, correction, device, grid)
        images = computational_channel(env, device, grid, include_leak)
    target = target_unitary(gate) if target is None else np.asarray(target)
    f, leak = score_channel(images, target, theta_grid(n_states))
    named_f, _ = score_channel(images, target, np.array(list(NAMED_STATES.values())))
    return GateFidelityReport(
        f_g=float(np.mean(f)),
        f_s_named=dict(zip(NAMED_STATES, map(float, named_f))),
        leakage_rate=float(np.mean(leak)),
        n_states=int(n_states),
    )


def error_budget(gate, device, grid=None, correction=None, n_states=1001):
    """Split the total infidelity into leakage and decoherence shares (percent).

    Isolated infidelities come from a decoherence-free run (leakage only) and
    a leak-free run (decoherence only); their difference from the full-model
    infidelity is folded in proportionally, so the shares are the isolated
    ratios.
    """
    total = 1 - gate_fidelity(gate, device, correction, grid, n_states).f_g
    leak = 1 - gate_fidelity(gate, device.replace(gamma1=0.0, gamma2=0.0), correction, grid, n_states).f_g
    if device.gamma1 == 0 and device.gamma2 == 0:
        deco = 0.0
    else:
        deco = 1 - gate_fidelity(gate, device, correction, grid, n_states, include_leak=False).f_g
    leak, deco = max(leak, 0.0), max(deco, 0.0)
    norm = leak + deco
    if norm <= 0:
        shares = (0.0, 0.0)
    else:
        shares = (100 * leak / norm, 100 * deco / norm)
    return ErrorBudget(total, shares[0], shares[1], leak, deco, total - norm)


def _worker_count(workers):
    if workers:
        return int(workers)
    env = os.environ.get("HOLO_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def search_space(gate, method, config=None):
    """Active parameter names with their (lo, hi) boxes and coarse steps.

    Weights of a drive that is identically zero for this gate are dropped.
    """
    config = config or SearchConfig()
    drive0 = math.sin(gate.theta / 2) > 1e-12
    drive1 = math.cos(gate.theta / 2) > 1e-12
    if method == "op":
        names = [n for n, on in (("beta1", drive0), ("beta2", drive1)) if on]
        box, step = (-0.6, 0.1), 0.05
    elif method == "drag":
        names = [n for n, on in (("v1", drive1), ("v2", drive1), ("v3", drive0), ("v4", drive0)) if on]
        box, step = (-6.0, 6.0), 0.5
    else:
        raise ValueError(f"unknown method {method!r}")
    bounds = {n: box for n in names}
    steps = {n: step for n in names}
    names.append("eta_g")
    bounds["eta_g"] = (gate.gamma - 0.1 * PI, gate.gamma + 0.2 * PI)
    steps["eta_g"] = 0.01 * PI
    unknown = (set(config.bounds) | set(config.steps)) - set(names)
    if unknown:
        raise ValueError(f"parameters not searched for this gate/method: {sorted(unknown)}")
    bounds.update({k: tuple(map(float, v)) for k, v in config.bounds.items()})
    steps.update({k: float(v) for k, v in config.steps.items()})
    return names, bounds, steps


def params_from_vector(method, names, x):
    values = dict(zip(names, map(float, x)))
    eta_g = values.pop("eta_g")
    return CorrectionParams(kind=method, eta_g_override=eta_g, **values)


def _coarse_axes(names, bounds, steps, allowed):
    counts = [max(1, int(round((bounds[n][1] - bounds[n][0]) / steps[n])) + 1) for n in names]
    scale = 1.0
    shrunk = counts
    while math.prod(shrunk) > allowed:
        scale *= 0.95
        shrunk = [max(2 if c > 1 else 1, int(c * scale)) for c in counts]
        if all(s <= 2 for s in shrunk):
            break
    return [np.linspace(bounds[n][0], bounds[n][1], c) for n, c in zip(names, shrunk)]


def optimize(gate, device, method, grid=None, search_config=None):
    """Coarse grid scan followed by bounded Nelder-Mead from the best point.

    The uncorrected gate (all weights zero, eta_g = gamma) is always the first evaluation, so the result never
    falls below it. Scan candidates are scored concurrently; ordering of the
    trace does not depend on the worker count.
    """
    grid = grid or TimeGrid(30.0)
    cfg = search_config or SearchConfig()
    names, bounds, steps = search_space(gate, method, cfg)
    trace = []

    def score(params):
        return gate_fidelity(gate, device, params, grid, cfg.n_states).f_g

    # zero weights at eta_g = gamma: the uncorrected pulse, in this method's terms
    baseline_params = CorrectionParams(kind=method, eta_g_override=gate.gamma)
    baseline = score(baseline_params)
    trace.append((baseline_params, baseline))

    axes = _coarse_axes(names, bounds, steps, max(1, int(cfg.grid_fraction * cfg.budget) - 1))
    candidates = [params_from_vector(method, names, x) for x in itertools.product(*axes)]
    candidates = candidates[: cfg.budget - 1]
    with ThreadPoolExecutor(_worker_count(cfg.workers)) as pool:
        scores = list(pool.map(score, candidates))
    trace.extend(zip(candidates, scores))

    remaining = cfg.budget - len(trace)
    if remaining > len(names) + 1:
        best_idx = 1 + int(np.argmax(scores))
        x0 = np.array([_param_value(trace[best_idx][0], n) for n in names])
        lo = np.array([bounds[n][0] for n in names])
        hi = np.array([bounds[n][1] for n in names])
        spacing = np.array([(a[1] - a[0]) / 2 if len(a) > 1 else steps[n] for a, n in zip(axes, names)])
        simplex = [x0]
        for k in range(len(names)):
            x = x0.copy()
            x[k] = x[k] + spacing[k] if x[k] + spacing[k] <= hi[k] else x[k] - spacing[k]
            simplex.append(x)

        def objective(x):
            params = params_from_vector(method, names, np.clip(x, lo, hi))
            f = score(params)
            trace.append((params, f))
            return -f

        minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=list(zip(lo, hi)),
            options={
                "maxfev": remaining,
                "initial_simplex": np.array(simplex),
                "xatol": cfg.xatol,
                "fatol": cfg.fatol,
            },
        )

    best_params, best_search = max(trace, key=lambda item: item[1])
    status = "ok" if best_search > baseline + 1e-12 else "no-improvement"
    if status != "ok":
        best_params = baseline_params
    report = gate_fidelity(gate, device, best_params, grid)
    return OptimizationResult(
        best_params=best_params,
        best_f_g=report.f_g,
        evaluations=len(trace),
        search_trace=tuple(trace),
        status=status,
        baseline_f_g=gate_fidelity(gate, device, baseline_params, grid).f_g,
        report=report,
    )


def _param_value(params, name):
    return params.eta_g_override if name == "eta_g" else getattr(params, name)


@dataclass(frozen=True)
class SweepRow:
    value: float
    baseline_f_g: float = float("nan")
    opt_f_g: float = float("nan")
    best_params: CorrectionParams = None
    status: str = "ok"
    error: str = None
    seconds: float = 0.0


def sweep(gate, device, method, variable, values, dt=0.01, search_config=None, grid=None):
    """One optimization per value of ``tau`` (ns) or ``alpha`` (alpha/2pi in MHz).

    The grid step is held near ``dt``; for an alpha sweep the tau of ``grid``
    (default 30 ns) is kept. A failing row records its error and the sweep
    moves on.
    """
    if variable not in ("tau", "alpha"):
        raise ValueError("variable must be 'tau' or 'alpha'")
    values = sorted(float(v) for v in values)
    if not all(math.isfinite(v) and v > 0 for v in values):
        raise ValueError("sweep values must be finite and positive")
    base_grid = grid or TimeGrid.from_dt(30.0, dt)
    rows = []
    for value in values:
        t0 = time.perf_counter()
        try:
            if variable == "tau":
                g, dev = TimeGrid.from_dt(value, dt), device
            else:
                g = base_grid
                dev = device.replace(alpha=2 * PI * value * 1e-3, omega_levels=None)
            res = optimize(gate, dev, method, g, search_config)
            rows.append(SweepRow(value, res.baseline_f_g, res.best_f_g, res.best_params, res.status,
                                 seconds=time.perf_counter() - t0))
        except Exception as exc:  # reported per row
            rows.append(SweepRow(value, status="error", error=f"{type(exc).__name__}: {exc}",
                                 seconds=time.perf_counter() - t0))
    return rows


def write_sweep_csv(rows, path, comments=(), method="op"):
    header = list(SWEEP_CSV_HEADER) + (["v1", "v2", "v3", "v4"] if method == "drag" else [])
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            p = r.best_params
            if p is None:
                w.writerow([repr(r.value)] + [""] * (len(header) - 1))
                continue
            eta = p.eta_g_override / PI if p.eta_g_override is not None else ""
            line = [repr(r.value), repr(r.baseline_f_g), repr(r.opt_f_g), repr(p.beta1), repr(p.beta2), repr(eta)]
            if method == "drag":
                line += [repr(v) for v in p.drag_weights]
            w.writerow(line)


def jsonable(obj):
    """Recursively turn dataclasses and numpy values into JSON-ready data."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": obj.real.tolist(), "im": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def unitary_images(u):
    """Channel images for a closed-system propagator (no simulation)."""
    i0, i1 = COMPUTATIONAL
    kets = u[:, [i0, i1]]
    out = np.empty((3, 4, 4), dtype=np.complex128)
    out[0] = np.outer(kets[:, 0], kets[:, 0].conj())
    out[1] = np.outer(kets[:, 1], kets[:, 1].conj())
    out[2] = np.outer(kets[:, 0], kets[:, 1].conj())
    return out


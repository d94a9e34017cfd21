"""``holo`` command line: synth, simulate, fidelity, budget, optimize, sweep.

Every option can also come from a ``key = value`` config file (``--config``);
keys are the long option names with dashes or underscores. Flags given on the
command line win over the file. A JSON report written by a previous run is
accepted as a config as well, which replays the run exactly.
"""

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__, kernels
from .core import ValidationError, embed_computational
from .device import ConfigurationError, CorrectionParams, DeviceParams, read_key_values
from .dynamics import IntegrationError, TimeGrid, build_envelope, evolve_lindblad, evolve_unitary
from .metrics import SearchConfig, error_budget, gate_fidelity, jsonable, optimize, sweep, write_sweep_csv
from .synthesis import GATES, PI, GateSpec, SynthesisError, dynamical_phase, make_invariant_schedule, synthesize, target_unitary

EXIT_OK, EXIT_ERROR, EXIT_WARNING = 0, 1, 2

DEFAULTS = {
    "gate": "z",
    "theta": None,
    "phi": None,
    "gamma": None,
    "preset": "paper-sim",
    "alpha_over_2pi_mhz": None,
    "gamma1_over_2pi_khz": None,
    "gamma2_over_2pi_khz": None,
    "omega0_ghz": None,
    "omega1_ghz": None,
    "omega2_ghz": None,
    "tau": 30.0,
    "steps": 3000,
    "correction": "none",
    "v1": 0.0,
    "v2": 0.0,
    "v3": 0.0,
    "v4": 0.0,
    "beta1": 0.0,
    "beta2": 0.0,
    "eta_g": None,
    "initial": "plus",
    "no_leak": False,
    "n_states": 1001,
    "method": "op",
    "budget": 2000,
    "workers": None,
    "var": "tau",
    "from": None,
    "to": None,
    "step": None,
    "values": None,
    "dt": 0.01,
    "out": None,
    "report": None,
}

ANGLE_KEYS = ("theta", "phi", "gamma", "eta_g")
FLOAT_KEYS = (
    "alpha_over_2pi_mhz", "gamma1_over_2pi_khz", "gamma2_over_2pi_khz", "omega0_ghz", "omega1_ghz",
    "omega2_ghz", "tau", "v1", "v2", "v3", "v4", "beta1", "beta2", "from", "to", "step", "dt",
)
INT_KEYS = ("steps", "n_states", "budget", "workers")


def parse_angle(text):
    """Radians from '0.983pi', '-pi', 'pi/4' or a plain number."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower().replace(" ", "")
    try:
        if "pi" not in s:
            return float(s)
        head, _, tail = s.partition("pi")
        coef = {"": 1.0, "-": -1.0, "+": 1.0}.get(head.rstrip("*"))
        coef = float(head.rstrip("*")) if coef is None else coef
        if tail:
            if not tail.startswith("/"):
                raise ValueError
            coef /= float(tail[1:])
        return coef * PI
    except ValueError:
        raise ConfigurationError(f"cannot parse angle {text!r}") from None


def _coerce(key, value):
    if value is None or key not in DEFAULTS:
        return value
    if key in ANGLE_KEYS:
        return parse_angle(value)
    if key in FLOAT_KEYS:
        return float(value)
    if key in INT_KEYS:
        return int(value)
    if key == "no_leak":
        return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes", "on")
    if key == "values" and isinstance(value, str):
        return [float(v) for v in value.replace(",", " ").split()]
    return value


def load_config_file(path):
    if path.endswith(".json"):
        with open(path) as fh:
            data = json.load(fh)
        data = data.get("config", data)
    else:
        data = read_key_values(path)
    cfg = {}
    for key, value in data.items():
        k = key.replace("-", "_")
        if k not in DEFAULTS:
            raise ConfigurationError(f"unknown config key {key!r}")
        cfg[k] = value
    return cfg


def resolve_config(args):
    """Defaults <- config file <- explicit flags, all coerced to internal types."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(load_config_file(args.config))
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            cfg[key] = value
    return {k: _coerce(k, v) for k, v in cfg.items()}


def config_hash(cfg):
    """Digest of everything that affects the numbers (output paths excluded)."""
    numeric = {k: v for k, v in cfg.items() if k not in ("out", "report")}
    blob = json.dumps(jsonable(numeric), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def gate_from(cfg):
    if cfg["theta"] is not None:
        gamma = cfg["gamma"] if cfg["gamma"] is not None else PI
        return GateSpec(cfg["theta"], cfg["phi"] or 0.0, gamma)
    if cfg["gate"] not in GATES:
        raise ConfigurationError(f"unknown gate {cfg['gate']!r}; use {sorted(GATES)} or --theta")
    return GATES[cfg["gate"]]


def device_from(cfg):
    units = DeviceParams.preset(cfg["preset"]).to_units()
    for key in units.keys() | {"omega0_ghz", "omega1_ghz", "omega2_ghz"}:
        if cfg.get(key) is not None:
            units[key] = cfg[key]
    return DeviceParams.from_mapping(units)


def correction_from(cfg):
    kind = cfg["correction"]
    kw = {"kind": kind, "eta_g_override": cfg["eta_g"]}
    if kind == "drag":
        kw.update(v1=cfg["v1"], v2=cfg["v2"], v3=cfg["v3"], v4=cfg["v4"])
    elif kind == "op":
        kw.update(beta1=cfg["beta1"], beta2=cfg["beta2"])
    return CorrectionParams(**kw)


def initial_from(cfg):
    name = cfg["initial"]
    if name == "plus":
        return np.array([1.0, 1.0]) / np.sqrt(2)
    if name == "zero":
        return np.array([1.0, 0.0])
    try:
        parts = [complex(p.replace(" ", "")) for p in str(name).split(",")]
    except ValueError:
        raise ConfigurationError(f"initial state {name!r}: use plus, zero or 'a,b'") from None
    if len(parts) != 2:
        raise ConfigurationError("explicit initial state needs two amplitudes")
    return np.array(parts)


def _header(cfg, extra=()):
    return [f"holoqudit {__version__}", f"config_hash {config_hash(cfg)}", *extra]


def _write_report(path, cfg, run, payload):
    report = {
        "tool": "holoqudit",
        "version": __version__,
        "command": run["command"],
        "backend": kernels.BACKEND,
        "config": jsonable(cfg),
        "config_hash": config_hash(cfg),
        "wall_time_s": time.perf_counter() - run["started"],
        **jsonable(payload),
    }
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
    return report


def cmd_synth(cfg, run):
    gate = gate_from(cfg)
    eta_g = cfg["eta_g"]
    pulse = synthesize(gate, cfg["tau"], cfg["steps"], eta_g)
    gamma_d = dynamical_phase(make_invariant_schedule(gate, cfg["tau"], cfg["steps"], eta_g), gate)
    out = cfg["out"] or "pulse.csv"
    extra = [f"theta {gate.theta!r} phi {gate.phi!r} gamma {gate.gamma!r}", f"eta_g {pulse.eta_g!r}"]
    if eta_g is not None:
        extra.append(f"eta_g_override {eta_g / PI:.6g}pi")
    pulse.to_csv(out, _header(cfg, extra))
    print(f"wrote {out}")
    print(f"max drive amplitude: {pulse.max_amplitude() / (2 * PI) * 1e3:.4f} MHz (Omega/2pi)")
    print(f"dynamical phase residual: {gamma_d:.3e} rad")
    return EXIT_OK


def cmd_simulate(cfg, run):
    gate, device = gate_from(cfg), device_from(cfg)
    grid = TimeGrid(cfg["tau"], cfg["steps"])
    correction = correction_from(cfg)
    q = initial_from(cfg)
    psi0 = embed_computational(q)
    ideal = embed_computational(target_unitary(gate) @ np.asarray(psi0)[[0, 2]])
    env = build_envelope(gate, correction, device, grid)
    include_leak = not cfg["no_leak"]
    traj = evolve_lindblad(np.outer(psi0, np.conj(psi0)), env, device, grid, include_leak, ideal)
    out = cfg["out"] or "trajectory.csv"
    traj.to_csv(out, _header(cfg))
    dec = evolve_unitary(env, device, grid, include_leak, gate)
    pops = traj.populations[-1]
    payload = {
        "final": {
            "f_s": float(traj.fidelity[-1]),
            "leakage": float(pops[1] + pops[3]),
            "populations": dict(zip(("p0", "pe", "p1", "ph"), map(float, pops))),
        },
        "closed_system": {"delta": dec.delta, "subspace_leakage": dec.subspace_leakage},
    }
    _write_report(cfg["report"] or "report.json", cfg, run, payload)
    print(f"wrote {out}; final F_s = {traj.fidelity[-1]:.6f}, leakage = {pops[1] + pops[3]:.3e}")
    return EXIT_OK


def cmd_fidelity(cfg, run):
    gate, device = gate_from(cfg), device_from(cfg)
    grid = TimeGrid(cfg["tau"], cfg["steps"])
    rep = gate_fidelity(gate, device, correction_from(cfg), grid, cfg["n_states"], not cfg["no_leak"])
    _write_report(cfg["report"] or "report.json", cfg, run, {"gate_fidelity": rep})
    named = ", ".join(f"F_s({k}) = {v:.6f}" for k, v in rep.f_s_named.items())
    print(f"F_g = {rep.f_g:.6f}; {named}; leakage = {rep.leakage_rate:.3e}")
    return EXIT_OK


def cmd_budget(cfg, run):
    gate, device = gate_from(cfg), device_from(cfg)
    grid = TimeGrid(cfg["tau"], cfg["steps"])
    budget = error_budget(gate, device, grid, correction_from(cfg), cfg["n_states"])
    _write_report(cfg["report"] or "report.json", cfg, run, {"error_budget": budget})
    print(
        f"total infidelity = {budget.total_infidelity:.5f}; leakage_share = {budget.leakage_share:.2f}%; "
        f"decoherence_share = {budget.decoherence_share:.2f}%"
    )
    return EXIT_OK


def _search_config(cfg):
    return SearchConfig(budget=cfg["budget"], workers=cfg["workers"])


def cmd_optimize(cfg, run):
    gate, device = gate_from(cfg), device_from(cfg)
    grid = TimeGrid(cfg["tau"], cfg["steps"])
    res = optimize(gate, device, cfg["method"], grid, _search_config(cfg))
    payload = {
        "optimization": {
            "best_params": res.best_params,
            "best_f_g": res.best_f_g,
            "baseline_f_g": res.baseline_f_g,
            "evaluations": res.evaluations,
            "status": res.status,
            "search_trace": [{"params": p, "f_g": f} for p, f in res.search_trace],
        },
        "gate_fidelity": res.report,
    }
    _write_report(cfg["report"] or "report.json", cfg, run, payload)
    p = res.best_params
    eta = p.eta_g_override / PI if p.eta_g_override is not None else gate.gamma / PI
    weights = f"beta1={p.beta1:.4f} beta2={p.beta2:.4f}" if p.kind == "op" else "v=" + ",".join(
        f"{v:.3f}" for v in p.drag_weights
    )
    print(f"best F_g = {res.best_f_g:.6f} (baseline {res.baseline_f_g:.6f}); {weights} eta_g={eta:.4f}pi")
    print(f"evaluations = {res.evaluations}; status = {res.status}")
    return EXIT_OK if res.status == "ok" else EXIT_WARNING


def _sweep_values(cfg):
    if cfg["values"]:
        return cfg["values"]
    lo, hi, step = cfg["from"], cfg["to"], cfg["step"]
    if None in (lo, hi, step) or step <= 0 or hi < lo:
        raise ConfigurationError("sweep needs --values or --from/--to/--step with step > 0")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + k * step for k in range(n)]


def cmd_sweep(cfg, run):
    gate, device = gate_from(cfg), device_from(cfg)
    values = _sweep_values(cfg)
    grid = TimeGrid.from_dt(cfg["tau"], cfg["dt"])
    rows = sweep(gate, device, cfg["method"], cfg["var"], values, cfg["dt"], _search_config(cfg), grid)
    out = cfg["out"] or "sweep.csv"
    write_sweep_csv(rows, out, _header(cfg, [f"var {cfg['var']}"]), cfg["method"])
    _write_report(cfg["report"] or "report.json", cfg, run, {"sweep": rows})
    for r in rows:
        if r.error:
            print(f"{cfg['var']}={r.value:g}: {r.error}", file=sys.stderr)
        else:
            print(f"{cfg['var']}={r.value:g}: baseline {r.baseline_f_g:.5f} -> {r.opt_f_g:.5f} ({r.status})")
    print(f"wrote {out}")
    return EXIT_OK if all(r.status == "ok" for r in rows) else EXIT_WARNING


COMMANDS = {
    "synth": cmd_synth,
    "simulate": cmd_simulate,
    "fidelity": cmd_fidelity,
    "budget": cmd_budget,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file (or a previous JSON report)")
    g = common.add_argument_group("gate")
    g.add_argument("--gate", choices=sorted(GATES))
    g.add_argument("--theta", help="explicit gate: polar angle of the axis (e.g. 0.25pi)")
    g.add_argument("--phi", help="explicit gate: azimuth of the axis")
    g.add_argument("--gamma", help="explicit gate: rotation angle (default pi)")
    d = common.add_argument_group("device")
    d.add_argument("--preset", choices=("paper-sim", "experiment"))
    d.add_argument("--alpha-over-2pi-mhz", "--alpha", dest="alpha_over_2pi_mhz")
    d.add_argument("--gamma1-over-2pi-khz", "--gamma1", dest="gamma1_over_2pi_khz")
    d.add_argument("--gamma2-over-2pi-khz", "--gamma2", dest="gamma2_over_2pi_khz")
    for k in (0, 1, 2):
        d.add_argument(f"--omega{k}-ghz", dest=f"omega{k}_ghz")
    t = common.add_argument_group("grid and correction")
    t.add_argument("--tau", help="gate time in ns")
    t.add_argument("--steps", help="integration steps (even, >= 100)")
    t.add_argument("--correction", choices=("none", "drag", "op"))
    for k in (1, 2, 3, 4):
        t.add_argument(f"--v{k}")
    t.add_argument("--beta1")
    t.add_argument("--beta2")
    t.add_argument("--eta-g", dest="eta_g", help="spin-echo phase, e.g. 0.983pi")
    t.add_argument("--no-leak", dest="no_leak", action="store_const", const=True)
    t.add_argument("--n-states", dest="n_states")
    o = common.add_argument_group("output")
    o.add_argument("--out", help="CSV output path")
    o.add_argument("--report", help="JSON report path")
    o.add_argument("--workers", help="parallel evaluations (default: HOLO_WORKERS or CPU count)")

    parser = argparse.ArgumentParser(prog="holo", description="Holonomic qudit gate simulator")
    parser.add_argument("--version", action="version", version=f"holoqudit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="write the drive pulses as CSV")
    sp = sub.add_parser("simulate", parents=[common], help="trajectory for one initial state")
    sp.add_argument("--initial", help="plus, zero or explicit 'a,b'")
    sub.add_parser("fidelity", parents=[common], help="gate fidelity over the input family")
    sub.add_parser("budget", parents=[common], help="leakage/decoherence error budget")
    for name in ("optimize", "sweep"):
        p = sub.add_parser(name, parents=[common], help=f"{name} correction parameters")
        p.add_argument("--method", choices=("op", "drag"))
        p.add_argument("--budget", help="evaluations per optimization (default 2000)")
    sw = sub.choices["sweep"]
    sw.add_argument("--var", choices=("tau", "alpha"), help="tau in ns or alpha/2pi in MHz")
    sw.add_argument("--from", dest="from")
    sw.add_argument("--to")
    sw.add_argument("--step")
    sw.add_argument("--values", help="comma separated list instead of --from/--to/--step")
    sw.add_argument("--dt", help="target step size in ns (default 0.01)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    run = {"command": args.command, "started": time.perf_counter()}
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, run)
    except (ConfigurationError, ValidationError, SynthesisError, IntegrationError, OSError) as exc:
        print(f"holo {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

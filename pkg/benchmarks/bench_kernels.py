"""Compare the compiled and numpy kernels on the workloads the package runs.

    python3 benchmarks/bench_kernels.py [--steps 3000] [--repeat 5]

Workloads: the three-matrix channel integration behind every gate-fidelity
evaluation, a single recorded trajectory, and the ordered product used by
the unitary path. Results are checked for agreement before timing.
"""

import argparse
import json
import time

import numpy as np

from holoqudit import kernels
from holoqudit.device import CorrectionParams, DeviceParams
from holoqudit.dynamics import LindbladModel, TimeGrid, build_envelope, hamiltonian_stack, step_propagators
from holoqudit.synthesis import GATES


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(n_steps):
    dev = DeviceParams.preset("paper-sim")
    grid = TimeGrid(30.0, n_steps)
    env = build_envelope(GATES["hadamard"], CorrectionParams(), dev, grid)
    hams = hamiltonian_stack(env, dev)
    jumps = LindbladModel.of(dev).jumps()
    basis = np.zeros((3, 4, 4), dtype=np.complex128)
    basis[0, 0, 0] = basis[1, 2, 2] = basis[2, 0, 2] = 1.0
    steps = step_propagators(hams, grid.dt)
    return {
        "channel (3 matrices)": lambda b: kernels.lindblad_rk4(hams, basis, grid.dt, jumps, backend=b),
        "trajectory (recorded)": lambda b: kernels.lindblad_rk4(hams, basis[:1], grid.dt, jumps, True, backend=b),
        "ordered product": lambda b: kernels.ordered_product(steps, backend=b),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=3000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)

    try:
        from holoqudit import _ckernels  # noqa: F401
    except ImportError:
        print("compiled extension not built; only the numpy backend is available")
        return 1

    rows = []
    for name, run in workloads(args.steps).items():
        ref, fast = run("python"), run("cython")
        err = float(np.max(np.abs(ref - fast)))
        t_py = best_of(lambda: run("python"), args.repeat)
        t_c = best_of(lambda: run("cython"), args.repeat)
        rows.append({"workload": name, "python_s": t_py, "cython_s": t_c, "speedup": t_py / t_c, "max_diff": err})

    print(f"steps={args.steps}, best of {args.repeat}")
    print(f"{'workload':24s} {'numpy [ms]':>11s} {'cython [ms]':>12s} {'speedup':>8s} {'max diff':>9s}")
    for r in rows:
        print(
            f"{r['workload']:24s} {1e3 * r['python_s']:11.2f} {1e3 * r['cython_s']:12.2f} "
            f"{r['speedup']:7.1f}x {r['max_diff']:9.1e}"
        )
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"steps": args.steps, "repeat": args.repeat, "results": rows}, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

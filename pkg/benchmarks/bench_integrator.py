"""Wall-clock comparison of the compiled and pure-Python integrator kernels.

Usage::

    python benchmarks/bench_integrator.py [--repeat 5] [--t 100]

Both kernels integrate the same two-cell X-state under collective
dissipation; the script reports the best time per backend, the step count
and the largest entry-wise difference between the final states.
"""
import argparse
import time

import numpy as np

from twmbattery import BathParams, build_model, x_state
from twmbattery.integrator import compiled_evolve, python_evolve


def best_time(evolve, model, rho0, t, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        result = evolve(rho0, model.Heff, model.jumps, t, 1e-10, 1e-12, 1_000_000)
        best = min(best, time.perf_counter() - start)
    return best, result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--t", type=float, default=100.0, help="integration time")
    parser.add_argument("--cells", type=int, default=2)
    args = parser.parse_args(argv)

    model = build_model(args.cells, 1.0, None, BathParams(0.01, 0.3))
    rho0 = x_state(0.9) if args.cells == 2 else np.eye(model.dim, dtype=complex) / model.dim
    backends = {"python": python_evolve}
    if compiled_evolve is not None:
        backends["compiled"] = compiled_evolve
    else:
        print("compiled extension not built; timing the python kernel only")

    results = {}
    for name, evolve in backends.items():
        elapsed, out = best_time(evolve, model, rho0, args.t, args.repeat)
        results[name] = (elapsed, out)
        print(f"{name:>9}: {elapsed * 1e3:9.2f} ms  ({out[1]} steps)")
    if len(results) == 2:
        (tp, (rp, _)), (tc, (rc, _)) = results["python"], results["compiled"]
        print(f"  speedup: {tp / tc:9.1f}x")
        print(f" max diff: {np.max(np.abs(rp - rc)):9.1e}")


if __name__ == "__main__":
    main()

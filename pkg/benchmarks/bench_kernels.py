"""Compare the compiled and pure-Python kernels on the hot paths.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times one log-likelihood evaluation, a 2000-sweep Metropolis chain and a
short AIS run on Exp-1-sized synthetic data, and checks that both backends
return the same numbers.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from perspective_rsa._kernels import load_backend
from perspective_rsa.bda.model import PHI_HI, PHI_LO, ModelSpec, Theta, build_tables
from perspective_rsa.bda.sampling import N_MOVES, _kernel_scales, geometric_ladder
from perspective_rsa.bda.synthetic import generate_trials


def best_of(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    theta = Theta(5.0, 1.0, 0.01, 0.1, 0.2)
    tables = build_tables(generate_trials(theta, ModelSpec("occlusion_sensitive"), np.random.default_rng(0)))
    spec = ModelSpec()
    phi = theta.to_phi()
    free = spec.free.astype(np.uint8)
    scales = _kernel_scales(0.05, 2.0)
    factors = np.array([1.0, 0.1, 0.01])
    rng = np.random.default_rng(1)
    n = 2000
    normals, uniforms = rng.standard_normal((n, N_MOVES)), rng.random((n, N_MOVES))
    steps = 500
    ladder = geometric_ladder(steps)
    an, au = rng.standard_normal((steps - 1, N_MOVES)), rng.random((steps - 1, N_MOVES))

    backends = {"python": load_backend("python")}
    try:
        backends["cython"] = load_backend("cython")
    except ImportError:
        print("compiled kernels unavailable; timing the fallback only")

    cases = {
        "loglik x100": lambda k: [tables.loglik(phi, k) for _ in range(100)][-1],
        f"mh_chain {n} sweeps": lambda k: k.mh_chain(tables.as_tuple(), phi, free, scales, PHI_LO, PHI_HI,
                                                    normals, uniforms, 1.0, factors)[1][-1],
        f"ais_run {steps} steps": lambda k: k.ais_run(tables.as_tuple(), phi, free, scales, PHI_LO, PHI_HI,
                                                     ladder, an, au, factors)[0],
    }
    print(f"{'case':<22s}" + "".join(f"{b:>14s}" for b in backends) + f"{'speedup':>10s}  agree")
    for name, fn in cases.items():
        times, vals = {}, {}
        for b, k in backends.items():
            times[b], vals[b] = best_of(lambda: fn(k), args.repeat)
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        agree = all(abs(v - vals["python"]) < 1e-6 for v in vals.values())
        print(f"{name:<22s}" + "".join(f"{times[b] * 1e3:>12.2f}ms" for b in backends) + f"{speed:>9.1f}x  {agree}")


if __name__ == "__main__":
    main()

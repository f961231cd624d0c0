"""Benchmark the hot sampling kernels: compiled core vs NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--n 2000] [--m 5] [--M 100] [--L 10]
"""

import argparse
import time

import numpy as np

from rffmargin.kernels import available_backends
from rffmargin.rff_dpmm import project_trig


def build_problem(n, m, n_freq, seed=0):
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((m, n))
    omegas = rng.standard_normal((n_freq, m))
    bc = 0.3 * rng.standard_normal(n_freq) / np.sqrt(n_freq)
    bs = 0.3 * rng.standard_normal(n_freq) / np.sqrt(n_freq)
    A = np.eye(m) + np.diag(rng.uniform(0.5, 2.0, m))
    pprec = np.empty((n_freq, m, m))
    for j in range(n_freq):
        pprec[j] = np.eye(m)
    return {
        "H": H,
        "omegas": omegas,
        "bc": bc,
        "bs": bs,
        "bbias": 0.1,
        "y": rng.choice([-1.0, 1.0], n),
        "lam": rng.uniform(0.4, 2.0, n),
        "C": 1.0,
        "A": A,
        "B": rng.standard_normal((m, n)),
        "pmean": rng.standard_normal((n_freq, m)) * 0.1,
        "pprec": pprec,
        "mom_h": rng.standard_normal((m, n)),
        "u_h": rng.random(n),
        "mom_o": rng.standard_normal((n_freq, m)),
        "u_o": rng.random(n_freq),
    }


def time_call(fn, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(n, m, n_freq, leapfrog):
    problem = build_problem(n, m, n_freq)
    backends = available_backends()
    results = {}
    for name, impl in backends.items():
        p = problem

        def h_block():
            impl.h_block_update(
                p["H"], p["A"], p["B"], p["omegas"], p["bc"], p["bs"], p["bbias"],
                p["y"], p["lam"], p["C"], 0.05, leapfrog, p["mom_h"], p["u_h"],
            )

        def omega_block():
            cosP, sinP = project_trig(p["omegas"], p["H"])
            impl.omega_block_update(
                p["omegas"], cosP, sinP, p["H"], p["bc"], p["bs"], p["bbias"],
                p["y"], p["lam"], p["C"], p["pmean"], p["pprec"], 0.05, leapfrog,
                p["mom_o"], p["u_o"],
            )

        def single_potentials():
            for j in range(64):
                impl.omega_potential_grad(
                    p["omegas"][j % n_freq], p["pmean"][0], p["pprec"][0], p["H"],
                    p["lam"] * 0, p["bc"][0], p["bs"][0], p["y"], p["lam"], p["C"],
                )

        results[name] = {
            "h_block": time_call(h_block),
            "omega_block": time_call(omega_block),
            "single_potentials_x64": time_call(single_potentials),
        }
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=2000, help="instances")
    parser.add_argument("--m", type=int, default=5, help="latent dimension")
    parser.add_argument("--M", type=int, default=100, help="frequencies")
    parser.add_argument("--L", type=int, default=10, help="leapfrog steps")
    args = parser.parse_args()

    results = run(args.n, args.m, args.M, args.L)
    names = sorted(results)
    print(f"n={args.n} m={args.m} M={args.M} L={args.L}")
    header = f"{'kernel':<24}" + "".join(f"{name:>14}" for name in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for kernel in ("h_block", "omega_block", "single_potentials_x64"):
        row = f"{kernel:<24}"
        times = [results[name][kernel] for name in names]
        for t in times:
            row += f"{t * 1e3:>12.2f}ms"
        if len(times) == 2:
            slow, fast = max(times), min(times)
            row += f"{slow / fast:>9.1f}x"
        print(row)
    if len(names) == 1:
        print("(compiled core not built; only the NumPy fallback was timed)")


if __name__ == "__main__":
    main()

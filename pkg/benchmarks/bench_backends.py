#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-NumPy fallback.

Times the two hot kernels (wage-curve marching, unemployment-spell
mixture quadrature) and one end-to-end equilibrium solve per backend.

Run from the repository root after an editable install:
    python3 benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import time

import numpy as np

import searchgap as sg
from searchgap._backend import available_backends


def time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--grid", type=int, default=2000)
    parser.add_argument("--spells", type=int, default=300)
    args = parser.parse_args()

    backends = available_backends()
    if len(backends) < 2:
        print("compiled extension not built; only the pure backend is available")

    params = sg.SegmentParams.from_values(
        lam=0.07, delta=0.005, mu=60.0, sigma=10.0, p_min=50.0, alpha=2.1
    )
    prod = params.productivity
    p = np.geomspace(prod.p_min, prod.p_cut, args.grid)
    sf = prod.sf(p)
    sf[0] = 1.0
    sq = (1.0 + params.frictions.k * sf) ** 2
    w_low = sg.lowest_wage(prod.p_min, params.reservation)

    rng = np.random.default_rng(0)
    t = rng.uniform(1.0, 200.0, args.spells)
    grid = np.linspace(40.0, 250.0, 512)
    fbar = np.linspace(1.0, 0.0, 512) ** 2
    nodes, weights = np.polynomial.legendre.leggauss(64)
    upper = rng.uniform(45.0, 240.0, args.spells)
    half = (upper - 40.0) / 2.0
    node_b = (upper[:, None] + 40.0) / 2.0 + half[:, None] * nodes[None, :]
    pos = np.clip((node_b - grid[0]) / (grid[1] - grid[0]), 0.0, grid.size - 1.0)
    idx = np.minimum(pos.astype(np.int64), grid.size - 2)
    frac = pos - idx

    timings = {}
    for name, mod in backends.items():
        march = time_call(
            lambda m=mod: m.march_wage_curve(p, sq, params.frictions.k, 60.0, 10.0, w_low),
            args.repeats,
        )
        quad = time_call(
            lambda m=mod: m.lu_mixture_integrals(
                t, node_b, idx, frac, half, weights, fbar, 0.07, 14.0, 60.0, 10.0
            ),
            args.repeats,
        )
        timings[name] = (march, quad)

    print(f"{'kernel':<28}" + "".join(f"{n:>14}" for n in timings))
    rows = [("march_wage_curve", 0), ("lu_mixture_integrals", 1)]
    for label, j in rows:
        print(f"{label:<28}" + "".join(f"{timings[n][j] * 1e3:>12.3f}ms" for n in timings))
    if len(timings) == 2:
        py, comp = timings["python"], timings["compiled"]
        print(f"{'speedup (python/compiled)':<28}"
              f"{py[0] / comp[0]:>13.1f}x{py[1] / comp[1]:>13.1f}x")

    solve = time_call(lambda: sg.solve_equilibrium(params), args.repeats)
    print(f"\nfull equilibrium solve on active backend ({sg.BACKEND}): {solve * 1e3:.1f} ms")


if __name__ == "__main__":
    main()

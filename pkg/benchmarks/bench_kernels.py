#!/usr/bin/env python3
"""Benchmark the hot kernels on the numba path vs the pure-numpy fallback.

Usage:
    python benchmarks/bench_kernels.py            # time the current mode
    python benchmarks/bench_kernels.py --both     # also time the other mode
                                                  # in a subprocess and print
                                                  # a side-by-side table

The mode is selected by the QNETOPT_NO_NUMBA environment variable; results
are bit-identical between modes because kernels consume only pre-drawn
randomness.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from qnetopt._accel import accel_mode
from qnetopt.cd import three_node_path, random_tree_edges, CdNetwork, simulate as cd_simulate
from qnetopt.forest import RfSettings, fit_forest
from qnetopt.qes import QesTopology, BrightStateConfig, simulate as qes_simulate
from qnetopt.svr import SvrSettings, fit_svr


def timeit(fn, repeat=3):
    fn()  # warm-up (JIT compile on the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench():
    results = {}

    topo = QesTopology(link_lengths=(2.0, 2.0, 2.0), server_index=0)
    cfg = BrightStateConfig((0.4, 0.35, 0.35))

    def qes_case():
        for seed in range(20):
            qes_simulate(topo, cfg, np.random.default_rng(seed))

    results["qes event walk (20 runs, ~40k events)"] = timeit(qes_case)

    small = three_node_path()
    big = CdNetwork.from_edges(random_tree_edges(50, seed=3), users="leaves")

    def cd_small():
        for seed in range(20):
            cd_simulate(small, [0.3, 0.5, 0.5], np.random.default_rng(seed))

    def cd_big():
        cd_simulate(big, np.full(50, 0.5), np.random.default_rng(0))

    results["cd slotted run, 3 nodes (20 x 1000 slots)"] = timeit(cd_small)
    results["cd slotted run, 50-node tree (1000 slots)"] = timeit(cd_big)

    rng = np.random.default_rng(0)
    X = rng.random((300, 8))
    y = np.sin(X.sum(axis=1)) + 0.1 * rng.standard_normal(300)

    def rf_fit():
        fit_forest(X, y, RfSettings(n_trees=50), np.random.default_rng(1))

    head = fit_forest(X, y, RfSettings(n_trees=50), np.random.default_rng(1))
    Q = rng.random((10_000, 8))

    def rf_predict():
        head.predict_batch(Q)

    results["rf fit (300 rows, 8 dims, 50 trees)"] = timeit(rf_fit)
    results["rf predict (10k rows, 50 trees)"] = timeit(rf_predict)

    def svr_fit():
        fit_svr(X, y, SvrSettings(c=10.0, epsilon=0.05))

    results["svr fit (300 rows, 8 dims)"] = timeit(svr_fit)
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--both", action="store_true", help="compare against the other mode")
    parser.add_argument("--json", action="store_true", help="print machine-readable results")
    args = parser.parse_args()

    results = bench()
    if args.json:
        print(json.dumps({"mode": accel_mode(), "seconds": results}))
        return

    if not args.both:
        print(f"kernel path: {accel_mode()}")
        for name, sec in results.items():
            print(f"  {name:<46} {sec * 1e3:9.2f} ms")
        return

    env = dict(os.environ)
    env["QNETOPT_NO_NUMBA"] = "" if accel_mode() == "numpy" else "1"
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--json"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    other = json.loads(proc.stdout)
    print(f"{'kernel':<46} {accel_mode():>10} {other['mode']:>10} {'speedup':>9}")
    for name, sec in results.items():
        osec = other["seconds"][name]
        ratio = osec / sec if accel_mode() == "numba" else sec / osec
        print(f"{name:<46} {sec * 1e3:8.2f}ms {osec * 1e3:8.2f}ms {ratio:8.1f}x")


if __name__ == "__main__":
    main()

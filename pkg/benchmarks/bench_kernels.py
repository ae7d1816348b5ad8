"""Compare the numba and pure-numpy kernels, and whole runs under each backend.

    python3 benchmarks/bench_kernels.py [--tests 500] [--repeats 5]

Kernel timings call both kernel modules directly in this process. Whole-run
timings start one subprocess per backend, because the backend is fixed at
import time by ``L2NSGA_BACKEND``.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from l2nsga import _kernels_numba, _kernels_numpy
from l2nsga.linkage import gene_distances

RUN_SNIPPET = """
import json, time
from l2nsga import _backend
from l2nsga.engine import RunConfig, run
from l2nsga.instance import generate_synthetic
inst = generate_synthetic({n}, {n} * 10, {n} * 5, seed=1)
run(RunConfig(max_evaluations=300, algorithm="l2nsga"), inst)  # warm-up / JIT
out = {{}}
for algo in ("nsga2", "l2nsga"):
    t = time.perf_counter()
    run(RunConfig(max_evaluations={evals}, algorithm=algo), inst)
    out[algo] = time.perf_counter() - t
print(json.dumps({{"backend": _backend.name, **out}}))
"""


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def kernel_cases(n, rng):
    F = rng.random((2 * 100, 3))
    X = rng.random((100, n)) < 0.5
    cost = rng.random(n)
    D = gene_distances(X).astype(np.float64)
    merges, _, _ = _kernels_numba.upgma_merges(D)
    chosen = np.zeros((100, 2 * n - 1), dtype=bool)
    for row in chosen:
        row[rng.choice(2 * n - 2, n - 1, replace=False)] = True
    return {
        "nondominated_ranks (200x3)": lambda k: k.nondominated_ranks(F),
        f"selected_cost_sums (100x{n})": lambda k: k.selected_cost_sums(X, cost),
        f"upgma_merges ({n}x{n})": lambda k: k.upgma_merges(D),
        f"tree_unions (100 rows, {n} genes)": lambda k: k.tree_unions(chosen, merges, n),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tests", type=int, default=500)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--evals", type=int, default=5000, help="budget of each whole run")
    ap.add_argument("--skip-runs", action="store_true")
    args = ap.parse_args(argv)

    cases = kernel_cases(args.tests, np.random.default_rng(0))
    for fn in cases.values():
        fn(_kernels_numba)  # compile outside the timed region
    print(f"{'kernel':38s} {'numba ms':>10s} {'numpy ms':>10s} {'speed-up':>9s}")
    for label, fn in cases.items():
        a = best_of(lambda: fn(_kernels_numba), args.repeats) * 1e3
        b = best_of(lambda: fn(_kernels_numpy), args.repeats) * 1e3
        print(f"{label:38s} {a:10.3f} {b:10.3f} {b / a:8.1f}x")

    if args.skip_runs:
        return
    print(f"\nwhole runs: {args.tests} tests, {args.evals} evaluations")
    code = RUN_SNIPPET.format(n=args.tests, evals=args.evals)
    for backend in ("numba", "numpy"):
        env = dict(os.environ, L2NSGA_BACKEND=backend)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        res = json.loads(out.stdout.strip().splitlines()[-1])
        print(f"  {res['backend']:6s} nsga2 {res['nsga2']:7.2f}s   l2nsga {res['l2nsga']:7.2f}s")


if __name__ == "__main__":
    main()

"""Time the compiled and pure-Python kernels on the same random instance.

    python3 benchmarks/bench_kernels.py --sizes 8 10 12 --k 3

Besides wall time per stage, each row reports whether the two backends
produced bit-identical tables.
"""

import argparse
import time

import numpy as np

from bnexact import engine, kernels
from bnexact.model import assemble_B
from bnexact.scoring import family_masks, tables_from_arrays


def _instance(n, k, seed):
    rng = np.random.default_rng(seed)
    tables = tables_from_arrays(n, k, [rng.normal(0.0, 3.0, len(family_masks(n, i, k)))
                                       for i in range(n)])
    return assemble_B(tables)


def _stages(B, backend, repeats):
    out = {}

    def run(name, fn):
        best, value = float("inf"), None
        for _ in range(repeats):
            t = time.perf_counter()
            value = fn()
            best = min(best, time.perf_counter() - t)
        out[name] = best
        return value

    A = run("A", lambda: engine.compute_A(B, backend))
    RR = run("RR", lambda: engine.compute_RR(A, backend=backend))
    H = run("H", lambda: engine.compute_H(A, backend=backend))
    K = run("K_0", lambda: engine.compute_K(0, RR, A, backend=backend))
    return out, (A, RR, H, K)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[8, 10, 12])
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    backends = kernels.available()
    if "cython" not in backends:
        print("compiled kernels are not built; only the Python backend is available")
    print(f"{'n':>3} {'stage':>5} " + " ".join(f"{b:>10}" for b in backends)
          + ("    speedup" if len(backends) > 1 else ""))
    for n in args.sizes:
        B = _instance(n, min(args.k, n - 1), args.seed)
        timings, tables = {}, {}
        for b in backends:
            timings[b], tables[b] = _stages(B, b, args.repeats)
        for stage in timings[backends[0]]:
            row = f"{n:>3} {stage:>5} " + " ".join(f"{timings[b][stage]:>9.4f}s" for b in backends)
            if len(backends) > 1:
                row += f" {timings['python'][stage] / timings['cython'][stage]:>10.1f}x"
            print(row)
        if len(backends) > 1:
            same = all(np.array_equal(x, y) for x, y in zip(tables["cython"], tables["python"]))
            print(f"{n:>3} bit-identical: {same}")


if __name__ == "__main__":
    main()

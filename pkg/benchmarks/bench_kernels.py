"""Time the numba and numpy engines on the same workloads.

    python3 benchmarks/bench_kernels.py [--paths 20000] [--steps 4096] [--repeat 3]

Reports the best of ``--repeat`` runs after one warm-up (which also triggers
JIT compilation), and checks that both engines produce the same stop indices.
"""

import argparse
import time

import numpy as np

from negcall import economy, kernels
from negcall._accel import HAS_NUMBA
from negcall.pathgen import GridSpec, make_grid


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--steps", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    if not HAS_NUMBA:
        print("numba is not installed; only the numpy engine can run")
    engines = ("numba", "numpy") if HAS_NUMBA else ("numpy",)

    grid = make_grid(GridSpec("uniform_qv", args.steps, 40.0))
    hedge_grid = make_grid(GridSpec("uniform_t", args.steps))
    coeffs = economy.step_coefficients(grid)
    ids = np.arange(args.paths)
    nodes = economy.default_record_nodes(grid)
    a = economy.ATM_CALL.level
    dt = hedge_grid.dt

    workloads = {
        "normals": lambda e: kernels.normals(args.seed, ids, kernels.STREAM_BROWNIAN, args.steps, engine=e),
        "market_paths": lambda e: kernels.market_paths(args.seed, ids, coeffs, a, nodes, True, engine=e),
        "hedge_terminal": lambda e: kernels.hedge_terminal(args.seed, ids, np.sqrt(dt), dt, hedge_grid.t[:-1], economy.ATM_CALL, economy.ATM_CALL.initial_price, engine=e),
    }

    n_el = args.paths * args.steps
    print(f"paths={args.paths} steps={args.steps} repeat={args.repeat}")
    print(f"{'workload':<16}" + "".join(f"{e:>14}" for e in engines) + ("     speedup" if len(engines) == 2 else ""))
    for name, fn in workloads.items():
        row, outs = [], {}
        for e in engines:
            sec, outs[e] = best_of(lambda: fn(e), args.repeat)
            row.append(sec)
        line = f"{name:<16}" + "".join(f"{s:12.3f} s" for s in row)
        if len(engines) == 2:
            line += f"  {row[1] / row[0]:9.1f}x"
        print(line + f"   ({n_el / row[0] / 1e6:.1f} M steps/s)")
        if name == "market_paths" and len(engines) == 2:
            same = np.array_equal(outs["numba"][3], outs["numpy"][3])
            print(f"{'':<16}stop indices identical across engines: {same}")


if __name__ == "__main__":
    main()

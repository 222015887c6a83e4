"""Time the per-plane energy/gradient kernels: numba vs numpy.

The kernel microbenchmark runs both backends in one process (both are
always importable; only the default dispatch follows HYBRID_NLS_BACKEND).
The optional end-to-end section runs one full ground-state solve per
backend in a subprocess with the environment flag set, since the solver
binds its kernel at import time.

Usage:
    python benchmarks/bench_kernels.py [--sizes 512,2048,8192]
                                       [--repeats 200] [--end-to-end]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from hybrid_nls import _kernels
from hybrid_nls.energy import plane_data
from hybrid_nls.grid import make_grid


def _best_of(fn, args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(sizes: list[int], repeats: int) -> None:
    rng = np.random.default_rng(0)
    print(f"{'N':>6}  {'kernel':<8}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for n in sizes:
        # halve the grading excess as n doubles past the default 2048 so
        # the first geometric cell keeps a sensible size
        grading = 1.0 + 0.01 * min(1.0, 2048.0 / n)
        grid = make_grid(40.0, n, grading)
        pd = plane_data(grid, 1.0)
        phi = np.exp(-grid.r) * (1.0 + 0.1 * rng.standard_normal(grid.n_nodes))
        phi[0] = phi[1]
        phi[-1] = 0.0
        q = 0.7
        gphi = np.zeros_like(phi)
        common = (phi, q, pd["G"], 3.0, 1.0, 0.0 + pd["theta"], pd["gl2"],
                  grid.w_trapz, pd["w_in"], grid.c_h1, pd["lagw"], pd["g0"],
                  pd["area0"])
        jobs = [("energy", _kernels.plane_energy_numpy,
                 _kernels.plane_energy_numba, common),
                ("grad", _kernels.plane_energy_grad_numpy,
                 _kernels.plane_energy_grad_numba, (*common, gphi))]
        for label, f_np, f_nb, args in jobs:
            if f_nb is not None:
                f_nb(*args)  # compile before timing
                agree = np.allclose(f_np(*args)[0], f_nb(*args)[0],
                                    rtol=1e-12, atol=0.0)
                if not agree:
                    raise SystemExit("backends disagree — benchmark aborted")
            t_np = _best_of(f_np, args, repeats)
            if f_nb is None:
                print(f"{n:>6}  {label:<8}  {t_np * 1e6:>8.1f}us  "
                      f"{'n/a':>10}  {'n/a':>8}")
                continue
            t_nb = _best_of(f_nb, args, repeats)
            print(f"{n:>6}  {label:<8}  {t_np * 1e6:>8.1f}us  "
                  f"{t_nb * 1e6:>8.1f}us  {t_np / t_nb:>7.1f}x")


_E2E_SNIPPET = """
import time
from hybrid_nls import _kernels
from hybrid_nls.energy import HybridParams
from hybrid_nls.solver import SolverConfig, solve_hybrid
P = HybridParams(3.0, 3.0, 0.0, 1.0, 1.0, 1.0)
cfg = SolverConfig()
solve_hybrid(P, cfg)  # warm caches (and the JIT, if active)
t0 = time.perf_counter()
r = solve_hybrid(P, cfg)
dt = time.perf_counter() - t0
print(f"{_kernels.BACKEND}: {dt:.3f}s  energy={r.energy:.9g} "
      f"converged={r.converged}")
"""


def bench_end_to_end() -> None:
    print("\nfull solve at the default grid (subprocess per backend):")
    for backend in ("numba", "numpy"):
        env = dict(os.environ, HYBRID_NLS_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, "-c", _E2E_SNIPPET],
            env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            print(f"{backend}: failed\n{proc.stderr.strip()}")
            continue
        print("  " + proc.stdout.strip())


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="512,2048,8192")
    ap.add_argument("--repeats", type=int, default=200)
    ap.add_argument("--end-to-end", action="store_true",
                    help="also time one full solve per backend")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",") if s]
    if not _kernels.HAS_NUMBA:
        print("note: numba not importable; timing the numpy path only")
    bench_kernels(sizes, args.repeats)
    if args.end_to_end:
        bench_end_to_end()


if __name__ == "__main__":
    main()

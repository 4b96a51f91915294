"""Compare the numba kernels with their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel is warmed up once (numba compiles on first call), then timed on
both paths; outputs are checked for equality.  The double-gyre integrator is
compiled at import time, so its fallback is timed in a child process started
with ``APPROXVB_DISABLE_NUMBA=1``.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from approxvb import clifford
from approxvb._accel import USE_NUMBA
from approxvb.complex import vr_filtration
from approxvb.persistence import persistent_cohomology


def best_of(fn, repeat: int) -> tuple[float, object]:
    out = fn()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(name, make, repeat, same):
    t_nb, out_nb = best_of(lambda: make(True), repeat)
    t_np, out_np = best_of(lambda: make(False), repeat)
    ok = "ok" if same(out_nb, out_np) else "MISMATCH"
    print(f"{name:<28} numba {t_nb * 1e3:9.2f} ms   numpy {t_np * 1e3:9.2f} ms   x{t_np / t_nb:6.1f}   {ok}")


def gyre_child_seconds(disable: bool) -> float:
    code = ("import time; from approxvb.ingest import gen_double_gyre; gen_double_gyre(n_samples=20, t_end=1.0); "
            "t=time.perf_counter(); gen_double_gyre(n_samples=2000, t_end=100.0); print(time.perf_counter()-t)")
    env = dict(os.environ, APPROXVB_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not USE_NUMBA:
        sys.exit("numba is disabled or missing; nothing to compare")
    rng = np.random.default_rng(0)

    X = rng.standard_normal((120, 4))
    D = np.linalg.norm(X[:, None] - X[None], axis=2)
    th = float(np.quantile(D, 0.3))
    F = vr_filtration(D, 3, th)
    print(f"VR complex: {len(F.complex)} simplices up to dimension 3")

    def same_filtration(a, b):
        return all(np.array_equal(x, y) for x, y in zip(a.complex.simplices[1:], b.complex.simplices[1:])) and all(
            np.array_equal(x, y) for x, y in zip(a.births, b.births))

    bench("clique expansion", lambda nb: vr_filtration(D, 3, th, use_numba=nb), args.repeat, same_filtration)

    def bars(dg):
        return [(b.degree, b.birth, b.death) for b in dg.bars]

    for p in (2, 3):
        bench(f"column reduction (Z/{p})", lambda nb, p=p: persistent_cohomology(F, p, 2, use_numba=nb),
              args.repeat, lambda a, b: bars(a) == bars(b))

    for d in (2, 3, 4):
        L = np.array([clifford.random_spin(d, rng).value.coeffs for _ in range(2000)])
        tri = rng.integers(0, 2000, size=(100_000, 3))
        bench(f"spin triple products d={d}", lambda nb, L=L, tri=tri, d=d: clifford.triple_scalar_parts(L, tri, d, nb),
              args.repeat, lambda a, b: np.allclose(a, b, atol=1e-12))

    t_nb, t_np = gyre_child_seconds(False), gyre_child_seconds(True)
    print(f"{'double-gyre RK4':<28} numba {t_nb * 1e3:9.2f} ms   numpy {t_np * 1e3:9.2f} ms   x{t_np / t_nb:6.1f}")


if __name__ == "__main__":
    main()

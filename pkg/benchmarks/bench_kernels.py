"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--size 256] [--repeat 5]

Times each block-operator kernel and one full reconstruction per backend and
checks that both backends give the same numbers.
"""
import argparse
import importlib
import time

import numpy as np

from adaptive_cs import _kernels_py, kernels, solver
from adaptive_cs.patching import PatchGrid
from adaptive_cs.sensing import gen_stage_matrix, measure_stage


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--patch", type=int, default=8)
    ap.add_argument("--m", type=int, default=9)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    try:
        compiled = importlib.import_module("adaptive_cs._kernels")
    except ImportError:
        print("compiled extension not built; only the numpy backend is available")
        compiled = None
    backends = {"numpy": _kernels_py}
    if compiled is not None:
        backends["compiled"] = compiled

    rng = np.random.default_rng(0)
    n = args.size
    x = rng.uniform(0, 255, (n, n))
    grid = PatchGrid.for_shape(x.shape, args.patch)
    phi = gen_stage_matrix(0, 1, args.m, grid.n, grid.patch_count)
    idx = np.arange(grid.patch_count)
    y = rng.standard_normal((grid.patch_count, args.m))
    print(f"image {n}x{n}, p={args.patch}, m={args.m}, {grid.patch_count} patches, best of {args.repeat}")

    results = {}
    for name, impl in backends.items():
        out = np.zeros_like(x)
        grad = np.zeros_like(x)
        t_fwd = best_of(lambda: kernels.block_forward(x, args.patch, phi.entries, idx, impl=impl), args.repeat)
        t_adj = best_of(lambda: kernels.block_adjoint_add(y, args.patch, phi.entries, idx, out, impl=impl), args.repeat)
        t_grad = best_of(lambda: kernels.data_term_grad(x, args.patch, phi.entries, idx, y, grad, impl=impl), args.repeat)
        results[name] = (
            kernels.block_forward(x, args.patch, phi.entries, idx, impl=impl),
            t_fwd,
            t_adj,
            t_grad,
        )
        print(f"{name:>9}: forward {t_fwd * 1e3:8.2f} ms  adjoint {t_adj * 1e3:8.2f} ms  grad {t_grad * 1e3:8.2f} ms")

    if len(results) == 2:
        diff = np.abs(results["numpy"][0] - results["compiled"][0]).max()
        speed = [results["numpy"][k] / results["compiled"][k] for k in (1, 2, 3)]
        print(f"max |numpy - compiled| forward = {diff:.2e}; speedup x{speed[0]:.1f} / x{speed[1]:.1f} / x{speed[2]:.1f}")

    # end to end: one stage-1 solve, kernel choice swapped via the module global
    ms = measure_stage(phi, x, idx)
    cfg = solver.SolverConfig(max_iters=100, rel_tol=1e-12)
    images = {}
    saved = kernels._impl
    try:
        for name, impl in backends.items():
            kernels._impl = impl
            t0 = time.perf_counter()
            images[name] = solver.reconstruct([ms], [phi], grid, cfg).image
            print(f"{name:>9}: reconstruct (100 iterations) {time.perf_counter() - t0:6.2f} s")
    finally:
        kernels._impl = saved
    if len(images) == 2:
        print(f"max |numpy - compiled| reconstruction = {np.abs(images['numpy'] - images['compiled']).max():.2e}")


if __name__ == "__main__":
    main()

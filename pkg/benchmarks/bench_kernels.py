"""Compiled vs numpy timings for the two hot kernels.

    python benchmarks/bench_kernels.py [--repeat 5] [--points 8192]

Prints one CSV row per (kernel, backend): best wall time over the repeats
and the speedup of the compiled kernel.  Results of the two backends are
compared before timing.
"""
import argparse
import sys
import timeit

import numpy as np

from mfelab import _kernels_py
from mfelab.sphere_grid import _flat_to_AB, default_grid, recurrence_tables

try:
    from mfelab import _kernels
except ImportError:
    _kernels = None


def _eval_case(n_points, seed=0):
    g = default_grid()
    rng = np.random.default_rng(seed)
    A, B = _flat_to_AB(rng.normal(size=g.n_coeffs), g.L)
    pts = rng.normal(size=(n_points, 3))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    return (A, B, pts, *recurrence_tables(g.L))


def _label_case():
    # sign pattern of a smooth field on a 4x refined grid, like a reflection field
    g = default_grid()
    nt, nph = 4 * g.n_theta, 4 * g.n_phi
    th = np.linspace(0, np.pi, nt)[:, None]
    ph = np.linspace(0, 2 * np.pi, nph, endpoint=False)[None, :]
    f = np.cos(3 * th) * np.sin(2 * ph) + 0.3 * np.cos(5 * ph + 0.4) * np.sin(th)
    return (np.sign(f).astype(np.int8),)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--points", type=int, default=8192)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1

    cases = {
        "eval_sh": (_eval_case(args.points), (False,)),
        "eval_sh+grad": (_eval_case(args.points), (True,)),
        "label_sphere_grid": (_label_case(), ()),
    }
    print("kernel,backend,seconds,speedup")
    for name, (inputs, extra) in cases.items():
        fn = name.split("+")[0]
        res_c = getattr(_kernels, fn)(*inputs, *extra)
        res_p = getattr(_kernels_py, fn)(*inputs, *extra)
        if fn == "eval_sh":
            assert np.allclose(res_c[0], res_p[0], atol=1e-11)
        else:
            assert res_c[1] == res_p[1]
        times = {}
        for backend, mod in (("cython", _kernels), ("python", _kernels_py)):
            f = getattr(mod, fn)
            times[backend] = min(timeit.repeat(lambda: f(*inputs, *extra), number=1,
                                               repeat=args.repeat))
        for backend in ("cython", "python"):
            sp = times["python"] / times[backend]
            print(f"{name},{backend},{times[backend]:.6f},{sp:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Compiled kernels against the numpy fallback.

Times each kernel on representative inputs with both implementations, then
runs a full Legendre solve and a fourth-order solve under each by toggling
``PHASEKIT_PURE_PYTHON`` in a subprocess (the dispatch is fixed at import).

    python3 benchmarks/bench_kernels.py [--repeats 200]
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from phasekit import _kernels_py as pyk
from phasekit.chebkit import cheb_nodes, integration_matrix
from phasekit.odesolve import NEWTON_MAXIT, NEWTON_STALL_TOL, NEWTON_TOL
from phasekit.riccati import riccati_system

try:
    from phasekit import _kernels as cyk
except ImportError:
    cyk = None

K = 16


def kernel_cases(rng):
    g = cheb_nodes(K, (0.0, 0.05))
    S = integration_matrix(g)
    cases = {}

    B = rng.standard_normal((K, K)) + 1j * rng.standard_normal((K, K))
    rhs = rng.standard_normal(K) + 0j
    cases["truncated_lsq k=16"] = ("truncated_lsq", (B, rhs, 1e-13))

    A = (rng.standard_normal((4, 4)) + 0j)[None] * (1 + g.nodes)[:, None, None]
    f = rng.standard_normal((K, 4)) + 0j
    uc = rng.standard_normal(4) + 0j
    cases["linear_local m=4"] = ("linear_local", (S, A, f, uc))

    for n, w in ((2, 40.0), (4, 12.0)):
        roots = 1j * w * np.array([1, -1, 2, -2][:n])
        q = np.tile(np.poly(roots)[::-1][:n], (K, 1)).astype(complex)
        sys_ = riccati_system(n)
        w0 = np.zeros(n - 1, dtype=complex)
        w0[0] = 1j * w * (1 + 1e-3)
        cases[f"riccati_local n={n}"] = ("riccati_local", (
            S, np.asarray(g.nodes), q, w0, sys_.coef, sys_.qidx, sys_.exps,
            NEWTON_MAXIT, NEWTON_TOL, NEWTON_STALL_TOL))
    return cases


def time_call(fn, args, repeats):
    return min(timeit.repeat(lambda: fn(*args), number=repeats, repeat=5)) / repeats


SOLVE_SNIPPET = """
import json, sys, time, warnings
warnings.simplefilter("ignore")
from phasekit import kernels
from phasekit.problems import make_problem, solve_problem
out = {"impl": kernels.IMPLEMENTATION}
for name, p in (("legendre", 2 ** 10), ("fourth-order", 2 ** 6)):
    spec = make_problem(name, p)
    solve_problem(spec)
    t0 = time.perf_counter()
    for _ in range(3):
        solve_problem(spec)
    out[f"{name} {p}"] = (time.perf_counter() - t0) / 3
print(json.dumps(out))
"""


def end_to_end(pure):
    env = dict(os.environ, PHASEKIT_PURE_PYTHON="1" if pure else "0")
    proc = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args(argv)

    if cyk is None:
        print("compiled extension not built; only the numpy fallback is available")
        return 1

    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'numpy (us)':>12}{'cython (us)':>13}{'speedup':>9}")
    for label, (name, call_args) in kernel_cases(rng).items():
        tp = time_call(getattr(pyk, name), call_args, args.repeats)
        tc = time_call(getattr(cyk, name), call_args, args.repeats)
        print(f"{label:<22}{1e6 * tp:>12.1f}{1e6 * tc:>13.1f}{tp / tc:>9.2f}")

    print()
    py, cy = end_to_end(pure=True), end_to_end(pure=False)
    print(f"{'full solve':<22}{'numpy (ms)':>12}{'cython (ms)':>13}{'speedup':>9}")
    for key in py:
        if key == "impl":
            continue
        print(f"{key:<22}{1e3 * py[key]:>12.1f}{1e3 * cy[key]:>13.1f}{py[key] / cy[key]:>9.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

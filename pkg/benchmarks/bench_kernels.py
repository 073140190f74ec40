"""Compare the compiled multiplier kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 32 48 64] [--repeat 5]

Prints the best-of-``repeat`` time per call for each kernel and backend,
the speed-up, and the maximum deviation between the two outputs.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from nsc import _fallback
from nsc.spectral_core import Grid3

try:
    from nsc import _kernels as compiled
except ImportError:  # pragma: no cover - extension not built
    compiled = None


def _cases(n: int, rng: np.random.Generator):
    g = Grid3(n)
    xi = np.ascontiguousarray(g.xi_flat)
    m = xi.shape[1]
    c = np.ascontiguousarray(rng.standard_normal((3, m)) + 1j * rng.standard_normal((3, m)))
    return {
        "heat": lambda mod: mod.heat(c, xi, 0.3),
        "leray": lambda mod: mod.leray(c, xi),
        "stokes_coriolis": lambda mod: mod.stokes_coriolis(c, xi, 5.0, 0.3),
        "shell_energy": lambda mod: mod.shell_energy(c, xi, -1, 6),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[32, 48, 64])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled extension not available; only the numpy fallback can be timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16} {'n':>4} {'numpy [ms]':>11} {'cython [ms]':>12} {'speed-up':>9} {'max |diff|':>11}")
    for n in args.n:
        for name, call in _cases(n, rng).items():
            t_np = min(timeit.repeat(lambda: call(_fallback), number=1, repeat=args.repeat))
            if compiled is None:
                print(f"{name:<16} {n:>4} {1e3 * t_np:>11.2f} {'-':>12} {'-':>9} {'-':>11}")
                continue
            t_cy = min(timeit.repeat(lambda: call(compiled), number=1, repeat=args.repeat))
            diff = float(np.max(np.abs(np.asarray(call(_fallback)) - np.asarray(call(compiled)))))
            print(f"{name:<16} {n:>4} {1e3 * t_np:>11.2f} {1e3 * t_cy:>12.2f} {t_np / t_cy:>9.2f} {diff:>11.2e}")


if __name__ == "__main__":
    main()

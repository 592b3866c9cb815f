"""Compare the compiled and numpy shallow-network kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one row per (activation, field, width, points) case with the best
per-call time of each backend, the speedup of the compiled kernel, and the
max deviation between the two outputs.
"""

import argparse
import sys
import timeit

import numpy as np

from netconstruct import kernels
from netconstruct.numerics import Activation, FieldTag
from netconstruct.shallow import random_shallow

R, C = FieldTag.REAL, FieldTag.COMPLEX
CASES = [
    ("exp", R, 8, 50),
    ("exp", R, 8, 20000),
    ("exp", R, 64, 20000),
    ("sin", R, 64, 20000),
    ("relu", R, 64, 20000),
    ("exp", C, 8, 50),
    ("exp", C, 8, 20000),
    ("cosh", C, 64, 20000),
]


def bench_case(name, field, width, n_points, repeat, rng):
    act = Activation.named(name, field)
    net = random_shallow(rng, act, 3, width, scale=0.5)
    pts = rng.uniform(-1, 1, (n_points, 3))
    if field is FieldTag.COMPLEX:
        pts = pts + 1j * rng.uniform(-1, 1, pts.shape)
    wc = np.conj(net.w)
    times, outs = {}, {}
    for backend in kernels.available_backends():
        call = lambda: kernels.shallow_forward(act, net.a, wc, net.b, pts, backend=backend)  # noqa: E731
        outs[backend] = call()
        timer = timeit.Timer(call)
        number, _ = timer.autorange()
        times[backend] = min(timer.repeat(repeat, number)) / number
    return times, outs


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the python backend is available", file=sys.stderr)
    rng = np.random.default_rng(args.seed)
    header = f"{'activation':<10} {'field':<5} {'width':>5} {'points':>6} " + " ".join(f"{b + ' ms':>10}" for b in backends)
    if len(backends) == 2:
        header += f" {'speedup':>8} {'max diff':>10}"
    print(header)
    for name, field, width, n_points in CASES:
        times, outs = bench_case(name, field, width, n_points, args.repeat, rng)
        row = f"{name:<10} {field.value:<5} {width:>5} {n_points:>6} "
        row += " ".join(f"{1e3 * times[b]:>10.4f}" for b in backends)
        if len(backends) == 2:
            diff = np.max(np.abs(outs["cython"] - outs["python"]))
            row += f" {times['python'] / times['cython']:>8.2f} {diff:>10.1e}"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Timing comparison between the compiled lattice kernel and the numpy one.

Runs the forward/backward/posterior and Viterbi dynamic programs on random
score tables at several sentence lengths, swapping the kernel in place so
both backends see identical inputs, and prints per-op medians with the
speedup. Each size also cross-checks that the two backends agree on the log
partition before any timing is reported.

Usage:
    python3 benchmarks/bench_lattice.py [--sizes 8,16,32,64] [--max-span 3]
        [--repeats 5] [--seed 0]
"""

import argparse
import statistics
import time

import numpy as np

from spanalign import lattice
from spanalign import _kernel_py as kernel_py
from spanalign.data import enumerate_spans
from spanalign.scorer import ScoreTables

try:
    from spanalign import _kernel as kernel_compiled
except ImportError:  # pragma: no cover - build-environment dependent
    kernel_compiled = None


def random_tables(rng: np.random.Generator, n: int, m: int,
                  max_span: int) -> ScoreTables:
    spans = enumerate_spans(n, max_span)
    labels = [None, *enumerate_spans(m, max_span)]
    return ScoreTables(spans=spans, labels=labels,
                       upsilon=rng.normal(size=(len(spans), len(labels))),
                       tau=rng.normal(size=15))


def median_seconds(op, repeats: int) -> float:
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        op()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description=__doc__.splitlines()[0],
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("--sizes", default="8,16,32,64",
                        help="comma-separated sentence lengths (n = m)")
    parser.add_argument("--max-span", type=int, default=3)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if kernel_compiled is None:
        parser.error("compiled kernel unavailable; build it first with "
                     "pip install -e . --no-build-isolation")

    rng = np.random.default_rng(args.seed)
    kept = lattice._kernel
    print(f"{'size':>5}  {'op':<9} {'compiled':>12} {'numpy':>12} {'speedup':>8}")
    try:
        for size in (int(s) for s in args.sizes.split(",")):
            tables = random_tables(rng, size, size, args.max_span)
            lat = lattice.build_lattice(tables)

            lattice._kernel = kernel_compiled
            ref = lattice.log_partition(lat)
            lattice._kernel = kernel_py
            if abs(lattice.log_partition(lat) - ref) > 1e-9 * max(1, abs(ref)):
                raise AssertionError(f"backends disagree at size {size}")

            ops = {"logZ": lambda: lattice.log_partition(lat),
                   "marginals": lambda: lattice.marginals(lat),
                   "viterbi": lambda: lattice.viterbi(lat)}
            for name, op in ops.items():
                timings = {}
                for backend, module in (("compiled", kernel_compiled),
                                        ("numpy", kernel_py)):
                    lattice._kernel = module
                    timings[backend] = median_seconds(op, args.repeats)
                print(f"{size:>5}  {name:<9}"
                      f" {timings['compiled'] * 1e3:>10.3f}ms"
                      f" {timings['numpy'] * 1e3:>10.3f}ms"
                      f" {timings['numpy'] / timings['compiled']:>7.1f}x")
    finally:
        lattice._kernel = kept
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

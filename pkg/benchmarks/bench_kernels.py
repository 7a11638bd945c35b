"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py --repeat 5

Both backends must produce identical results; the script checks that before
reporting timings.
"""

import argparse
import statistics
import time

import numpy as np

from treepile import kernels
from treepile.arborescence import line_tree, uniform_rates
from treepile.configuration import StateSpace
from treepile.operators import LANDSLIDE, SOURCE, TRICKLE, operator_table


def timed(fn, repeat):
    out, times = None, []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return out, statistics.median(times)


def bench_tables(space, backend):
    def go():
        return [operator_table(space, kind, v, backend=backend)
                for v in space.tree.vertices for kind in (SOURCE, TRICKLE, LANDSLIDE)]
    return go


def bench_simulate(space, backend, steps, trials):
    tree = space.tree
    tabs = [operator_table(space, SOURCE, v) for v in tree.source_vertices()]
    tabs += [operator_table(space, LANDSLIDE, v) for v in tree.vertices]
    tables = np.array(tabs, dtype=np.int64)
    cumulative = np.arange(1, len(tabs) + 1, dtype=np.int64)
    return lambda: backend.simulate(tables, cumulative, len(tabs), 7, 0, steps, trials)


def bench_charpoly(n, backend):
    a = np.random.default_rng(0).integers(-5, 6, size=(n, n))
    return lambda: backend.charpoly_mod(a, 2_147_483_629)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--thresholds", default="3,3,3,3,3,3", help="line thresholds, leaf first")
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--trials", type=int, default=20_000)
    parser.add_argument("--matrix", type=int, default=120, help="size of the charpoly test matrix")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = kernels.available_backends()
    if len(backends) < 2:
        print("compiled extension not built; only the numpy fallback is available")
    tree = uniform_rates(line_tree([int(t) for t in args.thresholds.split(",")]))
    space = StateSpace(tree)
    cases = {
        f"operator tables (|Omega|={space.size})": lambda be: bench_tables(space, be),
        f"simulate ({args.trials} x {args.steps} steps)": lambda be: bench_simulate(
            space, be, args.steps, args.trials),
        f"charpoly mod p ({args.matrix}x{args.matrix})": lambda be: bench_charpoly(args.matrix, be),
    }
    print(f"{'kernel':<40}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, make in cases.items():
        results, times = [], []
        for be in backends.values():
            out, t = timed(make(be), args.repeat)
            results.append(out)
            times.append(t)
        ref = results[0]
        for other in results[1:]:
            same = all(np.array_equal(np.asarray(a), np.asarray(b)) for a, b in zip(ref, other)) \
                if isinstance(ref, list) else np.array_equal(np.asarray(ref), np.asarray(other))
            if not same:
                raise SystemExit(f"backends disagree on {label}")
        speed = f"{times[0] / times[-1]:>9.1f}x" if len(times) > 1 else ""
        print(f"{label:<40}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times) + speed)


if __name__ == "__main__":
    main()

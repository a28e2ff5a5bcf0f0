"""Time the compiled fiber kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--alphabet 4] [--depths 3 4 5 6]

Each row reports the best of ``--repeat`` runs for one kernel at one depth of
the full shift, together with the agreement between the two backends.
"""
import argparse
import timeit

import numpy as np

from ergodia import ShiftModel
from ergodia.kernels import available_backends


def _inputs(alphabet: int, depth: int, n_gens: int, rng):
    model = ShiftModel.full(alphabet, depth)
    index = model.tail_index(depth)
    n, n_out = model.dim(depth), model.dim(depth - 1)
    values = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    gens = rng.standard_normal((n_gens, n)) + 1j * rng.standard_normal((n_gens, n))
    weights = rng.random(n) + 0.1
    return values, gens, weights, index, n_out


def _best(fn, repeat: int) -> float:
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def run(alphabet=4, depths=(3, 4, 5, 6), repeat=5, seed=0):
    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; timing the fallback only")
    rng = np.random.default_rng(seed)
    rows = []
    for d in depths:
        values, gens, weights, index, n_out = _inputs(alphabet, d, alphabet, rng)
        cases = {
            "fiber_sum": lambda k: k.fiber_sum(values, index, n_out),
            "fiber_gram_schmidt": lambda k: k.fiber_gram_schmidt(gens, weights, index, n_out),
        }
        for kernel, call in cases.items():
            times = {name: _best(lambda k=k: call(k), repeat) for name, k in backends.items()}
            outs = {name: call(k) for name, k in backends.items()}
            ref = np.asarray(outs["python"][0] if kernel == "fiber_gram_schmidt" else outs["python"])
            diff = max(float(np.max(np.abs(np.asarray(o[0] if kernel == "fiber_gram_schmidt" else o)
                                              - ref))) for o in outs.values())
            rows.append((kernel, d, alphabet ** d, times, diff))
    header = f"{'kernel':<20}{'depth':>6}{'dim':>7}{'python [ms]':>13}{'cython [ms]':>13}{'speedup':>9}{'max diff':>10}"
    print(header)
    print("-" * len(header))
    for kernel, d, dim, times, diff in rows:
        py = times["python"] * 1e3
        cy = times.get("cython")
        cy_s = f"{cy * 1e3:13.3f}" if cy else f"{'n/a':>13}"
        sp = f"{times['python'] / cy:8.1f}x" if cy else f"{'n/a':>9}"
        print(f"{kernel:<20}{d:>6}{dim:>7}{py:13.3f}{cy_s}{sp}{diff:10.1e}")
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphabet", type=int, default=4)
    ap.add_argument("--depths", type=int, nargs="+", default=[3, 4, 5, 6])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    run(args.alphabet, tuple(args.depths), args.repeat, args.seed)


if __name__ == "__main__":
    main()

"""Time the python and compiled kernels on the same workloads.

    python3 benchmarks/bench_backends.py [--steps N] [--repeat R]
"""
import argparse
import time

from cpdsplit import _backend
from cpdsplit.fields import get_problem
from cpdsplit.integrators import SchemeContext, integrate_rows, reference_solve


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(steps):
    p2 = get_problem("p2-q2")
    for method in ("s2new", "s2vp"):
        def run(backend, method=method):
            ctx = SchemeContext(p2, 2.0 ** -8, 2.0 ** -10, backend=backend)
            integrate_rows(ctx, method, steps, record_every=steps)
        yield f"{method} x{steps} steps (p2, eps=2^-8)", run

    def ref(backend):
        reference_solve(p2, 2.0 ** -6, 1.0, backend=backend)
    yield "reference DOPRI5 (p2, eps=2^-6, T=1)", ref


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = _backend.available()
    print(f"backends: {', '.join(names)}")
    print(f"{'workload':44s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, fn in workloads(args.steps):
        secs = [best_of(lambda n=n: fn(n), args.repeat) for n in names]
        line = f"{label:44s}" + "".join(f"{s * 1e3:10.1f}ms" for s in secs)
        if len(secs) > 1:
            line += f"{secs[0] / secs[1]:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()

"""Compare the numba and numpy orbit kernels on the same log-polar grid.

    python3 benchmarks/bench_backends.py --px 512 --repeat 3

Run with CSTAR_DISABLE_NUMBA=1 to time the numpy path alone.
"""
import argparse
import time

from cstarweb import orbit
from cstarweb._accel import HAS_NUMBA
from cstarweb.complex_map import MapParams
from cstarweb.grids import GridSpec


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--px", type=int, default=512)
    ap.add_argument("--horizon", type=int, default=12)
    ap.add_argument("--budget", type=int, default=64)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    params = MapParams(32.0)
    grid = GridSpec.logpolar(-4, 4, args.px)
    backends = ["numpy"] + (["numba"] if HAS_NUMBA else [])
    results, times = {}, {}
    for b in backends:
        def run():
            return orbit.compute_grid(params, grid, args.budget, args.horizon,
                                      threads=args.threads, backend=b)
        if b == "numba":
            run()  # compile
        t, og = timed(run, args.repeat)
        results[b], times[b] = og, t
        rate = grid.width * grid.height / t / 1e6
        print(f"{b:6s} {t:8.3f} s  {rate:6.2f} Mpx/s")
    if len(results) == 2:
        a, b = results["numpy"], results["numba"]
        print(f"speedup {times['numpy'] / times['numba']:.1f}x")
        print("in_I mismatches:", int((a.in_i != b.in_i).sum()),
              "entry mismatches:", int((a.entry != b.entry).sum()),
              "of", a.entry.size)


if __name__ == "__main__":
    main()

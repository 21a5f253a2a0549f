"""Compare the compiled Vietoris-Rips kernel with the pure-Python fallback.

Both implementations run the same workloads; the script checks that their
barcodes agree before reporting timings.

    python benchmarks/bench_kernel.py [--repeat 3] [--quick] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import statistics
import time

from fillrad import _kernel, _vr_fallback
from fillrad.samplers import sample_circle, sample_flat_torus, sample_sphere


def workloads(quick: bool):
    yield "circle(2pi, 64) maxdim 2", sample_circle(2 * math.pi, 64).space.d, 2.4, 2
    yield "sphere2(60) maxdim 3", sample_sphere(2, 60, seed=0).space.d, 2.0, 3
    yield "torus(10x6) maxdim 3", sample_flat_torus(2 * math.pi, 1.2 * math.pi, 10, 6).total.space.d, 2.2, 3
    if not quick:
        yield "sphere2(100) maxdim 3", sample_sphere(2, 100, seed=0).space.d, 2.0, 3
        yield "circle(2pi, 128) maxdim 2", sample_circle(2 * math.pi, 128).space.d, 2.304, 2


def best_of(fn, repeat: int) -> tuple[float, object]:
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="skip the larger workloads")
    ap.add_argument("--json", dest="json_out", default=None, help="also write results to this file")
    args = ap.parse_args()

    if _kernel.compiled is None:
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation` first")

    rows = []
    print(f"python {platform.python_version()} on {platform.machine()}, best of {args.repeat}")
    print(f"{'workload':<28}{'simplices':>12}{'compiled s':>12}{'python s':>12}{'speedup':>10}")
    for name, d, thr, maxdim in workloads(args.quick):
        counts = _kernel.compiled.count_simplices(d, thr, maxdim, 10**9)
        tc, bc = best_of(lambda: _kernel.compiled.barcode(d, thr, maxdim), args.repeat)
        tp, bp = best_of(lambda: _vr_fallback.barcode(d, thr, maxdim), args.repeat)
        if bc != bp:
            raise SystemExit(f"barcodes differ on {name}")
        rows.append({"workload": name, "simplices": int(sum(counts)), "compiled_s": tc, "python_s": tp,
                     "speedup": tp / tc})
        print(f"{name:<28}{sum(counts):>12}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}x")

    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(rows, fh, indent=2)
    print(f"median speedup {statistics.median(r['speedup'] for r in rows):.1f}x")


if __name__ == "__main__":
    main()

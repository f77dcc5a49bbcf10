"""Compare the compiled and pure-Python geometry kernels.

    python benchmarks/bench_kernels.py [--sizes 50 100 200] [--repeat 20]

Reports the median wall time per call for each backend and the speedup.
The end-to-end row times classification and refinement of a synthetic
page under each backend in a fresh interpreter.
"""

from __future__ import annotations

import argparse
import os
import random
import statistics
import subprocess
import sys
import time

from docstruct import _pykernels, kernels
from docstruct.geometry import BBox

try:
    from docstruct import _ckernels
except ImportError:
    _ckernels = None


def random_boxes(n: int, seed: int) -> list[BBox]:
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        x0, y0 = rng.uniform(0, 1100), rng.uniform(0, 1600)
        out.append(BBox(x0, y0, x0 + rng.uniform(5, 400), y0 + rng.uniform(5, 300)))
    return out


def median_ms(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1000.0)
    return statistics.median(times)


E2E = """
import statistics, time
from docstruct import kernels
from docstruct.refinement import refine
from docstruct.synth import FloatSpec, NoiseSpec, PageSpec, generate_page, perturb
gt, _ = generate_page(PageSpec(seed=8, columns=2, blocks_per_column=6, heading=True,
    floats=(FloatSpec("figure", graphics=2), FloatSpec("table", rows=4, cols=4, full_width=True))))
ents = perturb(gt, NoiseSpec(jitter=2.0), seed=1)
ts = []
for _ in range({repeat}):
    t0 = time.perf_counter()
    refine(ents, page_width=gt.page_width, page_height=gt.page_height)
    ts.append((time.perf_counter() - t0) * 1000.0)
print(kernels.BACKEND, len(ents), statistics.median(ts))
"""


def end_to_end(pure: bool, repeat: int) -> tuple[str, int, float]:
    env = dict(os.environ)
    env.pop("DOCSTRUCT_PURE_PYTHON", None)
    if pure:
        env["DOCSTRUCT_PURE_PYTHON"] = "1"
    out = subprocess.run(
        [sys.executable, "-c", E2E.format(repeat=repeat)], env=env, capture_output=True, text=True, check=True
    ).stdout.split()
    return out[0], int(out[1]), float(out[2])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 400])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; only the Python backend is available")
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':<14}{'n':>6}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for n in args.sizes:
        flat = kernels.pack(random_boxes(n, n))
        other = kernels.pack(random_boxes(n, n + 1))
        cases = [
            ("nesting_pairs", lambda m: m.nesting_pairs(flat, 0.45, 1.2)),
            ("iou_matrix", lambda m: m.iou_matrix(flat, other)),
        ]
        for name, call in cases:
            py = median_ms(lambda: call(_pykernels), args.repeat)
            if _ckernels is None:
                print(f"{name:<14}{n:>6}{py:>12.3f}{'-':>12}{'-':>10}")
                continue
            cy = median_ms(lambda: call(_ckernels), args.repeat)
            print(f"{name:<14}{n:>6}{py:>12.3f}{cy:>12.3f}{py / cy:>9.1f}x")
    py_name, n_ent, py_ms = end_to_end(True, args.repeat)
    cy_name, _, cy_ms = end_to_end(False, args.repeat)
    print(f"\nrefine, {n_ent} entities: {py_name} {py_ms:.2f} ms, {cy_name} {cy_ms:.2f} ms")


if __name__ == "__main__":
    main()

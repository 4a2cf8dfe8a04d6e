"""Benchmark the jitted kernels against the pure-numpy fallback.

Runs every dispatched kernel on realistic workloads under both backends and
prints per-kernel timings plus the speedup ratio, then repeats the exercise
end to end through the public matcher API.  Invoke from the repo root:

    python3 benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import time

import numpy as np

from fuseprint import backends
from fuseprint.compat import GaborBankSpec, gabor_bank
from fuseprint.matching import Matcher, monomodal_match
from fuseprint.model import FeaturePoint, Modality, Template, TemplateKind


def _random_template(rng, n, span=200.0):
    pts = []
    for _ in range(n):
        x, y = rng.uniform(0.0, span, 2)
        pts.append(FeaturePoint(float(x), float(y),
                                float(rng.uniform(0.0, 360.0)),
                                rng.random(128), Modality.FACE))
    return Template(tuple(pts), TemplateKind.FACE)


def make_workloads(rng):
    """One (name, callable) pair per dispatched kernel, inputs pre-built so
    the timed region is the kernel alone."""
    n = 120
    xy_a = rng.uniform(0.0, 60.0, (n, 2))
    xy_b = rng.uniform(0.0, 60.0, (n, 2))
    th_a = rng.uniform(0.0, 360.0, n)
    th_b = rng.uniform(0.0, 360.0, n)
    ds_a = rng.random((n, 128))
    ds_b = rng.random((n, 128))

    t = 200
    feats_a = rng.random((t, 8)) * 60.0
    feats_b = rng.random((t, 8)) * 60.0

    img = rng.random((320, 320)) * 255.0
    kernels = gabor_bank(GaborBankSpec())
    cxs = rng.integers(40, 280, 48).astype(np.int64)
    cys = rng.integers(40, 280, 48).astype(np.int64)

    pts3 = np.column_stack([rng.uniform(0.0, 300.0, (600, 2)),
                            rng.uniform(0.0, 360.0, 600) * 0.1])
    init = np.arange(12)

    pts2 = rng.uniform(0.0, 500.0, (500, 2))

    return [
        ("point_candidates (120x120)",
         lambda: backends.point_candidates(xy_a, th_a, ds_a,
                                           xy_b, th_b, ds_b, 4.0, 3.0, 6.0)),
        ("triangle_candidates (200x200)",
         lambda: backends.triangle_candidates(feats_a, feats_b,
                                              3.0, 6.0, 3.0, 0.05)),
        ("gabor_responses (48 pts, 128 ch)",
         lambda: backends.gabor_responses(img, cxs, cys, kernels)),
        ("farthest_point_init (600, k=12)",
         lambda: backends.farthest_point_init(pts3, 12, 0)),
        ("kmeans_lloyd (600, k=12)",
         lambda: backends.kmeans_lloyd(pts3, init, 100)),
        ("delaunay_core (500 pts)",
         lambda: backends.delaunay_core(pts2)),
    ]


def make_end_to_end(rng):
    a = _random_template(rng, 150)
    b = _random_template(rng, 150)
    c = _random_template(rng, 80)
    d = _random_template(rng, 80)
    return [
        ("point match (150 vs 150)",
         lambda: monomodal_match(a, b)),
        ("delaunay match (80 vs 80)",
         lambda: monomodal_match(c, d, matcher=Matcher.DELAUNAY)),
    ]


def time_under(backend, fn, repeats):
    prev = backends.select_backend(backend)
    try:
        fn()  # warm (pays JIT compilation on the numba side)
        times = []
        for _ in range(repeats):
            start = time.perf_counter()
            fn()
            times.append(time.perf_counter() - start)
        return min(times)
    finally:
        backends.select_backend(prev)


def run(rows, repeats, have_numba):
    header = f"{'workload':36s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for name, fn in rows:
        t_np = time_under("numpy", fn, repeats)
        if have_numba:
            t_nb = time_under("numba", fn, repeats)
            ratio = f"{t_np / t_nb:7.1f}x"
            nb_col = f"{t_nb * 1000:8.2f}ms"
        else:
            ratio, nb_col = "      --", "        --"
        print(f"{name:36s} {t_np * 1000:8.2f}ms {nb_col} {ratio}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5,
                    help="timed runs per workload (best-of is reported)")
    args = ap.parse_args()

    have_numba = "numba" in backends.available_backends()
    print(f"backends available: {', '.join(backends.available_backends())}")
    if not have_numba:
        print("numba not importable; reporting numpy times only")
    print()

    rng = np.random.default_rng(42)
    print("kernel microbenchmarks (best of %d):" % args.repeats)
    run(make_workloads(rng), args.repeats, have_numba)
    print()
    print("public API, end to end (best of %d):" % args.repeats)
    run(make_end_to_end(rng), args.repeats, have_numba)


if __name__ == "__main__":
    main()

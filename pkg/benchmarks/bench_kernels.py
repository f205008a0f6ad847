"""Benchmark the numba and pure-numpy kernel paths against each other.

Run from the repo root:

    python3 benchmarks/bench_kernels.py --pixels 512 --boxes 200000 --repeat 5

The numba column is omitted when numba is unavailable or disabled via
GEOGROUND_DISABLE_NUMBA=1.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from geoground import kernels
from geoground.config import BLACK_BIN, GRAY_BIN, WHITE_BIN, AttributeConfig


def time_call(fn, *args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_classify(side: int, repeat: int) -> list[tuple[str, float]]:
    rng = np.random.default_rng(0)
    rgb = rng.integers(0, 256, size=(side, side, 3), dtype=np.uint8)
    cfg = AttributeConfig()
    hue_lo, hue_hi, hue_bin = cfg.hue_tables()
    args = (rgb, hue_lo, hue_hi, hue_bin, cfg.value_black, cfg.saturation_neutral,
            cfg.value_white, BLACK_BIN, GRAY_BIN, WHITE_BIN)
    rows = [("numpy", time_call(kernels._classify_colors_numpy, *args, repeat=repeat))]
    if kernels._classify_colors_numba is not None:
        kernels._classify_colors_numba(*args)  # warm up / compile
        rows.append(("numba", time_call(kernels._classify_colors_numba, *args,
                                        repeat=repeat)))
    return rows


def bench_pairs(n: int, repeat: int) -> list[tuple[str, float]]:
    rng = np.random.default_rng(1)
    corners = rng.uniform(0, 700, size=(n, 4))
    sizes = rng.uniform(1, 100, size=(n, 4))
    a = np.stack([corners[:, 0], corners[:, 1],
                  corners[:, 0] + sizes[:, 0], corners[:, 1] + sizes[:, 1]], axis=1)
    b = np.stack([corners[:, 2], corners[:, 3],
                  corners[:, 2] + sizes[:, 2], corners[:, 3] + sizes[:, 3]], axis=1)
    rows = [("numpy", time_call(kernels._pair_inter_union_numpy, a, b, repeat=repeat))]
    if kernels._pair_inter_union_numba is not None:
        kernels._pair_inter_union_numba(a, b)
        rows.append(("numba", time_call(kernels._pair_inter_union_numba, a, b,
                                        repeat=repeat)))
    return rows


def print_table(title: str, rows: list[tuple[str, float]], unit_count: int) -> None:
    print(f"\n{title}")
    baseline = rows[0][1]
    for name, seconds in rows:
        throughput = unit_count / seconds / 1e6
        speedup = baseline / seconds
        print(f"  {name:<6} {seconds * 1e3:9.3f} ms   {throughput:8.1f} M items/s"
              f"   x{speedup:.2f} vs numpy")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pixels", type=int, default=512,
                        help="side length of the RGB test image")
    parser.add_argument("--boxes", type=int, default=200_000,
                        help="number of box pairs")
    parser.add_argument("--repeat", type=int, default=5,
                        help="timing repeats (best of)")
    args = parser.parse_args()

    print(f"numba path available: {kernels._classify_colors_numba is not None}")
    rows = bench_classify(args.pixels, args.repeat)
    print_table(f"color classification, {args.pixels}x{args.pixels} px",
                rows, args.pixels * args.pixels)
    rows = bench_pairs(args.boxes, args.repeat)
    print_table(f"pairwise intersection/union, {args.boxes} pairs", rows, args.boxes)


if __name__ == "__main__":
    main()

"""Hot per-pixel and per-pair numeric kernels.

Two operations dominate a full-dataset run: classifying every pixel of every
object crop into a color bin, and scoring box overlap for every prediction.
Both ship in two interchangeable implementations:

* a numba ``@njit`` loop (default when numba imports), and
* a vectorized pure-numpy path.

Set ``GEOGROUND_DISABLE_NUMBA=1`` to force the numpy path; it is also the
automatic fallback when numba is unavailable. The two paths use identical
arithmetic (integer channel math, one float division per pixel) and produce
bit-identical results, which the test suite asserts. ``benchmarks/`` compares
their throughput.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_ENABLED = os.environ.get("GEOGROUND_DISABLE_NUMBA", "").strip().lower() not in {
    "1",
    "true",
    "yes",
}
if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - exercised via the env flag instead
        NUMBA_ENABLED = False


def _classify_colors_loop(rgb, hue_lo, hue_hi, hue_bin, v_black, s_neutral, v_white,
                          black_bin, gray_bin, white_bin):
    h_px, w_px = rgb.shape[0], rgb.shape[1]
    out = np.empty((h_px, w_px), dtype=np.int16)
    n_ranges = hue_lo.shape[0]
    for i in range(h_px):
        for j in range(w_px):
            r = np.int64(rgb[i, j, 0])
            g = np.int64(rgb[i, j, 1])
            b = np.int64(rgb[i, j, 2])
            maxc = max(r, max(g, b))
            minc = min(r, min(g, b))
            delta = maxc - minc
            v = maxc / 255.0
            if v < v_black:
                out[i, j] = black_bin
                continue
            s = 0.0 if maxc == 0 else delta / maxc
            if s < s_neutral:
                out[i, j] = white_bin if v > v_white else gray_bin
                continue
            # delta > 0 here: s >= s_neutral > 0 implies a chromatic pixel
            if maxc == r:
                hue = 60.0 * (((g - b) / delta) % 6.0)
            elif maxc == g:
                hue = 60.0 * ((b - r) / delta + 2.0)
            else:
                hue = 60.0 * ((r - g) / delta + 4.0)
            code = hue_bin[0]
            for k in range(n_ranges):
                if hue_lo[k] <= hue < hue_hi[k]:
                    code = hue_bin[k]
                    break
            out[i, j] = code
    return out


def _classify_colors_numpy(rgb, hue_lo, hue_hi, hue_bin, v_black, s_neutral, v_white,
                           black_bin, gray_bin, white_bin):
    px = rgb.astype(np.int64)
    r, g, b = px[..., 0], px[..., 1], px[..., 2]
    maxc = np.maximum(np.maximum(r, g), b)
    minc = np.minimum(np.minimum(r, g), b)
    delta = maxc - minc

    v = maxc / 255.0
    safe_max = np.where(maxc == 0, 1, maxc)
    s = np.where(maxc == 0, 0.0, delta / safe_max)

    safe_delta = np.where(delta == 0, 1, delta)
    is_r = maxc == r
    is_g = (maxc == g) & ~is_r
    hue = np.where(
        is_r,
        60.0 * (((g - b) / safe_delta) % 6.0),
        np.where(is_g, 60.0 * ((b - r) / safe_delta + 2.0), 60.0 * ((r - g) / safe_delta + 4.0)),
    )

    out = np.full(maxc.shape, hue_bin[0], dtype=np.int16)
    unassigned = np.ones(maxc.shape, dtype=bool)
    for k in range(hue_lo.shape[0]):
        hit = unassigned & (hue_lo[k] <= hue) & (hue < hue_hi[k])
        out[hit] = hue_bin[k]
        unassigned &= ~hit
    neutral = s < s_neutral
    out[neutral] = np.where(v[neutral] > v_white, white_bin, gray_bin)
    out[v < v_black] = black_bin
    return out


def _pair_inter_union_loop(boxes_a, boxes_b):
    n = boxes_a.shape[0]
    inter = np.empty(n, dtype=np.float64)
    union = np.empty(n, dtype=np.float64)
    for t in range(n):
        ax1, ay1, ax2, ay2 = boxes_a[t, 0], boxes_a[t, 1], boxes_a[t, 2], boxes_a[t, 3]
        bx1, by1, bx2, by2 = boxes_b[t, 0], boxes_b[t, 1], boxes_b[t, 2], boxes_b[t, 3]
        iw = min(ax2, bx2) - max(ax1, bx1)
        ih = min(ay2, by2) - max(ay1, by1)
        inter_t = iw * ih if (iw > 0.0 and ih > 0.0) else 0.0
        area_a = (ax2 - ax1) * (ay2 - ay1)
        area_b = (bx2 - bx1) * (by2 - by1)
        inter[t] = inter_t
        union[t] = area_a + area_b - inter_t
    return inter, union


def _pair_inter_union_numpy(boxes_a, boxes_b):
    iw = np.minimum(boxes_a[:, 2], boxes_b[:, 2]) - np.maximum(boxes_a[:, 0], boxes_b[:, 0])
    ih = np.minimum(boxes_a[:, 3], boxes_b[:, 3]) - np.maximum(boxes_a[:, 1], boxes_b[:, 1])
    inter = np.where((iw > 0.0) & (ih > 0.0), iw * ih, 0.0)
    area_a = (boxes_a[:, 2] - boxes_a[:, 0]) * (boxes_a[:, 3] - boxes_a[:, 1])
    area_b = (boxes_b[:, 2] - boxes_b[:, 0]) * (boxes_b[:, 3] - boxes_b[:, 1])
    return inter, area_a + area_b - inter


if NUMBA_ENABLED:
    _classify_colors_numba = njit(cache=True)(_classify_colors_loop)
    _pair_inter_union_numba = njit(cache=True)(_pair_inter_union_loop)
else:
    _classify_colors_numba = None
    _pair_inter_union_numba = None


def classify_colors(rgb: np.ndarray, hue_lo: np.ndarray, hue_hi: np.ndarray,
                    hue_bin: np.ndarray, v_black: float, s_neutral: float, v_white: float,
                    black_bin: int, gray_bin: int, white_bin: int) -> np.ndarray:
    """Map an HxWx3 uint8 RGB array to an HxW array of color-bin codes.

    Achromatic rules fire first (value below ``v_black`` -> black; saturation
    below ``s_neutral`` -> white/gray split on ``v_white``), then the hue in
    degrees is looked up in the half-open ``[hue_lo, hue_hi)`` ranges.
    """
    rgb = np.ascontiguousarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected an HxWx3 RGB array, got shape {rgb.shape}")
    args = (rgb, hue_lo, hue_hi, hue_bin, float(v_black), float(s_neutral), float(v_white),
            black_bin, gray_bin, white_bin)
    if _classify_colors_numba is not None:
        return _classify_colors_numba(*args)
    return _classify_colors_numpy(*args)


def pair_inter_union(boxes_a: np.ndarray, boxes_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise intersection and union areas for two (N, 4) xyxy arrays."""
    boxes_a = np.ascontiguousarray(boxes_a, dtype=np.float64)
    boxes_b = np.ascontiguousarray(boxes_b, dtype=np.float64)
    if boxes_a.shape != boxes_b.shape or boxes_a.ndim != 2 or boxes_a.shape[1] != 4:
        raise ValueError(
            f"expected matching (N, 4) arrays, got {boxes_a.shape} and {boxes_b.shape}"
        )
    if _pair_inter_union_numba is not None:
        return _pair_inter_union_numba(boxes_a, boxes_b)
    return _pair_inter_union_numpy(boxes_a, boxes_b)

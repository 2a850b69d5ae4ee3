"""Independent brute-force reference implementations.

These deliberately avoid the package's code paths: edit distance builds
the full DP matrix instead of rolling rows, the sublength metrics
enumerate subsequences with explicit loops, the blur oracle convolves with
an explicit 2-D kernel over a symmetrically padded array, and the search
oracle evaluates the loss exhaustively over a position grid.
"""

from __future__ import annotations

import numpy as np


def levenshtein_matrix(a, b) -> int:
    """Full (len+1) x (len+1) dynamic-programming table."""
    la, lb = len(a), len(b)
    d = [[0] * (lb + 1) for _ in range(la + 1)]
    for i in range(la + 1):
        d[i][0] = i
    for j in range(lb + 1):
        d[0][j] = j
    for i in range(1, la + 1):
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[la][lb]


def sbtde_brute(a, b, k: int) -> float:
    """Direct enumeration of all contiguous length-k subsequences."""
    subs_a = [tuple(a[i:i + k]) for i in range(len(a) - k + 1)]
    subs_b = [tuple(b[i:i + k]) for i in range(len(b) - k + 1)]
    total = 0.0
    for x in subs_a:
        best = min(levenshtein_matrix(x, y) for y in subs_b)
        total += best / k
    return total / len(subs_a)


def spp_brute(sim, humans, k: int) -> float:
    scores = [1.0 - sbtde_brute(sim, h, k) for h in humans if len(h) >= k]
    if not scores:
        raise ValueError(f"no human long enough for k={k}")
    return max(scores)


def spp_report_brute(sim_strings, humans_by_image, k_max: int = 10):
    """(per_k mean/std, summary) computed the slow way.

    ``sim_strings``: list of (image_id, symbols); ``humans_by_image``:
    image_id -> list of symbol tuples.
    """
    per_k_scores = {k: [] for k in range(1, k_max + 1)}
    for image_id, symbols in sim_strings:
        refs = humans_by_image.get(image_id)
        if not refs:
            continue
        for k in range(1, min(len(symbols), k_max) + 1):
            eligible = [r for r in refs if len(r) >= k]
            if not eligible:
                continue
            per_k_scores[k].append(spp_brute(symbols, eligible, k))
    per_k = {}
    for k, vals in per_k_scores.items():
        if vals:
            arr = np.asarray(vals)
            per_k[k] = (float(arr.mean()), float(arr.std()))
    means = [m for m, _ in per_k.values()]
    stds = [s for _, s in per_k.values()]
    summary = (float(np.mean(means)), float(np.mean(stds)))
    return per_k, summary


def direct_gaussian_blur(channel: np.ndarray, sigma: float, truncate: float = 4.0) -> np.ndarray:
    """2-D convolution with an explicit sampled-Gaussian kernel.

    Boundary handling is symmetric padding, which matches reflective
    boundaries on the implementation side.
    """
    radius = int(truncate * sigma + 0.5)
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k1 = np.exp(-0.5 * (t / sigma) ** 2)
    k1 /= k1.sum()
    kernel = np.outer(k1, k1)
    padded = np.pad(channel, radius, mode="symmetric")
    h, w = channel.shape
    out = np.empty_like(channel, dtype=np.float64)
    for r in range(h):
        for c in range(w):
            window = padded[r:r + 2 * radius + 1, c:c + 2 * radius + 1]
            out[r, c] = float((window * kernel).sum())
    return out


def grid_search_min(loss_at_xy, width: int, height: int, stride: float = 2.0,
                    margin: float = 1.0) -> tuple[float, tuple[float, float]]:
    """Exhaustively evaluate a loss over pixel positions; return (loss, (x, y))."""
    best = (np.inf, (np.nan, np.nan))
    for y in np.arange(margin, height, stride):
        for x in np.arange(margin, width, stride):
            loss = loss_at_xy(float(x), float(y))
            if loss < best[0]:
                best = (loss, (float(x), float(y)))
    return best

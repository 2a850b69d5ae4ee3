"""Scanpath similarity: quantization, edit distance, SBTDE and SPP.

Scanpaths are quantized onto a cell grid and compared as symbol strings.
The sublength distance at size k averages, over every contiguous length-k
subsequence of the first string, the minimal edit distance (normalized by
k) to any length-k subsequence of the second:

    sbtde_k(a, b) = mean over x in subseq_k(a) of
                    min over y in subseq_k(b) of lev(x, y) / k

Plausibility against a set of human references keeps only the closest
human:  spp_k = max over humans of (1 - sbtde_k).  Values lie in [0, 1];
higher is more plausible.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ParameterError
from .types import Scanpath


@dataclass(frozen=True)
class ScanpathString:
    """A scanpath quantized to grid-cell labels."""

    symbols: tuple[int, ...]
    grid: tuple[int, int]  # (gx, gy)

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass
class SppReport:
    """Per-sublength plausibility scores plus their summary."""

    per_k: dict[int, tuple[float, float]] = field(default_factory=dict)  # k -> (mean, std)
    summary: tuple[float, float] = (float("nan"), float("nan"))
    n_scanpaths: int = 0
    missing_images: list[str] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return self.summary[0]

    @property
    def std(self) -> float:
        return self.summary[1]


def quantize(sp: Scanpath, width: int, height: int, gx: int, gy: int) -> ScanpathString:
    """Map each fixation to its cell label: col + gx * row."""
    if gx < 1 or gy < 1:
        raise ParameterError("grid dimensions must be >= 1")
    symbols = []
    for f in sp.fixations:
        col = min(int(f.x * gx / width), gx - 1)
        row = min(int(f.y * gy / height), gy - 1)
        symbols.append(max(col, 0) + gx * max(row, 0))
    return ScanpathString(symbols=tuple(symbols), grid=(gx, gy))


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, sa in enumerate(a, start=1):
        cur = [i]
        for j, sb in enumerate(b, start=1):
            cost = 0 if sa == sb else 1
            cur.append(min(cur[j - 1] + 1, prev[j] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]


def _subsequences(symbols: Sequence, k: int) -> list[tuple]:
    return [tuple(symbols[i:i + k]) for i in range(len(symbols) - k + 1)]


def sbtde_k(a: ScanpathString | Sequence, b: ScanpathString | Sequence, k: int) -> float:
    """Mean minimal normalized edit distance between length-k subsequences."""
    sa = a.symbols if isinstance(a, ScanpathString) else tuple(a)
    sb = b.symbols if isinstance(b, ScanpathString) else tuple(b)
    if k < 1:
        raise ParameterError("k must be >= 1")
    if k > len(sa) or k > len(sb):
        raise ParameterError(f"k={k} exceeds a scanpath length ({len(sa)}, {len(sb)})")
    subs_b = _subsequences(sb, k)
    total = 0.0
    subs_a = _subsequences(sa, k)
    for x in subs_a:
        total += min(edit_distance(x, y) for y in subs_b) / k
    return total / len(subs_a)


def spp_k(sim: ScanpathString, humans: Sequence[ScanpathString], k: int) -> float:
    """Best (1 - sbtde_k) over the human references long enough for k."""
    if not humans:
        raise ParameterError("need at least one human reference")
    if k > len(sim):
        raise ParameterError(f"k={k} exceeds simulated scanpath length {len(sim)}")
    eligible = [h for h in humans if len(h) >= k]
    if not eligible:
        raise ParameterError(f"no human reference of length >= {k}")
    return max(1.0 - sbtde_k(sim, h, k) for h in eligible)


def spp_summary(
    simulated: Sequence[Scanpath],
    humans_by_image: Mapping[str, Sequence[Scanpath]],
    image_sizes: Mapping[str, tuple[int, int]],
    grid: tuple[int, int] = (8, 8),
    k_max: int = 10,
) -> SppReport:
    """Aggregate SPP over simulated scanpaths, per sublength and overall.

    For every simulated scanpath, spp_k is computed for each k from 1 up
    to min(scanpath length, k_max), against the references on the same
    image that are at least k long.  Per-k scores are averaged across
    scanpaths (mean and population std); the summary averages the per-k
    means and the per-k stds.  Scanpaths with no references are reported
    in ``missing_images`` and excluded.
    """
    gx, gy = grid
    scores: dict[int, list[float]] = {k: [] for k in range(1, k_max + 1)}
    missing: list[str] = []
    n_used = 0
    for sp in simulated:
        refs = humans_by_image.get(sp.image_id, ())
        if not refs or sp.image_id not in image_sizes:
            missing.append(sp.image_id)
            continue
        w, h = image_sizes[sp.image_id]
        sim_q = quantize(sp, w, h, gx, gy)
        refs_q = [quantize(r, w, h, gx, gy) for r in refs]
        n_used += 1
        for k in range(1, min(len(sim_q), k_max) + 1):
            if not any(len(r) >= k for r in refs_q):
                continue
            scores[k].append(spp_k(sim_q, refs_q, k))
    per_k = {
        k: (float(np.mean(v)), float(np.std(v)))
        for k, v in scores.items() if v
    }
    if per_k:
        summary = (
            float(np.mean([m for m, _ in per_k.values()])),
            float(np.mean([s for _, s in per_k.values()])),
        )
    else:
        summary = (float("nan"), float("nan"))
    return SppReport(per_k=per_k, summary=summary, n_scanpaths=n_used, missing_images=missing)


def write_spp_csv(reports: Mapping[tuple[str, str], SppReport], path) -> None:
    """CSV rows (model, dataset, k, mean, std) plus a summary row per model."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "dataset", "k", "mean", "std"])
        for (model, dataset), report in reports.items():
            for k in sorted(report.per_k):
                mean, std = report.per_k[k]
                writer.writerow([model, dataset, k, repr(mean), repr(std)])
            writer.writerow([model, dataset, "summary", repr(report.mean), repr(report.std)])

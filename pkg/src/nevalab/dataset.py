"""Ingestion and statistics for click-contingent captioning datasets.

Observations arrive as JSONL records
``{session_id, image_id, clicks: [{x, y, t_ms}], caption, skipped}``;
free-viewing references arrive as a preprocessed CSV with columns
``image_id, subject, ordinal, x, y``.  Exclusion rules, summary
statistics, and click-density estimation mirror the collection protocol:
skipped observations, observations without clicks, and captions shorter
than 3 characters are dropped (in that precedence order) before analysis.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .baselines import DensityMap
from .errors import ParameterError, ParseError
from .types import (
    Fixation,
    Observation,
    Scanpath,
    observation_from_dict,
    observation_to_dict,
    write_jsonl,
)

#: Display geometry constant: pixels per degree of visual angle.  Used to
#: size click reveals (two degrees across) and the engine's default fovea.
DEFAULT_PIXELS_PER_DEGREE = 35.0

MIN_CAPTION_CHARS = 3
EXCLUSION_RULES = ("skipped", "no_clicks", "short_caption")


@dataclass
class ExclusionReport:
    """Counts and per-rule buckets from apply_exclusions."""

    skipped: int = 0
    no_clicks: int = 0
    short_caption: int = 0
    buckets: dict[str, list[Observation]] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return self.skipped + self.no_clicks + self.short_caption


@dataclass(frozen=True)
class DatasetSummary:
    """Dataset-level statistics: totals, exclusions, caption lengths."""

    total_clicks: int
    total_observations: int
    total_sessions: int
    excluded_skipped: int
    excluded_no_clicks: int
    excluded_short_caption: int
    caption_chars: tuple[float, float, int]  # (mean, std, max)
    caption_words: tuple[float, float, int]
    images_covered: int


def load_observations(path) -> tuple[list[Observation], list[ParseError]]:
    """Parse an observation JSONL file.

    Malformed lines are collected as ParseErrors (with line numbers) and
    returned alongside the successfully parsed records, never silently
    dropped.  An unreadable file raises OSError.
    """
    observations: list[Observation] = []
    errors: list[ParseError] = []
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                observations.append(observation_from_dict(obj))
            except Exception as exc:
                errors.append(ParseError(str(exc), path=str(path), line=lineno))
    return observations, errors


def save_observations(observations: Iterable[Observation], path) -> None:
    write_jsonl((observation_to_dict(o) for o in observations), path)


def apply_exclusions(
    observations: Sequence[Observation],
) -> tuple[list[Observation], ExclusionReport]:
    """Drop skipped, clickless, and short-caption observations.

    Each observation is counted under the first rule it matches, so the
    buckets partition the excluded set and kept + excluded = total.
    """
    kept: list[Observation] = []
    report = ExclusionReport(buckets={rule: [] for rule in EXCLUSION_RULES})
    for obs in observations:
        if obs.skipped:
            report.skipped += 1
            report.buckets["skipped"].append(obs)
        elif obs.n_clicks == 0:
            report.no_clicks += 1
            report.buckets["no_clicks"].append(obs)
        elif len(obs.caption) < MIN_CAPTION_CHARS:
            report.short_caption += 1
            report.buckets["short_caption"].append(obs)
        else:
            kept.append(obs)
    return kept, report


def caption_statistics(captions: Sequence[str]) -> tuple[tuple[float, float, int], tuple[float, float, int]]:
    """Population (mean, std, max) of caption lengths in chars and words."""
    if not captions:
        raise ParameterError("no captions to summarize")
    chars = np.array([len(c) for c in captions], dtype=np.float64)
    words = np.array([len(c.split()) for c in captions], dtype=np.float64)
    return (
        (float(chars.mean()), float(chars.std()), int(chars.max())),
        (float(words.mean()), float(words.std()), int(words.max())),
    )


def summarize(observations: Sequence[Observation]) -> DatasetSummary:
    """Summarize a full (unfiltered) observation list.

    Totals cover every observation handed in; exclusion counts come from
    applying the standard rules; caption and word statistics are computed
    over the observations that survive exclusion.
    """
    if not observations:
        raise ParameterError("no observations to summarize")
    kept, report = apply_exclusions(observations)
    if not kept:
        raise ParameterError("all observations were excluded")
    chars, words = caption_statistics([o.caption for o in kept])
    return DatasetSummary(
        total_clicks=sum(o.n_clicks for o in observations),
        total_observations=len(observations),
        total_sessions=len({o.session_id for o in observations}),
        excluded_skipped=report.skipped,
        excluded_no_clicks=report.no_clicks,
        excluded_short_caption=report.short_caption,
        caption_chars=chars,
        caption_words=words,
        images_covered=len({o.image_id for o in kept}),
    )


def click_count_histogram(observations: Sequence[Observation]) -> dict[int, int]:
    """Exact histogram of click counts over 1..10."""
    hist = {n: 0 for n in range(1, 11)}
    for obs in observations:
        n = obs.n_clicks
        if n in hist:
            hist[n] += 1
    return hist


# ---------------------------------------------------------------------------
# Click density estimation


def _normalized_clicks(
    observations: Sequence[Observation],
    image_sizes: Mapping[str, tuple[int, int]],
    nth: int | None = None,
) -> np.ndarray:
    """Click positions scaled by their image size into [0, 1]^2."""
    points = []
    for obs in observations:
        if obs.clicks is None:
            continue
        if obs.image_id not in image_sizes:
            raise ParameterError(f"no image size known for {obs.image_id!r}")
        w, h = image_sizes[obs.image_id]
        fixations = obs.clicks.fixations
        if nth is not None:
            if len(fixations) < nth:
                continue
            fixations = fixations[nth - 1:nth]
        for f in fixations:
            points.append((f.x / w, f.y / h))
    return np.asarray(points, dtype=np.float64).reshape(-1, 2)


def _scott_bandwidth(points: np.ndarray) -> float:
    """Scott's rule on normalized coordinates, floored for degenerate spreads."""
    n = len(points)
    spread = float(np.sqrt(points.var(axis=0).mean()))
    bw = spread * n ** (-1.0 / 6.0)
    return max(bw, 1e-2)


def _kde_grid(points: np.ndarray, bandwidth: float | None, grid: tuple[int, int]) -> DensityMap:
    """Isotropic Gaussian KDE evaluated at cell centers, renormalized to sum 1.

    Hand-rolled (rather than scipy.stats.gaussian_kde) so that single
    clicks and collinear clusters, which make the sample covariance
    singular, still yield a density.
    """
    gx, gy = grid
    h = bandwidth if bandwidth is not None else _scott_bandwidth(points)
    if h <= 0:
        raise ParameterError("bandwidth must be positive")
    xs = (np.arange(gx) + 0.5) / gx
    ys = (np.arange(gy) + 0.5) / gy
    # (gy, gx, n) squared distances from each cell center to each click
    dx = xs[None, :, None] - points[:, 0][None, None, :]
    dy = ys[:, None, None] - points[:, 1][None, None, :]
    dens = np.exp(-(dx * dx + dy * dy) / (2.0 * h * h)).sum(axis=2)
    return DensityMap.from_weights(dens)


def click_density(
    observations: Sequence[Observation],
    image_sizes: Mapping[str, tuple[int, int]],
    bandwidth: float | None = None,
    grid: tuple[int, int] = (64, 64),
) -> DensityMap:
    """Gaussian KDE of all clicks, positions scaled per image, on a cell grid."""
    points = _normalized_clicks(observations, image_sizes)
    if len(points) == 0:
        raise ParameterError("need at least one click for density estimation")
    return _kde_grid(points, bandwidth, grid)


def nth_click_density(
    observations: Sequence[Observation],
    n: int,
    image_sizes: Mapping[str, tuple[int, int]],
    bandwidth: float | None = None,
    grid: tuple[int, int] = (64, 64),
) -> DensityMap:
    """KDE over only the n-th click of observations with at least n clicks."""
    if not 1 <= n <= 10:
        raise ParameterError("click order must lie in 1..10")
    points = _normalized_clicks(observations, image_sizes, nth=n)
    if len(points) == 0:
        raise ParameterError(f"no observation has a click #{n}")
    return _kde_grid(points, bandwidth, grid)


# ---------------------------------------------------------------------------
# Free-viewing (eye-tracking) ingestion


def load_eyetrack(path) -> list[Scanpath]:
    """Read fixation records (image_id, subject, ordinal, x, y) into scanpaths.

    Rows may arrive in any order; they are grouped by (image, subject) and
    sorted by ordinal.  Duplicate ordinals within a group are a parse
    error, since no monotone ordering exists then.
    """
    path = Path(path)
    groups: dict[tuple[str, str], list[tuple[int, float, float]]] = defaultdict(list)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"image_id", "subject", "ordinal", "x", "y"}
        if reader.fieldnames is None:  # zero-byte file
            return []
        if not required.issubset(reader.fieldnames):
            raise ParseError(
                f"eyetrack CSV must have columns {sorted(required)}", path=str(path)
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                key = (row["image_id"], row["subject"])
                groups[key].append((int(row["ordinal"]), float(row["x"]), float(row["y"])))
            except (TypeError, ValueError, KeyError) as exc:
                raise ParseError(f"bad fixation row: {exc}", path=str(path), line=lineno) from exc

    scanpaths = []
    for (image_id, subject), rows in sorted(groups.items()):
        rows.sort(key=lambda r: r[0])
        ordinals = [r[0] for r in rows]
        if len(set(ordinals)) != len(ordinals):
            raise ParseError(
                f"non-monotonic ordinals for ({image_id}, {subject})", path=str(path)
            )
        fixations = tuple(Fixation(x, y) for _, x, y in rows)
        scanpaths.append(
            Scanpath(image_id=image_id, fixations=fixations,
                     source="human_eyetrack", model_tag=f"subject:{subject}")
        )
    return scanpaths


def scanpaths_by_image(scanpaths: Sequence[Scanpath]) -> dict[str, list[Scanpath]]:
    grouped: dict[str, list[Scanpath]] = defaultdict(list)
    for sp in scanpaths:
        grouped[sp.image_id].append(sp)
    return dict(grouped)


def click_scanpaths(observations: Sequence[Observation]) -> list[Scanpath]:
    """The click sequences of non-skipped observations, as scanpaths."""
    return [o.clicks for o in observations if o.clicks is not None and len(o.clicks) > 0]

"""Coarse stimuli and foveated composites.

A foveated view of an image blends the sharp stimulus into a blurred
("coarse") version of itself through a Gaussian reveal mask centered on
the current fixation:

    composite = G * sharp + (1 - G) * coarse

with ``G`` an unnormalized Gaussian (peak 1) so the image is shown exactly
at the fixation and fades to fully coarse with distance.  All functions
are pure and operate on (H, W) masks / (H, W, 3) pixel grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import ParameterError, ShapeMismatchError
from .types import Fixation, Stimulus


@dataclass(frozen=True)
class FoveatedStimulus:
    """A composited view plus the fixations (and weights) that produced it."""

    pixels: np.ndarray  # (H, W, 3)
    fixation_set: tuple[tuple[Fixation, float], ...] = ()

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def gaussian_blob(center: Fixation, fov_sigma: float, width: int, height: int) -> np.ndarray:
    """Unnormalized Gaussian reveal mask, value 1 at the fixation center.

    mask[r, c] = exp(-((c - x)^2 + (r - y)^2) / (2 * fov_sigma^2))
    """
    if fov_sigma <= 0:
        raise ParameterError("fov_sigma must be positive")
    cols = np.arange(width, dtype=np.float64) - center.x
    rows = np.arange(height, dtype=np.float64) - center.y
    inv = 1.0 / (2.0 * fov_sigma * fov_sigma)
    return np.exp(-(rows[:, None] ** 2 + cols[None, :] ** 2) * inv)


def coarse(stimulus: Stimulus, blur_sigma: float) -> Stimulus:
    """Gaussian blur of every channel with reflective boundary handling."""
    if blur_sigma <= 0:
        raise ParameterError("blur_sigma must be positive")
    blurred = np.empty_like(stimulus.pixels)
    for ch in range(3):
        blurred[:, :, ch] = ndimage.gaussian_filter(
            stimulus.pixels[:, :, ch], sigma=blur_sigma, mode="reflect"
        )
    # The kernel is a convex weighting, but guard against float drift.
    np.clip(blurred, 0.0, 1.0, out=blurred)
    return Stimulus(image_id=stimulus.image_id, pixels=blurred)


def foveate(
    stimulus: Stimulus | np.ndarray,
    coarse_pixels: Stimulus | np.ndarray,
    mask: np.ndarray,
    fixation_set: Sequence[tuple[Fixation, float]] = (),
) -> FoveatedStimulus:
    """Pixelwise convex combination: mask * sharp + (1 - mask) * coarse."""
    sharp = stimulus.pixels if isinstance(stimulus, Stimulus) else np.asarray(stimulus)
    blur = coarse_pixels.pixels if isinstance(coarse_pixels, Stimulus) else np.asarray(coarse_pixels)
    mask = np.asarray(mask)
    if sharp.shape != blur.shape or sharp.shape[:2] != mask.shape:
        raise ShapeMismatchError(
            f"stimulus {sharp.shape}, coarse {blur.shape} and mask {mask.shape} must agree"
        )
    m = mask[:, :, None]
    return FoveatedStimulus(pixels=m * sharp + (1.0 - m) * blur, fixation_set=tuple(fixation_set))


def cumulative_mask(
    past: Sequence[np.ndarray], current: np.ndarray, forgetting: float
) -> np.ndarray:
    """Combine the current reveal with decayed past reveals, clipped at 1.

    ``past`` is ordered oldest first; a mask that was current ``age``
    fixations ago contributes ``forgetting ** age`` of itself.  With
    forgetting 0 the result is the current mask, untouched.
    """
    if not 0.0 <= forgetting <= 1.0:
        raise ParameterError("forgetting must lie in [0, 1]")
    current = np.asarray(current)
    if forgetting == 0.0 or not past:
        return current
    total = current.astype(np.float64, copy=True)
    n = len(past)
    for j, mask in enumerate(past):
        mask = np.asarray(mask)
        if mask.shape != current.shape:
            raise ShapeMismatchError(
                f"past mask {mask.shape} does not match current {current.shape}"
            )
        age = n - j
        total += (forgetting ** age) * mask
    return np.minimum(total, 1.0)

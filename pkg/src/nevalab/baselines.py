"""Reference scanpath generators: random, center, density-sampled, WTA.

All generators are pure functions of their inputs and a seed; fixations
are drawn i.i.d. except for the winner-take-all generator, whose
inhibition-of-return suppresses revisits.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParameterError, ParseError
from .types import Fixation, Scanpath


class SaliencyExhaustedWarning(UserWarning):
    """Saliency ran out of nonzero cells before the requested length."""


@dataclass(frozen=True)
class DensityMap:
    """Non-negative cell weights over an image, summing to 1."""

    weights: np.ndarray  # (height_cells, width_cells)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.size == 0:
            raise ParameterError(f"density grid must be 2-D and non-empty, got {w.shape}")
        if (w < 0).any() or not np.isfinite(w).all():
            raise ParameterError("density weights must be finite and non-negative")
        total = w.sum()
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(f"density weights must sum to 1 (got {total})")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def width(self) -> int:
        return self.weights.shape[1]

    @property
    def height(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def from_weights(cls, weights) -> "DensityMap":
        w = np.asarray(weights, dtype=np.float64)
        total = w.sum()
        if total <= 0:
            raise ParameterError("cannot normalize an all-zero density")
        return cls(weights=w / total)

    @classmethod
    def load(cls, path) -> "DensityMap":
        """Read the JSON form ({width, height, weights}) or a grayscale image."""
        path = Path(path)
        if path.suffix.lower() == ".json":
            try:
                obj = json.loads(path.read_text())
                width, height = int(obj["width"]), int(obj["height"])
                weights = np.asarray(obj["weights"], dtype=np.float64).reshape(height, width)
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                raise ParseError(f"bad density file: {exc}", path=str(path)) from exc
            return cls.from_weights(weights)
        from PIL import Image

        with Image.open(path) as im:
            arr = np.asarray(im.convert("L"), dtype=np.float64)
        return cls.from_weights(arr)

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "width": self.width,
            "height": self.height,
            "weights": self.weights.reshape(-1).tolist(),
        }
        path.write_text(json.dumps(payload))


def random_scanpath(
    width: int, height: int, n_fixations: int, seed: int,
    image_id: str = "stimulus", model_tag: str = "random",
) -> Scanpath:
    """Uniform i.i.d. fixations over the whole stimulus area."""
    if n_fixations < 1:
        raise ParameterError("n_fixations must be >= 1")
    rng = np.random.default_rng(seed)
    xs = rng.random(n_fixations) * width
    ys = rng.random(n_fixations) * height
    fixations = tuple(Fixation(float(x), float(y)) for x, y in zip(xs, ys))
    return Scanpath(image_id, fixations, source="simulated", model_tag=model_tag)


def center_scanpath(
    width: int, height: int, n_fixations: int, seed: int,
    sigma_frac: float = 0.22,
    image_id: str = "stimulus", model_tag: str = "center",
) -> Scanpath:
    """I.i.d. draws from a Gaussian centered in the image.

    Out-of-bounds draws are rejected and resampled, so the marginal is the
    centered Gaussian truncated to the stimulus.
    """
    if n_fixations < 1:
        raise ParameterError("n_fixations must be >= 1")
    if sigma_frac <= 0:
        raise ParameterError("sigma_frac must be positive")
    rng = np.random.default_rng(seed)
    cx, cy = width / 2.0, height / 2.0
    sx, sy = sigma_frac * width, sigma_frac * height
    fixations = []
    while len(fixations) < n_fixations:
        x = rng.normal(cx, sx)
        y = rng.normal(cy, sy)
        if 0.0 <= x < width and 0.0 <= y < height:
            fixations.append(Fixation(float(x), float(y)))
    return Scanpath(image_id, tuple(fixations), source="simulated", model_tag=model_tag)


def density_scanpath(
    density: DensityMap, width: int, height: int, n_fixations: int, seed: int,
    image_id: str = "stimulus", model_tag: str = "density",
) -> Scanpath:
    """I.i.d. fixations sampled from a cell density via the inverse CDF.

    A cell is chosen by inverting the cumulative weight, then the fixation
    is jittered uniformly inside that cell's pixel rectangle.
    """
    if n_fixations < 1:
        raise ParameterError("n_fixations must be >= 1")
    weights = density.weights.reshape(-1)
    if weights.sum() <= 0:
        raise ParameterError("degenerate all-zero density")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    gy, gx = density.weights.shape
    cell_w, cell_h = width / gx, height / gy
    fixations = []
    for _ in range(n_fixations):
        flat = int(np.searchsorted(cdf, rng.random(), side="right"))
        flat = min(flat, weights.size - 1)
        row, col = divmod(flat, gx)
        x = (col + rng.random()) * cell_w
        y = (row + rng.random()) * cell_h
        # Cell rectangles tile [0, w) x [0, h); keep strictly inside bounds.
        fixations.append(Fixation(float(min(x, np.nextafter(width, 0))),
                                  float(min(y, np.nextafter(height, 0)))))
    return Scanpath(image_id, tuple(fixations), source="simulated", model_tag=model_tag)


def wta_scanpath(
    saliency: DensityMap, width: int, height: int, n_fixations: int,
    ior_radius: float,
    image_id: str = "stimulus", model_tag: str = "wta",
) -> Scanpath:
    """Winner-take-all with inhibition of return.

    Repeatedly emits the center of the maximal-saliency cell (row-major
    tie-break), then zeroes every cell whose center lies within
    ``ior_radius`` pixels of the winner.  If the map is exhausted early,
    the shorter scanpath is returned with a SaliencyExhaustedWarning.
    """
    if n_fixations < 1:
        raise ParameterError("n_fixations must be >= 1")
    if ior_radius <= 0:
        raise ParameterError("ior_radius must be positive")
    grid = saliency.weights.copy()
    if grid.max() <= 0:
        raise ParameterError("saliency map is degenerate (all zero)")
    gy, gx = grid.shape
    cell_w, cell_h = width / gx, height / gy
    cols = (np.arange(gx) + 0.5) * cell_w
    rows = (np.arange(gy) + 0.5) * cell_h
    cx, cy = np.meshgrid(cols, rows)

    fixations = []
    for _ in range(n_fixations):
        if grid.max() <= 0:
            warnings.warn(
                f"saliency exhausted after {len(fixations)} of {n_fixations} fixations",
                SaliencyExhaustedWarning,
                stacklevel=2,
            )
            break
        flat = int(np.argmax(grid))  # row-major order breaks ties
        row, col = divmod(flat, gx)
        x, y = cols[col], rows[row]
        fixations.append(Fixation(float(min(x, np.nextafter(width, 0))),
                                  float(min(y, np.nextafter(height, 0)))))
        suppress = (cx - x) ** 2 + (cy - y) ** 2 <= ior_radius ** 2
        grid[suppress] = 0.0
    if not fixations:
        raise ParameterError("saliency produced no fixation")
    return Scanpath(image_id, tuple(fixations), source="simulated", model_tag=model_tag)

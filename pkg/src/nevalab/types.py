"""Shared domain types and coordinate conventions.

Coordinates are continuous pixels with origin at the top-left corner:
``x`` grows rightwards in ``[0, width)`` and ``y`` grows downwards in
``[0, height)``.  Learning rates and finite-difference steps are expressed
in normalized ``[0, 1]`` units so one default works across image sizes.

Everything here is an immutable value object, safe to share between
threads and to use as dictionary keys where hashable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import BoundsError, ParameterError, ParseError

SCANPATH_SOURCES = ("human_click", "human_eyetrack", "simulated")


@dataclass(frozen=True)
class Fixation:
    """A single attended location, in pixels; ``timestamp`` is milliseconds."""

    x: float
    y: float
    timestamp: float | None = None

    def __post_init__(self):
        # Builtin floats keep reprs clean and JSON serialization working.
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if self.timestamp is not None:
            object.__setattr__(self, "timestamp", float(self.timestamp))

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Stimulus:
    """A raster image with RGB channel values normalized to [0, 1]."""

    image_id: str
    pixels: np.ndarray  # (height, width, 3), float, values in [0, 1]

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim == 2:  # grayscale in, replicated to RGB
            px = np.repeat(px[:, :, None], 3, axis=2)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ParameterError(f"expected (H, W, 3) pixel grid, got {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ParameterError("stimulus must be at least 1x1")
        if not np.isfinite(px).all():
            raise ParameterError("stimulus contains non-finite values")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ParameterError("channel values must lie in [0, 1]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def size(self) -> tuple[int, int]:
        """(width, height) in pixels."""
        return (self.width, self.height)

    @classmethod
    def from_file(cls, path, image_id: str | None = None) -> "Stimulus":
        from PIL import Image

        path = Path(path)
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
        return cls(image_id=image_id or path.stem, pixels=arr)

    def center(self) -> Fixation:
        return Fixation(self.width / 2.0, self.height / 2.0)


@dataclass(frozen=True)
class Scanpath:
    """An ordered sequence of fixations over one image."""

    image_id: str
    fixations: tuple[Fixation, ...]
    source: str = "simulated"
    model_tag: str = ""

    def __post_init__(self):
        object.__setattr__(self, "fixations", tuple(self.fixations))
        if len(self.fixations) < 1:
            raise ParameterError("scanpath must contain at least one fixation")
        if self.source not in SCANPATH_SOURCES:
            raise ParameterError(
                f"unknown scanpath source {self.source!r}; expected one of {SCANPATH_SOURCES}"
            )

    def __len__(self) -> int:
        return len(self.fixations)

    def xy(self) -> np.ndarray:
        """(n, 2) array of fixation positions."""
        return np.array([(f.x, f.y) for f in self.fixations], dtype=np.float64)

    def truncated(self, max_length: int) -> "Scanpath":
        if len(self.fixations) <= max_length:
            return self
        return Scanpath(self.image_id, self.fixations[:max_length], self.source, self.model_tag)


@dataclass(frozen=True)
class Observation:
    """One (image, clicks, caption) record from collection or ingestion."""

    session_id: str
    image_id: str
    clicks: Scanpath | None
    caption: str = ""
    skipped: bool = False

    @property
    def n_clicks(self) -> int:
        return 0 if self.clicks is None else len(self.clicks)


@dataclass(frozen=True)
class EngineParams:
    """Configuration of the foveated-exploration engine.

    ``learning_rate`` and ``grad_step`` are in normalized image units;
    ``fov_sigma`` (the foveation reveal spread) and ``blur_sigma`` (the
    coarse-stimulus blur) are in pixels.  ``forgetting`` in [0, 1] decays
    the contribution of previously revealed regions; 0 keeps only the
    current fixation's reveal.
    """

    n_fixations: int = 10
    opt_steps: int = 20
    learning_rate: float = 1.0
    fov_sigma: float = 35.0
    blur_sigma: float = 16.0
    forgetting: float = 0.0
    grad_step: float = 0.02

    def __post_init__(self):
        if self.n_fixations < 1:
            raise ParameterError("n_fixations must be >= 1")
        if self.opt_steps < 1:
            raise ParameterError("opt_steps must be >= 1")
        if self.learning_rate < 0:
            # 0 is allowed: it freezes the candidate, useful for probing.
            raise ParameterError("learning_rate must be non-negative")
        if self.fov_sigma <= 0:
            raise ParameterError("fov_sigma must be positive")
        if self.blur_sigma <= 0:
            raise ParameterError("blur_sigma must be positive")
        if not 0.0 <= self.forgetting <= 1.0:
            raise ParameterError("forgetting must lie in [0, 1]")
        if self.grad_step <= 0:
            raise ParameterError("grad_step must be positive")


# ---------------------------------------------------------------------------
# Coordinate helpers and validation


def in_bounds(f: Fixation, width: int, height: int) -> bool:
    return 0.0 <= f.x < width and 0.0 <= f.y < height


def normalize_fixation(f: Fixation, width: int, height: int) -> tuple[float, float]:
    """Map a pixel fixation to (u, v) in [0, 1]^2.

    Raises BoundsError for fixations outside the image.
    """
    if not in_bounds(f, width, height):
        raise BoundsError(f"fixation ({f.x}, {f.y}) outside {width}x{height} image")
    return (f.x / width, f.y / height)


def denormalize_fixation(u: float, v: float, width: int, height: int) -> Fixation:
    return Fixation(u * width, v * height)


def clamp_fixation(f: Fixation, width: int, height: int) -> Fixation:
    """Clamp each coordinate to [0, dim - 1]; identity inside bounds."""
    x = min(max(f.x, 0.0), float(width - 1))
    y = min(max(f.y, 0.0), float(height - 1))
    if x == f.x and y == f.y:
        return f
    return Fixation(x, y, f.timestamp)


def check_scanpath_bounds(sp: Scanpath, width: int, height: int) -> None:
    for f in sp.fixations:
        if not in_bounds(f, width, height):
            raise BoundsError(
                f"fixation ({f.x}, {f.y}) of scanpath on {sp.image_id!r} "
                f"outside {width}x{height} image"
            )


def as_stimulus(obj, image_id: str = "stimulus") -> Stimulus:
    """Coerce an array-like or Stimulus into a Stimulus (validation helper)."""
    if isinstance(obj, Stimulus):
        return obj
    return Stimulus(image_id=image_id, pixels=np.asarray(obj, dtype=np.float64))


# ---------------------------------------------------------------------------
# JSONL serialization (one JSON object per line; floats keep full precision)


def fixation_to_dict(f: Fixation, time_key: str = "timestamp") -> dict:
    d = {"x": f.x, "y": f.y}
    if f.timestamp is not None:
        d[time_key] = f.timestamp
    return d


def fixation_from_dict(d: dict, time_key: str = "timestamp") -> Fixation:
    return Fixation(float(d["x"]), float(d["y"]), _maybe_float(d.get(time_key)))


def _maybe_float(v):
    return None if v is None else float(v)


def scanpath_to_dict(sp: Scanpath) -> dict:
    return {
        "image_id": sp.image_id,
        "fixations": [fixation_to_dict(f) for f in sp.fixations],
        "source": sp.source,
        "model_tag": sp.model_tag,
    }


def scanpath_from_dict(d: dict) -> Scanpath:
    return Scanpath(
        image_id=str(d["image_id"]),
        fixations=tuple(fixation_from_dict(f) for f in d["fixations"]),
        source=str(d.get("source", "simulated")),
        model_tag=str(d.get("model_tag", "")),
    )


def observation_to_dict(obs: Observation) -> dict:
    clicks = [] if obs.clicks is None else [
        fixation_to_dict(f, time_key="t_ms") for f in obs.clicks.fixations
    ]
    return {
        "session_id": obs.session_id,
        "image_id": obs.image_id,
        "clicks": clicks,
        "caption": obs.caption,
        "skipped": obs.skipped,
    }


def observation_from_dict(d: dict) -> Observation:
    image_id = str(d["image_id"])
    raw_clicks = d.get("clicks", [])
    clicks = None
    if raw_clicks:
        clicks = Scanpath(
            image_id=image_id,
            fixations=tuple(fixation_from_dict(c, time_key="t_ms") for c in raw_clicks),
            source="human_click",
            model_tag="human",
        )
    return Observation(
        session_id=str(d["session_id"]),
        image_id=image_id,
        clicks=clicks,
        caption=str(d.get("caption", "")),
        skipped=bool(d.get("skipped", False)),
    )


def write_jsonl(records: Iterable[dict], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False))
            fh.write("\n")


def iter_jsonl(path) -> Iterator[tuple[int, dict]]:
    """Yield (1-based line number, parsed object); raise ParseError on bad JSON."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc}", path=str(path), line=lineno) from exc
            yield lineno, obj


def write_scanpaths(scanpaths: Sequence[Scanpath], path) -> None:
    write_jsonl((scanpath_to_dict(sp) for sp in scanpaths), path)


def read_scanpaths(path) -> list[Scanpath]:
    return [scanpath_from_dict(obj) for _, obj in iter_jsonl(path)]

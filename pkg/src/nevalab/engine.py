"""Gradient-driven foveated exploration.

A scanpath is generated one fixation at a time.  For each fixation the
engine runs a fixed number of local optimization steps: it composites the
view foveated at the current candidate position, embeds it, measures the
alignment loss ``1 - cosine_similarity`` against a target embedding
(caption text, the clean image, or an explicit vector), estimates the loss
gradient with respect to the fixation position, and descends.  The
candidate with the lowest observed loss becomes the fixation; the search
for the next fixation starts there, which induces a proximity preference.
No random restarts are performed, and the whole procedure is
deterministic for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embedding import EmbeddingBackend, cosine_similarity, embed_image_with_gradient
from .errors import BoundsError, NevalabError, ParameterError
from .foveation import coarse, gaussian_blob
from .types import (
    EngineParams,
    Fixation,
    Scanpath,
    Stimulus,
    clamp_fixation,
    denormalize_fixation,
    in_bounds,
    normalize_fixation,
)

TARGET_KINDS = ("caption_text", "visual_clean_image", "explicit_vector")


@dataclass(frozen=True)
class TargetSpec:
    """What the exploration should align with."""

    kind: str
    payload: object = None

    def __post_init__(self):
        if self.kind not in TARGET_KINDS:
            raise ParameterError(f"unknown target kind {self.kind!r}")
        if self.kind == "caption_text" and not isinstance(self.payload, str):
            raise ParameterError("caption_text target requires a string payload")
        if self.kind == "explicit_vector" and self.payload is None:
            raise ParameterError("explicit_vector target requires a vector payload")

    @classmethod
    def caption(cls, text: str) -> "TargetSpec":
        return cls("caption_text", text)

    @classmethod
    def visual(cls, stimulus: Stimulus | None = None) -> "TargetSpec":
        """Clean-image target; payload None means the explored stimulus itself."""
        return cls("visual_clean_image", stimulus)

    @classmethod
    def vector(cls, values) -> "TargetSpec":
        return cls("explicit_vector", np.asarray(values, dtype=np.float64))


@dataclass(frozen=True)
class TraceStep:
    step: int
    x: float
    y: float
    loss: float


@dataclass
class OptimizationTrace:
    """Per-step record of one fixation's local search."""

    fixation_index: int
    steps: list[TraceStep] = field(default_factory=list)

    @property
    def best_step(self) -> int:
        losses = [s.loss for s in self.steps]
        return int(np.argmin(losses))  # argmin keeps the earliest minimum

    @property
    def best_loss(self) -> float:
        return min(s.loss for s in self.steps)

    def to_dicts(self) -> list[dict]:
        return [
            {"fixation": self.fixation_index, "step": s.step, "x": s.x, "y": s.y, "loss": s.loss}
            for s in self.steps
        ]


class OptimizationAborted(NevalabError, RuntimeError):
    """Backend failure mid-search; carries the partial trace."""

    def __init__(self, message, trace: OptimizationTrace):
        super().__init__(message)
        self.trace = trace


def alignment_loss(e_view: np.ndarray, e_target: np.ndarray) -> float:
    """1 - cosine similarity; 0 when aligned, 2 when antiparallel."""
    return 1.0 - cosine_similarity(e_view, e_target)


def resolve_target(
    backend: EmbeddingBackend, spec: TargetSpec, stimulus: Stimulus | None = None
) -> np.ndarray:
    """Turn a target spec into an embedding vector."""
    if spec.kind == "caption_text":
        return backend.embed_text(spec.payload)
    if spec.kind == "visual_clean_image":
        clean = spec.payload if spec.payload is not None else stimulus
        if clean is None:
            raise ParameterError("visual target needs a stimulus")
        return backend.embed_image(clean)
    return np.asarray(spec.payload, dtype=np.float64)


def optimize_fixation(
    stimulus: Stimulus,
    coarse_pixels: np.ndarray,
    past_masks: Sequence[np.ndarray],
    target_embedding: np.ndarray,
    start: Fixation,
    params: EngineParams,
    backend: EmbeddingBackend,
    fixation_index: int = 0,
) -> tuple[Fixation, OptimizationTrace]:
    """Run exactly ``params.opt_steps`` descent steps from ``start``.

    Every step evaluates the loss at the current candidate, records it,
    and moves against the gradient (in normalized coordinates, clamped
    back into the image).  Returns the candidate with the minimum observed
    loss; ties break toward the earliest step.
    """
    w, h = stimulus.width, stimulus.height
    if not in_bounds(start, w, h):
        raise ParameterError(f"start fixation ({start.x}, {start.y}) outside {w}x{h} image")

    def loss_fn(embedding: np.ndarray) -> float:
        return alignment_loss(embedding, target_embedding)

    trace = OptimizationTrace(fixation_index=fixation_index)
    best_loss = np.inf
    best = start
    current = start
    for m in range(params.opt_steps):
        try:
            loss, grad = embed_image_with_gradient(
                backend, stimulus, coarse_pixels, current, params, loss_fn, past_masks
            )
        except (BoundsError, ParameterError):
            raise  # caller contract violations, not backend failures
        except Exception as exc:
            raise OptimizationAborted(
                f"backend failed at fixation {fixation_index}, step {m}: {exc}", trace
            ) from exc
        trace.steps.append(TraceStep(step=m, x=current.x, y=current.y, loss=loss))
        if loss < best_loss:
            best_loss = loss
            best = current
        u, v = normalize_fixation(current, w, h)
        moved = denormalize_fixation(
            u - params.learning_rate * grad[0],
            v - params.learning_rate * grad[1],
            w, h,
        )
        current = clamp_fixation(moved, w, h)
    return best, trace


def generate_scanpath(
    stimulus: Stimulus,
    target: TargetSpec,
    params: EngineParams,
    backend: EmbeddingBackend,
    *,
    seed_from_center: bool = False,
    model_tag: str = "nevaclip",
    coarse_pixels: np.ndarray | None = None,
) -> tuple[Scanpath, list[OptimizationTrace]]:
    """Generate ``params.n_fixations`` fixations for one stimulus.

    The search for the first fixation starts at the image center; each
    subsequent search starts at the previous fixation's optimized position
    unless ``seed_from_center`` is set.  Past reveals enter the state
    through the forgetting factor in ``params``.
    """
    target_embedding = resolve_target(backend, target, stimulus)
    if coarse_pixels is None:
        coarse_pixels = coarse(stimulus, params.blur_sigma).pixels
    w, h = stimulus.width, stimulus.height

    fixations: list[Fixation] = []
    traces: list[OptimizationTrace] = []
    past_masks: list[np.ndarray] = []
    start = clamp_fixation(stimulus.center(), w, h)
    for t in range(params.n_fixations):
        best, trace = optimize_fixation(
            stimulus, coarse_pixels, past_masks, target_embedding,
            start, params, backend, fixation_index=t,
        )
        fixations.append(best)
        traces.append(trace)
        past_masks.append(gaussian_blob(best, params.fov_sigma, w, h))
        start = clamp_fixation(stimulus.center(), w, h) if seed_from_center else best
    sp = Scanpath(
        image_id=stimulus.image_id,
        fixations=tuple(fixations),
        source="simulated",
        model_tag=model_tag,
    )
    return sp, traces

"""Image/text embedding backends sharing one vector space.

Two backends are provided:

* :class:`SyntheticPatchBackend` — a fully deterministic, dependency-free
  backend used for oracle testing.  Images embed as the L2-normalized
  row-major flattening of a ``p x p`` block-mean downsample of the
  grayscale image; the caption ``"patch:i,j"`` embeds as the canonical
  image that is white in block (i, j) and black elsewhere, and any other
  caption maps to a reproducible pseudorandom unit vector derived from a
  stable hash of its bytes.

* :class:`TorchScriptBackend` — loads pretrained image/text encoders from
  serialized TorchScript archives described by a JSON manifest, executed
  forward-only.  No weights ship with the package.

Gradients of a scalar loss with respect to the fixation position are
estimated with central finite differences in normalized coordinates
(4 extra forward passes), falling back to one-sided stencils where the
probe would leave the unit square.
"""

from __future__ import annotations

import hashlib
import json
import re
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import BackendError, NumericError, ParameterError
from .foveation import cumulative_mask, foveate, gaussian_blob
from .types import EngineParams, Fixation, Stimulus, denormalize_fixation, normalize_fixation

_PATCH_CAPTION = re.compile(r"^patch:(\d+),(\d+)$")


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """S_c(a, b) = (a . b) / (|a| |b|); raises NumericError on zero norms."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise NumericError("cosine similarity undefined for zero-norm vectors")
    return float(np.dot(a, b) / (na * nb))


class EmbeddingBackend(ABC):
    """Uniform interface over paired image/text encoders."""

    name: str = "backend"
    dimension: int = 0
    input_resolution: int = 0
    has_analytic_gradient: bool = False

    @abstractmethod
    def embed_image(self, image) -> np.ndarray:
        """Embed a Stimulus, FoveatedStimulus, or (H, W, 3) pixel grid."""

    @abstractmethod
    def embed_text(self, caption: str) -> np.ndarray:
        """Embed a non-empty caption string."""

    @staticmethod
    def _as_pixels(image) -> np.ndarray:
        pixels = getattr(image, "pixels", image)
        pixels = np.asarray(pixels, dtype=np.float64)
        if pixels.ndim == 2:
            pixels = np.repeat(pixels[:, :, None], 3, axis=2)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ParameterError(f"expected (H, W, 3) pixels, got shape {pixels.shape}")
        return pixels

    def _check_finite(self, vec: np.ndarray) -> np.ndarray:
        if not np.isfinite(vec).all():
            raise NumericError(f"backend {self.name!r} produced non-finite embedding")
        return vec


class SyntheticPatchBackend(EmbeddingBackend):
    """Deterministic block-mean backend for oracle tests."""

    has_analytic_gradient = False

    def __init__(self, patch_grid: int = 8):
        if patch_grid < 1:
            raise ParameterError("patch_grid must be >= 1")
        self.patch_grid = int(patch_grid)
        self.dimension = self.patch_grid ** 2
        self.input_resolution = self.patch_grid
        self.name = f"synthetic-patch-{self.patch_grid}"

    def embed_image(self, image) -> np.ndarray:
        pixels = self._as_pixels(image)
        gray = pixels.mean(axis=2)
        means = block_means(gray, self.patch_grid, self.patch_grid)
        flat = means.reshape(-1)
        norm = np.linalg.norm(flat)
        if norm == 0.0:
            # Zero-input fallback: first standard basis vector.
            out = np.zeros(self.dimension)
            out[0] = 1.0
            return out
        return flat / norm

    def embed_text(self, caption: str) -> np.ndarray:
        if not caption:
            raise ParameterError("caption must be non-empty")
        m = _PATCH_CAPTION.match(caption)
        if m:
            i, j = int(m.group(1)), int(m.group(2))
            if i < self.patch_grid and j < self.patch_grid:
                return self.embed_image(self.canonical_patch_image(i, j).pixels)
        digest = hashlib.sha256(caption.encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        vec = rng.standard_normal(self.dimension)
        return vec / np.linalg.norm(vec)

    def canonical_patch_image(self, i: int, j: int, cell_px: int = 8) -> Stimulus:
        """The image that is white in block (i, j) and black elsewhere."""
        p = self.patch_grid
        if not (0 <= i < p and 0 <= j < p):
            raise ParameterError(f"block ({i}, {j}) outside {p}x{p} grid")
        px = np.zeros((p * cell_px, p * cell_px, 3))
        px[i * cell_px:(i + 1) * cell_px, j * cell_px:(j + 1) * cell_px, :] = 1.0
        return Stimulus(image_id=f"patch-{i}-{j}", pixels=px)


def block_means(gray: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Downsample a 2-D array to (rows, cols) by block averaging.

    Block boundaries are floor(k * size / n), so uneven sizes yield cells
    differing by at most one pixel.
    """
    h, w = gray.shape
    if rows > h or cols > w:
        raise ParameterError(f"cannot average {h}x{w} image into {rows}x{cols} blocks")
    r_idx = (np.arange(rows) * h) // rows
    c_idx = (np.arange(cols) * w) // cols
    sums = np.add.reduceat(np.add.reduceat(gray, r_idx, axis=0), c_idx, axis=1)
    r_count = np.diff(np.append(r_idx, h))
    c_count = np.diff(np.append(c_idx, w))
    return sums / np.outer(r_count, c_count)


class TorchScriptBackend(EmbeddingBackend):
    """Pretrained encoders from TorchScript archives, executed forward-only.

    Manifest (JSON): {name, dimension, input_resolution, image_model_path,
    text_model_path, tokenizer_path}; optional image_mean/image_std override
    the channelwise preprocessing statistics.  Paths are resolved relative
    to the manifest file.
    """

    DEFAULT_MEAN = (0.48145466, 0.4578275, 0.40821073)
    DEFAULT_STD = (0.26862954, 0.26130258, 0.27577711)

    def __init__(self, manifest_path):
        manifest_path = Path(manifest_path)
        try:
            manifest = json.loads(manifest_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise BackendError(f"cannot read backend manifest {manifest_path}: {exc}") from exc
        try:
            self.name = str(manifest["name"])
            self.dimension = int(manifest["dimension"])
            self.input_resolution = int(manifest["input_resolution"])
            image_path = manifest_path.parent / manifest["image_model_path"]
            text_path = manifest_path.parent / manifest["text_model_path"]
            tokenizer_path = manifest_path.parent / manifest["tokenizer_path"]
        except KeyError as exc:
            raise BackendError(f"backend manifest missing field {exc}") from exc
        self._mean = np.asarray(manifest.get("image_mean", self.DEFAULT_MEAN), dtype=np.float32)
        self._std = np.asarray(manifest.get("image_std", self.DEFAULT_STD), dtype=np.float32)

        try:
            import torch
        except ImportError as exc:
            raise BackendError("torch is required to load TorchScript backends") from exc
        self._torch = torch
        try:
            self._image_model = torch.jit.load(str(image_path), map_location="cpu").eval()
            self._text_model = torch.jit.load(str(text_path), map_location="cpu").eval()
        except Exception as exc:
            raise BackendError(f"failed to load backend models: {exc}") from exc
        self._tokenizer = self._load_tokenizer(tokenizer_path)

    @staticmethod
    def _load_tokenizer(path: Path):
        try:
            from transformers import AutoTokenizer
        except ImportError as exc:
            raise BackendError("transformers is required for the tokenizer asset") from exc
        try:
            return AutoTokenizer.from_pretrained(str(path))
        except Exception as exc:
            raise BackendError(f"failed to load tokenizer from {path}: {exc}") from exc

    def embed_image(self, image) -> np.ndarray:
        torch = self._torch
        pixels = self._as_pixels(image).astype(np.float32)
        tensor = torch.from_numpy(pixels).permute(2, 0, 1).unsqueeze(0)
        res = self.input_resolution
        if tensor.shape[-2:] != (res, res):
            tensor = torch.nn.functional.interpolate(
                tensor, size=(res, res), mode="bilinear", align_corners=False
            )
        mean = torch.from_numpy(self._mean).view(1, 3, 1, 1)
        std = torch.from_numpy(self._std).view(1, 3, 1, 1)
        tensor = (tensor - mean) / std
        with torch.no_grad():
            out = self._image_model(tensor)
        vec = out.squeeze(0).numpy().astype(np.float64)
        return self._check_finite(vec)

    def embed_text(self, caption: str) -> np.ndarray:
        if not caption:
            raise ParameterError("caption must be non-empty")
        torch = self._torch
        tokens = self._tokenizer(caption, return_tensors="pt", padding="max_length",
                                 truncation=True, max_length=77)
        with torch.no_grad():
            out = self._text_model(tokens["input_ids"])
        vec = out.squeeze(0).numpy().astype(np.float64)
        return self._check_finite(vec)


def load_backend(spec) -> EmbeddingBackend:
    """Build a backend from a config mapping or a manifest path.

    ``{"kind": "synthetic", "patch_grid": 8}`` or
    ``{"kind": "manifest", "manifest": "backend.json"}``; a bare string is
    treated as a manifest path (or the literal ``"synthetic"``).
    """
    if isinstance(spec, EmbeddingBackend):
        return spec
    if isinstance(spec, (str, Path)):
        if str(spec) == "synthetic":
            return SyntheticPatchBackend()
        return TorchScriptBackend(spec)
    kind = spec.get("kind", "synthetic")
    if kind == "synthetic":
        return SyntheticPatchBackend(patch_grid=int(spec.get("patch_grid", 8)))
    if kind == "manifest":
        try:
            return TorchScriptBackend(spec["manifest"])
        except KeyError as exc:
            raise BackendError("manifest backend config requires a 'manifest' path") from exc
    raise BackendError(f"unknown backend kind {kind!r}")


# ---------------------------------------------------------------------------
# Loss gradients with respect to the fixation position


def foveated_loss(
    backend: EmbeddingBackend,
    stimulus: Stimulus,
    coarse_pixels: np.ndarray,
    fixation: Fixation,
    params: EngineParams,
    loss_fn: Callable[[np.ndarray], float],
    past_masks: Sequence[np.ndarray] = (),
) -> float:
    """Loss of the embedding of the view foveated at ``fixation``."""
    blob = gaussian_blob(fixation, params.fov_sigma, stimulus.width, stimulus.height)
    mask = cumulative_mask(past_masks, blob, params.forgetting)
    view = foveate(stimulus, coarse_pixels, mask)
    return float(loss_fn(backend.embed_image(view.pixels)))


def embed_image_with_gradient(
    backend: EmbeddingBackend,
    stimulus: Stimulus,
    coarse_pixels: np.ndarray,
    fixation: Fixation,
    params: EngineParams,
    loss_fn: Callable[[np.ndarray], float],
    past_masks: Sequence[np.ndarray] = (),
) -> tuple[float, np.ndarray]:
    """Loss at ``fixation`` plus its gradient in normalized coordinates.

    Backends advertising an analytic gradient are delegated to; otherwise
    central finite differences with step ``params.grad_step`` are used on
    each coordinate (4 extra forward passes), one-sided where the stencil
    would leave [0, 1].
    """
    if backend.has_analytic_gradient:
        return backend.loss_and_gradient(  # type: ignore[attr-defined]
            stimulus, coarse_pixels, fixation, params, loss_fn, past_masks
        )

    w, h = stimulus.width, stimulus.height

    def loss_at(u: float, v: float) -> float:
        return foveated_loss(
            backend, stimulus, coarse_pixels,
            denormalize_fixation(u, v, w, h), params, loss_fn, past_masks,
        )

    u0, v0 = normalize_fixation(fixation, w, h)
    base = loss_at(u0, v0)
    step = params.grad_step

    def fd(x0: float, probe: Callable[[float], float]) -> float:
        lo, hi = x0 - step, x0 + step
        if lo >= 0.0 and hi <= 1.0:
            return (probe(hi) - probe(lo)) / (2.0 * step)
        if hi > 1.0:  # one-sided at the border
            return (base - probe(lo)) / step
        return (probe(hi) - base) / step

    grad = np.array([
        fd(u0, lambda u: loss_at(u, v0)),
        fd(v0, lambda v: loss_at(u0, v)),
    ])
    return base, grad

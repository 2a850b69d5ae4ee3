"""Scanpath generators behind a scikit-learn style estimator API.

Every model takes its configuration in ``__init__`` (so ``get_params`` /
``set_params`` and grid search compose), optionally learns state in
``fit``, and maps a sequence of stimuli to a list of Scanpaths in
``predict``.  Randomized models accept explicit per-item seeds so
experiment runs stay reproducible regardless of job order.
"""

from __future__ import annotations

import hashlib
from typing import Mapping, Sequence

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import baselines, dataset, engine
from .baselines import DensityMap
from .embedding import EmbeddingBackend
from .errors import ParameterError
from .types import EngineParams, Scanpath, Stimulus, as_stimulus


def stable_seed(*parts) -> int:
    """A process-independent 63-bit seed derived from string parts."""
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


class ScanpathModel(BaseEstimator):
    """Base class: fit is a no-op unless a model needs dataset state."""

    def fit(self, X=None, y=None, **kwargs):
        return self

    def predict(
        self,
        X: Sequence[Stimulus],
        targets: Sequence | None = None,
        seeds: Sequence[int] | None = None,
    ) -> list[Scanpath]:
        stimuli = [as_stimulus(x) for x in X]
        if targets is not None and len(targets) != len(stimuli):
            raise ParameterError("targets must match stimuli one to one")
        if seeds is not None and len(seeds) != len(stimuli):
            raise ParameterError("seeds must match stimuli one to one")
        out = []
        for i, stim in enumerate(stimuli):
            target = targets[i] if targets is not None else None
            seed = seeds[i] if seeds is not None else self._default_seed(stim, i)
            out.append(self.predict_one(stim, target=target, seed=seed))
        return out

    def predict_one(self, stimulus: Stimulus, target=None, seed: int = 0) -> Scanpath:
        raise NotImplementedError

    def _default_seed(self, stimulus: Stimulus, index: int) -> int:
        base = getattr(self, "random_state", 0) or 0
        return stable_seed(type(self).__name__, base, stimulus.image_id, index)


class RandomScanpaths(ScanpathModel):
    """Uniform fixations over the stimulus area."""

    def __init__(self, n_fixations: int = 10, random_state: int = 0):
        self.n_fixations = n_fixations
        self.random_state = random_state

    def predict_one(self, stimulus, target=None, seed=0):
        return baselines.random_scanpath(
            stimulus.width, stimulus.height, self.n_fixations, seed,
            image_id=stimulus.image_id,
        )


class CenterScanpaths(ScanpathModel):
    """Centered-Gaussian fixations; an explicit center density replaces it."""

    def __init__(self, n_fixations: int = 10, sigma_frac: float = 0.22,
                 density: DensityMap | None = None, random_state: int = 0):
        self.n_fixations = n_fixations
        self.sigma_frac = sigma_frac
        self.density = density
        self.random_state = random_state

    def predict_one(self, stimulus, target=None, seed=0):
        if self.density is not None:
            sp = baselines.density_scanpath(
                self.density, stimulus.width, stimulus.height, self.n_fixations, seed,
                image_id=stimulus.image_id,
            )
            return Scanpath(sp.image_id, sp.fixations, sp.source, "center")
        return baselines.center_scanpath(
            stimulus.width, stimulus.height, self.n_fixations, seed,
            sigma_frac=self.sigma_frac, image_id=stimulus.image_id,
        )


class ClickDensityScanpaths(ScanpathModel):
    """Fixations sampled from the click density of a whole dataset."""

    def __init__(self, n_fixations: int = 10, bandwidth: float | None = None,
                 grid: tuple[int, int] = (64, 64), random_state: int = 0):
        self.n_fixations = n_fixations
        self.bandwidth = bandwidth
        self.grid = grid
        self.random_state = random_state

    def fit(self, X, y=None, image_sizes: Mapping[str, tuple[int, int]] | None = None):
        """X: observations to cumulate clicks from."""
        if image_sizes is None:
            raise ParameterError("fit requires image_sizes for click normalization")
        self.density_ = dataset.click_density(
            X, image_sizes, bandwidth=self.bandwidth, grid=self.grid
        )
        return self

    def predict_one(self, stimulus, target=None, seed=0):
        if not hasattr(self, "density_"):
            raise NotFittedError("ClickDensityScanpaths must be fit on observations first")
        sp = baselines.density_scanpath(
            self.density_, stimulus.width, stimulus.height, self.n_fixations, seed,
            image_id=stimulus.image_id,
        )
        return Scanpath(sp.image_id, sp.fixations, sp.source, "clicks_density")


class SaliencyWtaScanpaths(ScanpathModel):
    """Winner-take-all over a supplied saliency (or density) map."""

    def __init__(self, saliency: DensityMap | None = None, n_fixations: int = 10,
                 ior_radius: float = 64.0):
        self.saliency = saliency
        self.n_fixations = n_fixations
        self.ior_radius = ior_radius

    def fit(self, X=None, y=None, saliency: DensityMap | None = None):
        if saliency is not None:
            self.saliency_ = saliency
        elif self.saliency is not None:
            self.saliency_ = self.saliency
        else:
            raise ParameterError("a saliency map is required")
        return self

    def predict_one(self, stimulus, target=None, seed=0):
        saliency = getattr(self, "saliency_", None)
        if saliency is None:
            saliency = self.saliency
        if saliency is None:
            raise NotFittedError("SaliencyWtaScanpaths needs a saliency map")
        return baselines.wta_scanpath(
            saliency, stimulus.width, stimulus.height, self.n_fixations,
            self.ior_radius, image_id=stimulus.image_id,
        )


class NevaClipScanpaths(ScanpathModel):
    """Gradient-driven foveated exploration against an embedding target.

    ``predict`` takes one TargetSpec per stimulus; items with target None
    fall back to the clean-image (visually guided) target.  Generation is
    deterministic, so seeds are ignored.
    """

    def __init__(self, backend: EmbeddingBackend | None = None,
                 n_fixations: int = 10, opt_steps: int = 20,
                 learning_rate: float = 1.0, fov_sigma: float = 35.0,
                 blur_sigma: float = 16.0, forgetting: float = 0.0,
                 grad_step: float = 0.02, seed_from_center: bool = False,
                 model_tag: str = "nevaclip"):
        self.backend = backend
        self.n_fixations = n_fixations
        self.opt_steps = opt_steps
        self.learning_rate = learning_rate
        self.fov_sigma = fov_sigma
        self.blur_sigma = blur_sigma
        self.forgetting = forgetting
        self.grad_step = grad_step
        self.seed_from_center = seed_from_center
        self.model_tag = model_tag
        self._traces: list = []

    def engine_params(self) -> EngineParams:
        return EngineParams(
            n_fixations=self.n_fixations, opt_steps=self.opt_steps,
            learning_rate=self.learning_rate, fov_sigma=self.fov_sigma,
            blur_sigma=self.blur_sigma, forgetting=self.forgetting,
            grad_step=self.grad_step,
        )

    def predict(self, X, targets=None, seeds=None):
        self._traces = []
        return super().predict(X, targets=targets, seeds=seeds)

    def predict_one(self, stimulus, target=None, seed=0):
        if self.backend is None:
            raise ParameterError("NevaClipScanpaths requires an embedding backend")
        if target is None:
            target = engine.TargetSpec.visual()
        sp, traces = engine.generate_scanpath(
            stimulus, target, self.engine_params(), self.backend,
            seed_from_center=self.seed_from_center, model_tag=self.model_tag,
        )
        self._traces.append(traces)
        return sp

    @property
    def last_traces_(self) -> list:
        """Optimization traces from the most recent predict call."""
        return self._traces

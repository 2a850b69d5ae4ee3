"""nevalab: simulate and evaluate task-driven visual scanpaths."""

from .baselines import DensityMap
from .embedding import SyntheticPatchBackend, cosine_similarity, load_backend
from .engine import TargetSpec, alignment_loss, generate_scanpath
from .foveation import coarse, cumulative_mask, foveate, gaussian_blob
from .metrics import SppReport, edit_distance, quantize, sbtde_k, spp_k, spp_summary
from .models import (
    CenterScanpaths,
    ClickDensityScanpaths,
    NevaClipScanpaths,
    RandomScanpaths,
    SaliencyWtaScanpaths,
)
from .types import EngineParams, Fixation, Observation, Scanpath, Stimulus

__version__ = "0.1.0"

__all__ = [
    "CenterScanpaths",
    "ClickDensityScanpaths",
    "DensityMap",
    "EngineParams",
    "Fixation",
    "NevaClipScanpaths",
    "Observation",
    "RandomScanpaths",
    "SaliencyWtaScanpaths",
    "Scanpath",
    "SppReport",
    "Stimulus",
    "SyntheticPatchBackend",
    "TargetSpec",
    "alignment_loss",
    "coarse",
    "cosine_similarity",
    "cumulative_mask",
    "edit_distance",
    "foveate",
    "gaussian_blob",
    "generate_scanpath",
    "load_backend",
    "quantize",
    "sbtde_k",
    "spp_k",
    "spp_summary",
    "__version__",
]

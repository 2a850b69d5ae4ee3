import numpy as np
import pytest
from PIL import Image

from nevalab import Stimulus, SyntheticPatchBackend
from nevalab.dataset import save_observations
from nevalab.types import Fixation, Observation, Scanpath

from .scenes import highlighted_carpet


@pytest.fixture
def backend():
    return SyntheticPatchBackend(8)


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


@pytest.fixture
def random_stimulus(rng):
    return Stimulus("rand64", rng.random((64, 64, 3)))


def build_corpus(root, n_images=3, sessions=("sA", "sB")):
    """Write a small image pool + observation log + eyetrack CSV to disk.

    Images are highlighted bump carpets whose designated cell walks the
    interior diagonally; every session captions every image with the
    designated cell's patch caption and clicks near it.
    """
    images_dir = root / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    cells = [(1 + (i % 6), 1 + ((2 * i) % 6)) for i in range(n_images)]
    observations = []
    eyetrack_rows = ["image_id,subject,ordinal,x,y"]
    for i, cell in enumerate(cells):
        image_id = f"img{i:02d}"
        stim = highlighted_carpet(image_id, cell)
        Image.fromarray((stim.pixels * 255).astype(np.uint8)).save(
            images_dir / f"{image_id}.png"
        )
        cx, cy = cell[1] * 8 + 3.5, cell[0] * 8 + 3.5
        for s_idx, session in enumerate(sessions):
            jitter = 0.5 * s_idx
            clicks = Scanpath(
                image_id,
                tuple(Fixation(cx + jitter, cy + jitter, timestamp=float(100 * t))
                      for t in range(3)),
                source="human_click", model_tag="human",
            )
            observations.append(Observation(
                session_id=session, image_id=image_id, clicks=clicks,
                caption=f"patch:{cell[0]},{cell[1]}", skipped=False,
            ))
        for t in range(3):
            eyetrack_rows.append(f"{image_id},subj1,{t},{cx + t},{cy}")
    obs_path = root / "observations.jsonl"
    save_observations(observations, obs_path)
    eyetrack_path = root / "eyetrack.csv"
    eyetrack_path.write_text("\n".join(eyetrack_rows) + "\n")
    return {
        "images_dir": images_dir,
        "observations": obs_path,
        "eyetrack": eyetrack_path,
        "cells": cells,
        "n_observations": len(observations),
    }


@pytest.fixture
def corpus(tmp_path):
    return build_corpus(tmp_path)

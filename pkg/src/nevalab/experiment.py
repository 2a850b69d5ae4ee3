"""Configuration-driven experiment runner.

A single YAML config names the dataset files, the embedding backend, the
models to run (engine variants and baselines), and the metric grid.  The
runner generates one scanpath per (observation, model), evaluates
plausibility against the click and eye-tracking references, and writes
everything under one timestamped directory:

    run-<stamp>-<hash>/
      manifest.json          resolved config, hash, target assignments
      scanpaths/<model>.jsonl
      traces/<model>.jsonl   (with trace: true)
      reports/spp.csv        (model, dataset, k, mean, std) rows + summaries
      overlays/              (written by the render command)

Every random choice derives from the config seed, so a rerun reproduces
all outputs bit for bit.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import yaml

from . import dataset as ds
from .baselines import DensityMap
from .embedding import load_backend
from .engine import TargetSpec, generate_scanpath
from .errors import ParameterError
from .metrics import spp_summary, write_spp_csv
from .models import (
    CenterScanpaths,
    ClickDensityScanpaths,
    NevaClipScanpaths,
    RandomScanpaths,
    SaliencyWtaScanpaths,
    stable_seed,
)
from .types import Observation, Scanpath, Stimulus, write_jsonl, write_scanpaths

TARGET_VARIANTS = (
    "correct_caption",
    "different_caption_same_image",
    "different_caption_different_image",
    "visually_guided",
)

MODEL_KINDS = ("nevaclip", "random", "center", "clicks_density", "wta")


@dataclass
class ModelConfig:
    name: str
    kind: str
    target_variant: str = "correct_caption"
    options: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    images_dir: Path
    observations: Path
    output_dir: Path = Path("runs")
    eyetrack: Path | None = None
    backend: dict = field(default_factory=lambda: {"kind": "synthetic"})
    models: list[ModelConfig] = field(default_factory=list)
    engine: dict = field(default_factory=dict)
    metric_grid: tuple[int, int] = (8, 8)
    k_max: int = 10
    seed: int = 0
    workers: int = 1
    trace: bool = False

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        raw = yaml.safe_load(path.read_text())
        if not isinstance(raw, dict):
            raise ParameterError(f"config {path} is not a mapping")
        return cls.from_dict(raw, base=path.parent)

    @classmethod
    def from_dict(cls, raw: dict, base: Path = Path(".")) -> "ExperimentConfig":
        def respath(key, required=False):
            value = raw.get(key)
            if value is None:
                if required:
                    raise ParameterError(f"config missing required path {key!r}")
                return None
            p = Path(value)
            return p if p.is_absolute() else base / p

        models = []
        seen = set()
        for m in raw.get("models", []):
            name = m.get("name")
            kind = m.get("kind")
            if not name or kind not in MODEL_KINDS:
                raise ParameterError(f"model entry needs a name and a kind from {MODEL_KINDS}")
            if name in seen:
                raise ParameterError(f"duplicate model name {name!r}")
            seen.add(name)
            variant = m.get("target_variant", "correct_caption")
            if variant not in TARGET_VARIANTS:
                raise ParameterError(f"unknown target variant {variant!r}")
            options = {k: v for k, v in m.items() if k not in ("name", "kind", "target_variant")}
            models.append(ModelConfig(name=name, kind=kind, target_variant=variant,
                                      options=options))
        if not models:
            raise ParameterError("config lists no models")

        backend = raw.get("backend", {"kind": "synthetic"})
        if isinstance(backend, dict) and "manifest" in backend:
            manifest = Path(backend["manifest"])
            backend = dict(backend)
            backend["manifest"] = str(manifest if manifest.is_absolute() else base / manifest)

        grid = raw.get("metric_grid", [8, 8])
        config = cls(
            images_dir=respath("images_dir", required=True),
            observations=respath("observations", required=True),
            eyetrack=respath("eyetrack"),
            output_dir=respath("output_dir") or base / "runs",
            backend=backend,
            models=models,
            engine=dict(raw.get("engine", {})),
            metric_grid=(int(grid[0]), int(grid[1])),
            k_max=int(raw.get("k_max", 10)),
            seed=int(raw.get("seed", 0)),
            workers=int(raw.get("workers", 1)),
            trace=bool(raw.get("trace", False)),
        )
        config.validate()
        return config

    def validate(self) -> None:
        if not Path(self.images_dir).is_dir():
            raise ParameterError(f"images_dir {self.images_dir} does not exist")
        if not Path(self.observations).is_file():
            raise ParameterError(f"observations file {self.observations} does not exist")
        if self.eyetrack is not None and not Path(self.eyetrack).is_file():
            raise ParameterError(f"eyetrack file {self.eyetrack} does not exist")
        if isinstance(self.backend, dict) and self.backend.get("kind") == "manifest":
            if not Path(self.backend["manifest"]).is_file():
                raise ParameterError(f"backend manifest {self.backend['manifest']} does not exist")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")

    def to_dict(self) -> dict:
        return {
            "images_dir": str(self.images_dir),
            "observations": str(self.observations),
            "eyetrack": None if self.eyetrack is None else str(self.eyetrack),
            "output_dir": str(self.output_dir),
            "backend": self.backend,
            "models": [
                {"name": m.name, "kind": m.kind, "target_variant": m.target_variant,
                 **m.options}
                for m in self.models
            ],
            "engine": self.engine,
            "metric_grid": list(self.metric_grid),
            "k_max": self.k_max,
            "seed": self.seed,
            "workers": self.workers,
            "trace": self.trace,
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Target assignment


def assign_targets(
    observations: Sequence[Observation], variant: str, seed: int
) -> tuple[list[tuple[Observation, TargetSpec]], list[dict]]:
    """Pair each observation with its exploration target.

    Mismatched variants draw uniformly (seeded per observation) from the
    captions of other subjects on the same image, or from other images.
    Observations with no alternative available are skipped and reported.
    """
    if variant not in TARGET_VARIANTS:
        raise ParameterError(f"unknown target variant {variant!r}")
    by_image: dict[str, list[Observation]] = {}
    for obs in observations:
        by_image.setdefault(obs.image_id, []).append(obs)

    assigned: list[tuple[Observation, TargetSpec]] = []
    report: list[dict] = []
    for obs in observations:
        entry = {"session_id": obs.session_id, "image_id": obs.image_id, "variant": variant}
        if variant == "visually_guided":
            assigned.append((obs, TargetSpec.visual()))
            entry["caption_from"] = None
        elif variant == "correct_caption":
            assigned.append((obs, TargetSpec.caption(obs.caption)))
            entry["caption_from"] = {"session_id": obs.session_id, "image_id": obs.image_id}
        else:
            if variant == "different_caption_same_image":
                pool = [o for o in by_image[obs.image_id]
                        if o.session_id != obs.session_id and o.caption]
            else:
                pool = [o for o in observations if o.image_id != obs.image_id and o.caption]
            if not pool:
                entry["skipped"] = "no alternative caption available"
                report.append(entry)
                continue
            rng = np.random.default_rng(
                stable_seed(seed, "target", variant, obs.session_id, obs.image_id)
            )
            donor = pool[int(rng.integers(len(pool)))]
            assigned.append((obs, TargetSpec.caption(donor.caption)))
            entry["caption_from"] = {"session_id": donor.session_id,
                                     "image_id": donor.image_id}
        report.append(entry)
    return assigned, report


# ---------------------------------------------------------------------------
# Model construction


def build_model(spec: ModelConfig, config: ExperimentConfig, backend, context: dict):
    """Instantiate and (where needed) fit the model named by a config entry."""
    opts = dict(spec.options)
    n_fix = int(opts.pop("n_fixations", config.engine.get("n_fixations", 10)))
    if spec.kind == "random":
        return RandomScanpaths(n_fixations=n_fix, random_state=config.seed)
    if spec.kind == "center":
        density = None
        if "density" in opts:
            density = DensityMap.load(_resolve(opts.pop("density"), config))
        return CenterScanpaths(
            n_fixations=n_fix, sigma_frac=float(opts.pop("sigma_frac", 0.22)),
            density=density, random_state=config.seed,
        )
    if spec.kind == "clicks_density":
        model = ClickDensityScanpaths(
            n_fixations=n_fix, bandwidth=opts.pop("bandwidth", None),
            random_state=config.seed,
        )
        return model.fit(context["observations"], image_sizes=context["image_sizes"])
    if spec.kind == "wta":
        if "saliency" in opts:
            saliency = DensityMap.load(_resolve(opts.pop("saliency"), config))
        else:  # default to the dataset's click density
            saliency = ds.click_density(context["observations"], context["image_sizes"])
        return SaliencyWtaScanpaths(
            saliency=saliency, n_fixations=n_fix,
            ior_radius=float(opts.pop("ior_radius", 64.0)),
        ).fit()
    if spec.kind == "nevaclip":
        engine_opts = {**config.engine, **opts}
        engine_opts.pop("n_fixations", None)
        return NevaClipScanpaths(
            backend=backend, n_fixations=n_fix, model_tag=spec.name, **engine_opts
        )
    raise ParameterError(f"unknown model kind {spec.kind!r}")


def _resolve(path, config: ExperimentConfig) -> Path:
    p = Path(path)
    return p if p.is_absolute() else Path(config.observations).parent / p


# ---------------------------------------------------------------------------
# Running


def load_image_pool(images_dir) -> dict[str, Path]:
    """image_id (filename stem) -> file path, for common raster suffixes."""
    pool = {}
    for p in sorted(Path(images_dir).iterdir()):
        if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp"):
            pool[p.stem] = p
    return pool


def read_image_sizes(pool: Mapping[str, Path]) -> dict[str, tuple[int, int]]:
    from PIL import Image

    sizes = {}
    for image_id, path in pool.items():
        with Image.open(path) as im:
            sizes[image_id] = im.size  # (width, height)
    return sizes


def run(config: ExperimentConfig, out_dir: Path | None = None) -> Path:
    """Execute a full experiment; returns the results directory."""
    config.validate()
    backend = load_backend(config.backend)
    pool = load_image_pool(config.images_dir)
    image_sizes = read_image_sizes(pool)

    observations, parse_errors = ds.load_observations(config.observations)
    kept, exclusions = ds.apply_exclusions(observations)
    usable = [o for o in kept if o.image_id in pool]

    if out_dir is None:
        stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%SZ")
        out_dir = Path(config.output_dir) / f"run-{stamp}-{config.config_hash()[:8]}"
    out_dir = Path(out_dir)
    (out_dir / "scanpaths").mkdir(parents=True, exist_ok=True)
    (out_dir / "reports").mkdir(exist_ok=True)

    context = {"observations": usable, "image_sizes": image_sizes}
    stimuli_cache: dict[str, Stimulus] = {}

    def stimulus_for(image_id: str) -> Stimulus:
        if image_id not in stimuli_cache:
            stimuli_cache[image_id] = Stimulus.from_file(pool[image_id], image_id=image_id)
        return stimuli_cache[image_id]

    manifest: dict = {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "package_version": _package_version(),
        "n_observations": len(observations),
        "n_usable": len(usable),
        "parse_errors": [str(e) for e in parse_errors],
        "exclusions": {
            "skipped": exclusions.skipped,
            "no_clicks": exclusions.no_clicks,
            "short_caption": exclusions.short_caption,
        },
        "target_assignments": {},
        "failures": {},
    }

    scanpaths_by_model: dict[str, list[Scanpath]] = {}
    for spec in config.models:
        model = build_model(spec, config, backend, context)
        jobs, report = _build_jobs(spec, usable, config)
        manifest["target_assignments"][spec.name] = report
        results, traces, failures = _execute(model, spec, jobs, stimulus_for, config)
        manifest["failures"][spec.name] = failures
        scanpaths_by_model[spec.name] = results
        write_scanpaths(results, out_dir / "scanpaths" / f"{spec.name}.jsonl")
        if config.trace and traces:
            (out_dir / "traces").mkdir(exist_ok=True)
            write_jsonl(traces, out_dir / "traces" / f"{spec.name}.jsonl")

    reports = evaluate(scanpaths_by_model, usable, config, image_sizes)
    write_spp_csv(reports, out_dir / "reports" / "spp.csv")
    manifest["outputs"] = sorted(
        str(p.relative_to(out_dir)) for p in out_dir.rglob("*") if p.is_file()
    ) + ["manifest.json"]
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return out_dir


def _build_jobs(spec: ModelConfig, usable: Sequence[Observation], config: ExperimentConfig):
    """Deterministically ordered (observation, target, seed) triples."""
    if spec.kind == "nevaclip":
        assigned, report = assign_targets(usable, spec.target_variant, config.seed)
    else:
        assigned = [(obs, None) for obs in usable]
        report = [{"session_id": o.session_id, "image_id": o.image_id, "variant": None}
                  for o in usable]
    jobs = []
    for obs, target in sorted(
        ((o, t) for o, t in assigned), key=lambda p: (p[0].image_id, p[0].session_id)
    ):
        seed = stable_seed(config.seed, spec.name, obs.image_id, obs.session_id)
        jobs.append((obs, target, seed))
    return jobs, report


def _execute(model, spec: ModelConfig, jobs, stimulus_for, config: ExperimentConfig):
    def one(job):
        obs, target, seed = job
        stimulus = stimulus_for(obs.image_id)
        if spec.kind == "nevaclip":
            sp, traces = generate_scanpath(
                stimulus, target, model.engine_params(), model.backend,
                seed_from_center=model.seed_from_center, model_tag=spec.name,
            )
            trace_rows = [row for t in traces for row in t.to_dicts()] if config.trace else []
            for row in trace_rows:
                row["image_id"] = obs.image_id
                row["session_id"] = obs.session_id
            return sp, trace_rows
        return model.predict_one(stimulus, target=target, seed=seed), []

    results: list[Scanpath] = []
    trace_rows: list[dict] = []
    failures: list[dict] = []
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_guard(one), jobs))
    else:
        outcomes = [_guard(one)(job) for job in jobs]
    for job, outcome in zip(jobs, outcomes):
        obs = job[0]
        if isinstance(outcome, Exception):
            failures.append({"image_id": obs.image_id, "session_id": obs.session_id,
                             "error": str(outcome)})
            continue
        sp, rows = outcome
        results.append(sp)
        trace_rows.extend(rows)
    return results, trace_rows, failures


def _guard(fn):
    def wrapped(job):
        try:
            return fn(job)
        except Exception as exc:  # per-image failures are logged, not fatal
            return exc

    return wrapped


def evaluate(
    scanpaths_by_model: Mapping[str, Sequence[Scanpath]],
    observations: Sequence[Observation],
    config: ExperimentConfig,
    image_sizes: Mapping[str, tuple[int, int]],
):
    """SPP reports for every (model, dataset) pair.

    Human references longer than k_max are truncated to k_max fixations,
    mirroring the min(length, 10) evaluation rule.
    """
    reference_sets: dict[str, dict[str, list[Scanpath]]] = {}
    clicks = [sp.truncated(config.k_max) for sp in ds.click_scanpaths(observations)]
    if clicks:
        reference_sets["capmit1003"] = ds.scanpaths_by_image(clicks)
    if config.eyetrack is not None:
        eyetrack = [sp.truncated(config.k_max) for sp in ds.load_eyetrack(config.eyetrack)]
        if eyetrack:
            reference_sets["mit1003"] = ds.scanpaths_by_image(eyetrack)

    reports = {}
    for name, scanpaths in scanpaths_by_model.items():
        for dataset_name, humans in reference_sets.items():
            reports[(name, dataset_name)] = spp_summary(
                scanpaths, humans, image_sizes, grid=config.metric_grid, k_max=config.k_max
            )
    return reports


def _package_version() -> str:
    from . import __version__

    return __version__


# ---------------------------------------------------------------------------
# Overlay rendering


@dataclass(frozen=True)
class OverlayStyle:
    palette: tuple[str, ...] = (
        "#2ca02c", "#1f77b4", "#d62728", "#ff7f0e", "#9467bd", "#8c564b",
    )
    marker_radius: int = 9
    line_width: int = 3


def render_overlay(
    stimulus: Stimulus, scanpaths: Sequence[Scanpath], style: OverlayStyle | None = None
) -> np.ndarray:
    """Draw numbered fixation markers joined by lines, one color per scanpath.

    Returns an (H, W, 3) uint8 image with the same dimensions as the input.
    """
    from PIL import Image, ImageDraw

    style = style or OverlayStyle()
    for sp in scanpaths:
        if sp.image_id != stimulus.image_id:
            raise ParameterError(
                f"scanpath for {sp.image_id!r} does not belong to {stimulus.image_id!r}"
            )
    base = Image.fromarray((stimulus.pixels * 255).astype(np.uint8))
    draw = ImageDraw.Draw(base)
    r = style.marker_radius
    for idx, sp in enumerate(scanpaths):
        color = style.palette[idx % len(style.palette)]
        points = [(f.x, f.y) for f in sp.fixations]
        if len(points) > 1:
            draw.line(points, fill=color, width=style.line_width)
        for n, (x, y) in enumerate(points, start=1):
            draw.ellipse([x - r, y - r, x + r, y + r], fill=color, outline="white")
            label = str(n)
            draw.text((x - 3 * len(label), y - 5), label, fill="white")
    return np.asarray(base)

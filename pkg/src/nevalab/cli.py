"""Command-line interface: run experiments, evaluate, inspect datasets, serve."""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import __version__


@click.group()
@click.version_option(version=__version__)
def main():
    """Simulate and evaluate task-driven visual scanpaths."""


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Experiment config (YAML).")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Results directory (default: timestamped under output_dir).")
@click.option("--trace", is_flag=True, default=False,
              help="Also write per-step optimization traces (one JSONL line per step).")
def run_cmd(config_path, out_dir, trace):
    """Generate scanpaths for every configured model and evaluate them."""
    from .experiment import ExperimentConfig, run

    config = ExperimentConfig.from_file(config_path)
    if trace:
        config.trace = True
    result = run(config, out_dir=None if out_dir is None else Path(out_dir))
    click.echo(f"results written to {result}")


@main.command("evaluate")
@click.option("--runs", "runs_dir", required=True, type=click.Path(exists=True),
              help="A results directory produced by `run`.")
def evaluate_cmd(runs_dir):
    """Recompute plausibility reports from a results directory."""
    from .dataset import load_observations, apply_exclusions
    from .experiment import ExperimentConfig, evaluate, load_image_pool, read_image_sizes
    from .metrics import write_spp_csv
    from .types import read_scanpaths

    runs_dir = Path(runs_dir)
    manifest = json.loads((runs_dir / "manifest.json").read_text())
    config = ExperimentConfig.from_dict(manifest["config"])
    observations, _ = load_observations(config.observations)
    kept, _ = apply_exclusions(observations)
    sizes = read_image_sizes(load_image_pool(config.images_dir))
    scanpaths = {
        p.stem: read_scanpaths(p) for p in sorted((runs_dir / "scanpaths").glob("*.jsonl"))
    }
    reports = evaluate(scanpaths, kept, config, sizes)
    out = runs_dir / "reports" / "spp.csv"
    write_spp_csv(reports, out)
    for (model, dataset_name), report in sorted(reports.items()):
        click.echo(f"{model:40s} {dataset_name:12s} SPP {report.mean:.3f} ({report.std:.3f})")
    click.echo(f"report written to {out}")


@main.command("stats")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True),
              help="Observation JSONL file.")
@click.option("--images", "images_dir", type=click.Path(exists=True), default=None,
              help="Image pool (enables click-density estimation).")
@click.option("--density-out", type=click.Path(), default=None,
              help="Write the click density map (JSON) here.")
def stats_cmd(dataset_path, images_dir, density_out):
    """Summarize an observation dataset: totals, exclusions, caption lengths."""
    from . import dataset as ds

    observations, errors = ds.load_observations(dataset_path)
    if errors:
        click.echo(f"{len(errors)} malformed lines:", err=True)
        for e in errors[:10]:
            click.echo(f"  {e}", err=True)
    summary = ds.summarize(observations)
    kept, _ = ds.apply_exclusions(observations)
    click.echo(f"observations: {summary.total_observations}  "
               f"clicks: {summary.total_clicks}  sessions: {summary.total_sessions}")
    click.echo(f"excluded: skipped={summary.excluded_skipped} "
               f"no_clicks={summary.excluded_no_clicks} "
               f"short_caption={summary.excluded_short_caption}")
    cm, cs, cx = summary.caption_chars
    wm, ws, wx = summary.caption_words
    click.echo(f"caption chars: mean {cm:.2f} std {cs:.2f} max {cx}")
    click.echo(f"caption words: mean {wm:.2f} std {ws:.2f} max {wx}")
    click.echo(f"images covered: {summary.images_covered}")
    hist = ds.click_count_histogram(kept)
    click.echo("click histogram: " + " ".join(f"{n}:{c}" for n, c in hist.items()))
    if images_dir is not None:
        from .experiment import load_image_pool, read_image_sizes

        sizes = read_image_sizes(load_image_pool(images_dir))
        density = ds.click_density(kept, sizes)
        if density_out:
            density.save(density_out)
            click.echo(f"click density written to {density_out}")
        else:
            peak = divmod(int(density.weights.argmax()), density.width)
            click.echo(f"click density peak at cell (row {peak[0]}, col {peak[1]})")


@main.command("render")
@click.option("--image", "image_id", required=True, help="Image id to overlay.")
@click.option("--runs", "runs_dir", required=True, type=click.Path(exists=True))
@click.option("--models", default=None,
              help="Comma-separated model names (default: all).")
@click.option("--out", "out_path", type=click.Path(), default=None)
def render_cmd(image_id, runs_dir, models, out_path):
    """Render scanpath overlays for one image from a results directory."""
    from PIL import Image

    from .experiment import ExperimentConfig, load_image_pool, render_overlay
    from .types import Stimulus, read_scanpaths

    runs_dir = Path(runs_dir)
    manifest = json.loads((runs_dir / "manifest.json").read_text())
    config = ExperimentConfig.from_dict(manifest["config"])
    pool = load_image_pool(config.images_dir)
    if image_id not in pool:
        raise click.ClickException(f"image {image_id!r} not in pool")
    stimulus = Stimulus.from_file(pool[image_id], image_id=image_id)

    wanted = None if models is None else set(models.split(","))
    scanpaths = []
    for p in sorted((runs_dir / "scanpaths").glob("*.jsonl")):
        if wanted is not None and p.stem not in wanted:
            continue
        scanpaths.extend(sp for sp in read_scanpaths(p) if sp.image_id == image_id)
    if not scanpaths:
        raise click.ClickException(f"no scanpaths found for {image_id!r}")
    overlay = render_overlay(stimulus, scanpaths)
    if out_path is None:
        (runs_dir / "overlays").mkdir(exist_ok=True)
        out_path = runs_dir / "overlays" / f"{image_id}.png"
    Image.fromarray(overlay).save(out_path)
    click.echo(f"overlay written to {out_path}")


@main.command("serve")
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True),
              envvar="NEVALAB_IMAGES", help="Directory of stimulus images.")
@click.option("--out", "output_path", required=True, type=click.Path(),
              envvar="NEVALAB_OUT", help="Observation JSONL log to append to.")
@click.option("--host", default="127.0.0.1", envvar="NEVALAB_HOST", show_default=True)
@click.option("--port", default=8000, envvar="NEVALAB_PORT", show_default=True)
@click.option("--pixels-per-degree", default=35.0, envvar="NEVALAB_PPD", show_default=True)
@click.option("--blur-sigma", default=16.0, envvar="NEVALAB_BLUR_SIGMA", show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              envvar="NEVALAB_UI", help="Built frontend directory to serve at /.")
def serve_cmd(images_dir, output_path, host, port, pixels_per_degree, blur_sigma, ui_dir):
    """Serve the click-contingent caption collection API."""
    from .service import ServiceConfig, run_service

    config = ServiceConfig(
        images_dir=Path(images_dir), output_path=Path(output_path),
        pixels_per_degree=pixels_per_degree, blur_sigma=blur_sigma,
        ui_dir=None if ui_dir is None else Path(ui_dir),
    )
    run_service(config, host=host, port=port)


if __name__ == "__main__":
    main()

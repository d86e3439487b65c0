"""Command-line entry point: a thin client over the library and the service.

Exit codes: 0 success, 1 input/validation error, 2 pipeline error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import __version__
from .config import load_stage_config
from .errors import (
    DegenerateCluster,
    DuplicateId,
    EmptyCluster,
    EmptyInput,
    InsufficientClasses,
    InsufficientMembers,
    MalformedLabel,
    MissingGroundTruth,
    NoEligibleClusters,
    NonFiniteGradient,
    SchemaError,
    SpecInvalid,
    ZeroVector,
)
from .ingest import load_manifest, load_outcomes, save_manifest, save_outcomes

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PIPELINE = 2

_INPUT_ERRORS = (OSError, SchemaError, DuplicateId, MalformedLabel, SpecInvalid)
_PIPELINE_ERRORS = (
    NoEligibleClusters,
    InsufficientClasses,
    InsufficientMembers,
    NonFiniteGradient,
    DegenerateCluster,
    MissingGroundTruth,
    ZeroVector,
    EmptyCluster,
    EmptyInput,
)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_dataset(manifest: str, embeddings: str | None):
    try:
        return load_manifest(manifest, embeddings)
    except _INPUT_ERRORS as exc:
        _fail(EXIT_INPUT, str(exc))


def _load_config(config: str | None, seed: int | None):
    try:
        return load_stage_config(config, seed)
    except _INPUT_ERRORS as exc:
        _fail(EXIT_INPUT, str(exc))


@click.group()
@click.version_option(version=__version__)
@click.option("-v", "--verbose", is_flag=True, help="Log stage progress to stderr.")
def main(verbose: bool):
    """Refine coarse camera-trap labels toward species level."""
    import logging

    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


@main.command()
@click.option("--manifest", required=True, type=click.Path(), help="Detection manifest (JSONL).")
@click.option("--embeddings", type=click.Path(), default=None, help="Raw float32 embedding matrix.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Output directory.")
@click.option("--config", "config_path", type=click.Path(), default=None, help="Key-value config file.")
@click.option("--seed", type=int, default=None, help="Override the training seed.")
def run(manifest, embeddings, out_dir, config_path, seed):
    """Run the full five-stage pipeline and write all artifacts.

    Writes outcomes.jsonl, model.bin, copies of the inputs, and (when every
    re-classified detection has ground truth) report.txt / report.json.
    """
    from .pipeline import run_pipeline
    from .projection import save_net
    from .report import build_report, render_report, write_report_json

    cfg = _load_config(config_path, seed)
    ds = _load_dataset(manifest, embeddings)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = run_pipeline(ds, cfg)
    except _PIPELINE_ERRORS as exc:
        _fail(EXIT_PIPELINE, str(exc))

    save_outcomes(result.outcomes, out / "outcomes.jsonl")
    save_net(result.net, out / "model.bin")
    save_manifest(ds, out / "manifest.jsonl", out / "embeddings.f32")

    with_gt = all(
        ds.get(o.detection_id).ground_truth is not None
        for o in result.outcomes
        if o.decided_by.value in ("stage3", "stage5")
    )
    if with_gt:
        report = build_report(result.outcomes, ds)
        (out / "report.txt").write_text(render_report(report), encoding="utf-8")
        write_report_json(report, out / "report.json")
        click.echo(render_report(report), nl=False)
    else:
        click.echo("ground truth absent; skipping report", err=True)
    click.echo(f"wrote artifacts to {out}")


@main.command()
@click.option("--manifest", required=True, type=click.Path())
@click.option("--embeddings", type=click.Path(), default=None)
@click.option("--out", "model_path", required=True, type=click.Path(), help="Model file to write.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
def train(manifest, embeddings, model_path, config_path, seed):
    """Accept anchors (stages 1-3) and train the projection network only."""
    import numpy as np

    from .pipeline import stage1_accept, stage3_build_centroids
    from .projection import save_net
    from .projection import train as train_net

    cfg = _load_config(config_path, seed)
    ds = _load_dataset(manifest, embeddings)
    try:
        anchors = {d.id: d.ensemble_label.taxon for d in ds.detections if stage1_accept(d, cfg)}
        if not anchors:
            raise NoEligibleClusters("dataset yielded no stage-1 anchors")
        _, admitted = stage3_build_centroids(anchors, ds, cfg)
        for det_id in admitted:
            anchors[det_id] = ds.get(det_id).ensemble_label.taxon
        groups = {}
        for det_id, path in anchors.items():
            groups.setdefault(path, []).append((det_id, np.asarray(ds.get(det_id).embedding)))
        result = train_net(groups, cfg.train)
    except _PIPELINE_ERRORS as exc:
        _fail(EXIT_PIPELINE, str(exc))
    save_net(result.net, model_path)
    click.echo(f"trained {len(result.epoch_losses)} epochs, final loss {result.epoch_losses[-1]:.6f}")
    click.echo(f"wrote model to {model_path}")


@main.command()
@click.option("--manifest", required=True, type=click.Path())
@click.option("--embeddings", type=click.Path(), default=None)
@click.option("--model", "model_path", required=True, type=click.Path(), help="Trained model file.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Outcomes file to write.")
@click.option("--config", "config_path", type=click.Path(), default=None)
def score(manifest, embeddings, model_path, out_path, config_path):
    """Re-classify with a previously trained projection (skips stage 4 training)."""
    from .pipeline import score_with_net
    from .projection import load_net

    cfg = _load_config(config_path, None)
    ds = _load_dataset(manifest, embeddings)
    try:
        net = load_net(model_path)
    except (OSError, ValueError) as exc:
        _fail(EXIT_INPUT, str(exc))
    try:
        result = score_with_net(ds, cfg, net)
    except _PIPELINE_ERRORS as exc:
        _fail(EXIT_PIPELINE, str(exc))
    save_outcomes(result.outcomes, out_path)
    click.echo(f"wrote outcomes to {out_path}")


@main.command()
@click.option("--outcomes", "outcomes_path", required=True, type=click.Path())
@click.option("--manifest", required=True, type=click.Path())
@click.option("--embeddings", type=click.Path(), default=None)
@click.option("--json", "json_path", type=click.Path(), default=None, help="Also write report JSON here.")
def report(outcomes_path, manifest, embeddings, json_path):
    """Rebuild the accuracy table from saved outcomes plus ground truth."""
    from .report import build_report, render_report, write_report_json

    ds = _load_dataset(manifest, embeddings)
    try:
        outcomes = load_outcomes(outcomes_path)
    except _INPUT_ERRORS as exc:
        _fail(EXIT_INPUT, str(exc))
    try:
        rep = build_report(outcomes, ds)
    except MissingGroundTruth as exc:
        _fail(EXIT_PIPELINE, str(exc))
    click.echo(render_report(rep), nl=False)
    if json_path:
        write_report_json(rep, json_path)


@main.command()
@click.option("--spec", "spec_path", type=click.Path(), default=None, help="Synth spec JSON; built-in default when omitted.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the spec seed.")
def synth(spec_path, out_dir, seed):
    """Generate a synthetic dataset with known ground truth."""
    from dataclasses import replace

    from .synth import default_spec, generate, load_spec

    try:
        spec = load_spec(spec_path) if spec_path else default_spec()
        if seed is not None:
            spec = replace(spec, seed=seed)
        ds = generate(spec)
    except _INPUT_ERRORS as exc:
        _fail(EXIT_INPUT, str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_manifest(ds, out / "manifest.jsonl", out / "embeddings.f32")
    click.echo(f"wrote {len(ds)} detections to {out}")


@main.command()
@click.option("--artifacts-dir", required=True, type=click.Path(), help="Directory with manifest, embeddings, outcomes, model.")
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--images-dir", type=click.Path(), default=None, help="Directory with image files named by image_id.")
@click.option("--journal-path", type=click.Path(), default=None, help="Append-only override journal (default: artifacts dir).")
@click.option("--config", "config_path", type=click.Path(), default=None)
def serve(artifacts_dir, port, host, images_dir, journal_path, config_path):
    """Serve the human-in-the-loop review API."""
    import uvicorn

    from .service.app import create_app
    from .service.state import SessionState

    cfg = _load_config(config_path, None)
    try:
        state = SessionState.load(
            artifacts_dir,
            cfg=cfg,
            images_dir=images_dir,
            journal_path=journal_path,
        )
    except _INPUT_ERRORS + _PIPELINE_ERRORS as exc:
        _fail(EXIT_INPUT, str(exc))
    uvicorn.run(create_app(state), host=host, port=port)


if __name__ == "__main__":
    main()

"""Batch front door: every pipeline stage as a scriptable subcommand.

Exit codes: 0 success, 1 validation error, 2 runtime/provider error,
3 acceptance-threshold failure. Errors print one machine-parsable line to
stderr with the prefix ``RF-ERR:``.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click
import numpy as np

from . import gan, metrics, preprocess, synthgen
from .errors import (ProviderProtocolError, ProviderUnavailableError,
                     RemflowError, ValidationError)
from .imageio import load_mask, load_photo, save_mask, save_photo
from .refine import (RefinementRequest, builtin_template, get_provider,
                     load_template, patch_to_params, refine as run_refine,
                     render_prompt, translate_chat)
from .service.overlay import render_overlay
from .vectorize import export as export_polyset, simplify_polyset, trace_contours

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_THRESHOLD = 3


class ThresholdFailure(RemflowError):
    code = "threshold"


def _fail(code: int, exc: RemflowError) -> None:
    click.echo(f"RF-ERR: [{exc.code}] {exc.message}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ThresholdFailure as exc:
            _fail(EXIT_THRESHOLD, exc)
        except ValidationError as exc:
            _fail(EXIT_VALIDATION, exc)
        except RemflowError as exc:
            _fail(EXIT_RUNTIME, exc)
    return wrapper


@click.group()
def main():
    """Remnant-to-CAD contour pipeline."""


@main.command()
@click.option("--n", type=int, required=True, help="Number of pairs to generate.")
@click.option("--out", type=click.Path(), required=True, help="Dataset directory.")
@click.option("--seed", type=int, default=0, show_default=True, help="Base seed.")
@click.option("--size", type=int, default=256, show_default=True,
              help="Image side length in px.")
@click.option("--split", default="0.8,0.1,0.1", show_default=True,
              help="train,val,test ratios.")
@click.option("--max-holes", type=int, default=3, show_default=True)
@handle_errors
def synth(n, out, seed, size, split, max_holes):
    """Generate a synthetic paired dataset plus manifest.json."""
    try:
        ratios = tuple(float(x) for x in split.split(","))
    except ValueError:
        raise ValidationError(f"bad --split {split!r}; expected three numbers")
    if len(ratios) != 3:
        raise ValidationError("--split needs exactly three ratios")
    config = synthgen.GenerationConfig(image_size=size,
                                       hole_count_range=(0, max_holes))
    manifest = synthgen.generate_dataset(n, config, ratios, out=out,
                                         base_seed=seed)
    sizes = {s: len(manifest.split_entries(s)) for s in ("train", "val", "test")}
    click.echo(f"wrote {n} pairs to {out} (splits {sizes})")


@main.command(name="preprocess")
@click.option("--in", "in_path", type=click.Path(), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--size", type=int, default=1024, show_default=True)
@handle_errors
def preprocess_cmd(in_path, out_path, size):
    """Standardize one image to size x size RGB."""
    photo = load_photo(in_path)
    save_photo(out_path, preprocess.standardize(photo, size))
    click.echo(f"standardized {in_path} -> {out_path} ({size}x{size})")


def _load_split_pairs(manifest: synthgen.DatasetManifest, split: str):
    pairs = []
    for entry in manifest.split_entries(split):
        pairs.append(synthgen.SamplePair(
            photo=load_photo(manifest.entry_path(entry.photo)),
            mask=load_mask(manifest.entry_path(entry.mask)),
            spec_seed=entry.seed, id=entry.id))
    return pairs


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON file overriding GanConfig defaults.")
@click.option("--out-checkpoint", type=click.Path(), required=True)
@click.option("--steps", type=int, default=2000, show_default=True)
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="Append-only CSV loss trace.")
@handle_errors
def train(manifest_path, config_path, out_checkpoint, steps, log_path):
    """Train the photo-to-mask translator on a manifest's train split."""
    config = (gan.GanConfig.from_json_file(config_path) if config_path
              else gan.GanConfig())
    config.validate()
    manifest = synthgen.load_manifest(manifest_path)
    pairs = _load_split_pairs(manifest, "train")
    if not pairs:
        raise ValidationError("manifest has no train entries")
    state = gan.train(pairs, config, steps, log_path=log_path)
    gan.save_checkpoint(out_checkpoint, config, state.generator,
                        state.discriminator)
    click.echo(f"trained {steps} steps; checkpoint -> {out_checkpoint}")


@main.command()
@click.option("--checkpoint", type=click.Path(), required=True)
@click.option("--in", "in_path", type=click.Path(), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@handle_errors
def infer(checkpoint, in_path, out_path):
    """Run the generator on a photo; writes the thresholded mask PNG."""
    if not Path(checkpoint).is_file():
        raise ValidationError(f"checkpoint not found: {checkpoint}")
    config, generator, _ = gan.load_checkpoint(checkpoint)
    photo = load_photo(in_path)
    std = preprocess.standardize(photo, config.image_size)
    mask = gan.infer(generator, std)
    save_mask(out_path, mask)
    click.echo(f"inferred mask -> {out_path}")


@main.command(name="refine")
@click.option("--in", "in_path", type=click.Path(), required=True,
              help="Input mask PNG.")
@click.option("--template", default="contour-cleanup", show_default=True,
              help="Builtin template id or a template JSON file path.")
@click.option("--provider", default="mock", show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--text", default=None,
              help="Chat-style request; translated into template parameters.")
@click.option("--param", "params", multiple=True,
              help="Template parameter key=value (repeatable).")
@handle_errors
def refine_cmd(in_path, template, provider, out_path, text, params):
    """Send a mask through a refinement provider (mock works offline)."""
    mask = load_mask(in_path)
    tpl_path = Path(template)
    tpl = load_template(tpl_path) if tpl_path.is_file() else builtin_template(template)

    if text is not None:
        patch = translate_chat(text)
        if patch is None:
            raise ValidationError(
                f"could not derive an action from {text!r}; "
                "try e.g. 'remove noise in the top-right corner'")
        fill = patch_to_params(patch)
    else:
        fill = patch_to_params(translate_chat("close the gaps"))
    for kv in params:
        if "=" not in kv:
            raise ValidationError(f"bad --param {kv!r}; expected key=value")
        key, value = kv.split("=", 1)
        fill[key] = value

    prompt = render_prompt(tpl, fill)
    request = RefinementRequest(input_mask=mask, prompt=prompt,
                                provider_id=provider)
    result = run_refine(get_provider(provider), request)
    save_mask(out_path, result.output_image)
    click.echo(f"refined mask -> {out_path} "
               f"(attempts {result.attempt_count}, {result.latency_ms:.0f} ms)")


@main.command(name="eval")
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@click.option("--pred", "pred_dir", type=click.Path(), default=None,
              help="Directory of <id>.png predictions.")
@click.option("--label", default=None, help="Method label for the report.")
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="Where to write the JSON report.")
@click.option("--table", "table_path", type=click.Path(), default=None,
              help="Also write the rendered table to this file.")
@click.option("--split", default="test", show_default=True)
@click.option("--compare", nargs=2, type=click.Path(), default=None,
              help="Render a two-method table from two report JSON files.")
@click.option("--min-ssim", type=float, default=None)
@click.option("--min-iou", type=float, default=None)
@click.option("--max-hausdorff", type=float, default=None,
              help="Gate on the mean-variant aggregate.")
@handle_errors
def eval_cmd(manifest_path, pred_dir, label, report_path, table_path, split,
             compare, min_ssim, min_iou, max_hausdorff):
    """Score predictions against ground truth; print the metrics table."""
    if compare:
        a = metrics.MetricsReport.load(compare[0])
        b = metrics.MetricsReport.load(compare[1])
        text = metrics.render_comparison(a, b)
        click.echo(text, nl=False)
        if table_path:
            Path(table_path).write_text(text)
        return

    if not (manifest_path and pred_dir and label):
        raise ValidationError("eval needs --manifest, --pred and --label "
                              "(or --compare with two reports)")
    manifest = synthgen.load_manifest(manifest_path)
    report = metrics.evaluate_pairset(manifest, pred_dir, label, split=split)
    if report_path:
        report.save(report_path)
    text = metrics.render_table(report)
    click.echo(text, nl=False)
    if table_path:
        Path(table_path).write_text(text)

    if report.errors:
        raise ValidationError(
            f"{len(report.errors)} sample(s) missing or unmeasurable: "
            + "; ".join(e["id"] for e in report.errors))
    agg = report.aggregate()
    gates = ((min_ssim, agg["ssim"]["mean"], "ssim >=", lambda v, t: v >= t),
             (min_iou, agg["iou"]["mean"], "iou >=", lambda v, t: v >= t),
             (max_hausdorff, agg["hausdorff_mean"]["mean"], "hausdorff_mean <=",
              lambda v, t: v <= t))
    for threshold, value, desc, ok in gates:
        if threshold is not None and not ok(value, threshold):
            raise ThresholdFailure(
                f"aggregate gate failed: {desc} {threshold} (got {value:.4f})")


@main.command()
@click.option("--gt", type=click.Path(), required=True)
@click.option("--gen", type=click.Path(), required=True)
@click.option("--refined", type=click.Path(), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@handle_errors
def overlay(gt, gen, refined, out_path):
    """Render the contour-alignment overlay (black/blue/red on white)."""
    image = render_overlay(load_mask(gt), load_mask(gen), load_mask(refined))
    save_photo(out_path, image.astype(np.float32) / 255.0)
    click.echo(f"overlay -> {out_path}")


@main.command()
@click.option("--mask", "mask_path", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["svg", "dxf"]), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--epsilon", type=float, default=1.0, show_default=True,
              help="Polyline simplification tolerance in px.")
@click.option("--px-per-unit", type=float, default=1.0, show_default=True)
@handle_errors
def export(mask_path, fmt, out_path, epsilon, px_per_unit):
    """Vectorize a mask and write an SVG or R12 DXF file."""
    mask = load_mask(mask_path)
    polyset = simplify_polyset(trace_contours(mask), epsilon)
    export_polyset(polyset, fmt, out_path, px_per_unit)
    click.echo(f"exported {len(polyset.outers)} contour(s) -> {out_path}")


@main.command()
@click.option("--addr", default="127.0.0.1:8000", show_default=True)
@click.option("--data-root", type=click.Path(), default="./remflow-data",
              show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(), default=None,
              help="Serve the built web UI directory at /ui.")
@handle_errors
def serve(addr, data_root, ui_dir):
    """Serve the session HTTP API (backend for the chat UI)."""
    import uvicorn

    from .service import create_app

    if ui_dir is not None and not Path(ui_dir).is_dir():
        raise ValidationError(f"UI directory not found: {ui_dir}")
    host, _, port = addr.partition(":")
    app = create_app(data_root, ui_dir=ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))


if __name__ == "__main__":
    main()

"""Command-line driver: dataset inspection, model training, counterfactual
generation, evaluation, ablation grids, unconditional sampling, and the
HTTP service.

Every command is deterministic given --seed.  When no dataset path is
configured the built-in synthetic benchmark is used, so a minimal config
runs end-to-end.
"""

from __future__ import annotations

import dataclasses
import json
import sys

import click
import numpy as np

from . import checkpoint as ckpt
from .config import BASELINE_METHODS, STRATEGIES, RunConfig, load_config
from .diffusion import sample_unconditional, train_diffusion
from .experiments import (
    TrainedBundle,
    cells_to_csv,
    cells_to_jsonl,
    count_grid,
    generate_for_method,
    loss_drop_grid,
    pick_inputs,
    strategy_grid,
    tau_noise_grid,
)
from .guidance import generate_counterfactuals
from .metrics import evaluate
from .nets import train_classifier, train_plausibility, train_vae
from .synth import BIN_COUNT, BINNING, LABEL_COLUMN, NUMERIC_COLUMNS, make_benchmark
from .tabular import build_dataset, encode_row, read_csv

__all__ = ["main"]


def _echo_log(name):
    click.echo(f"training {name} ...", err=True)


def _load_dataset(cfg: RunConfig):
    """Dataset from cfg.data, falling back to the synthetic benchmark."""
    if cfg.data.path:
        header, records = read_csv(cfg.data.path)
        return build_dataset(
            header, records, cfg.data.numeric_columns, cfg.data.label_column,
            bin_count=cfg.data.bin_count, binning=cfg.data.binning,
        )
    header, records = make_benchmark(seed=cfg.seed + 7)
    return build_dataset(header, records, NUMERIC_COLUMNS, LABEL_COLUMN,
                         bin_count=BIN_COUNT, binning=BINNING)


def _apply_seed(cfg: RunConfig, seed) -> RunConfig:
    """Fold a --seed override into every per-model seed."""
    if seed is None:
        return cfg
    return dataclasses.replace(
        cfg,
        seed=seed,
        diffusion=dataclasses.replace(cfg.diffusion, seed=seed),
        classifier=dataclasses.replace(cfg.classifier, seed=seed),
        plausibility=dataclasses.replace(cfg.plausibility, seed=seed),
        vae=dataclasses.replace(cfg.vae, seed=seed),
        guidance=dataclasses.replace(cfg.guidance, seed=seed),
        baseline=dataclasses.replace(cfg.baseline, seed=seed),
    )


def _parse_row(text: str, schema):
    """A row is a JSON array in schema order or an object keyed by column."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"row is not valid JSON: {exc}")
    names = [c.name for c in schema]
    if isinstance(payload, dict):
        missing = [n for n in names if n not in payload]
        if missing:
            raise click.ClickException(f"row missing columns: {', '.join(missing)}")
        return [str(payload[n]) for n in names]
    if isinstance(payload, list):
        if len(payload) != len(names):
            raise click.ClickException(
                f"row has {len(payload)} values, schema has {len(names)} columns"
            )
        return [str(v) for v in payload]
    raise click.ClickException("row must be a JSON array or object")


def _class_id(label: str, class_names) -> int:
    if class_names and label in class_names:
        return list(class_names).index(label)
    try:
        return int(label)
    except ValueError:
        raise click.ClickException(
            f"unknown class {label!r}; expected one of {list(class_names or [])}"
        )


def load_bundle(dataset, diffusion_path, classifier_path, recurrent_path,
                transformer_path, vae_path) -> tuple:
    """Load a checkpoint bundle, insisting every piece shares one schema."""
    diffusion = ckpt.load_diffusion(diffusion_path)
    digest = ckpt.schema_digest(diffusion.schema, diffusion.vocab)
    classifier, clf_header = ckpt.load_classifier(classifier_path)
    ckpt.check_schema_match(digest, clf_header, classifier_path)
    recurrent, header = ckpt.load_plausibility(recurrent_path)
    ckpt.check_schema_match(digest, header, recurrent_path)
    transformer, header = ckpt.load_plausibility(transformer_path)
    ckpt.check_schema_match(digest, header, transformer_path)
    vae, header = ckpt.load_vae(vae_path)
    ckpt.check_schema_match(digest, header, vae_path)
    bundle = TrainedBundle(dataset, diffusion, classifier, recurrent,
                           transformer, vae)
    return bundle, clf_header.get("class_names")


config_option = click.option(
    "--config", "config_path", type=click.Path(exists=True), default=None,
    help="JSON config overlaid on defaults.")
seed_option = click.option("--seed", type=int, default=None,
                           help="Override every RNG seed.")


def _model_options(fn):
    for name in ("vae", "transformer", "recurrent", "classifier", "diffusion"):
        fn = click.option(f"--{name}", f"{name}_path", required=True,
                          type=click.Path(exists=True),
                          help=f"Path to the {name} checkpoint.")(fn)
    return fn


@click.group()
def main():
    """Diffusion-based counterfactual explanations for tabular data."""


@main.command()
@config_option
@seed_option
def schema(config_path, seed):
    """Print the inferred column schema as JSON."""
    cfg = _apply_seed(load_config(config_path), seed)
    ds = _load_dataset(cfg)
    payload = {
        "columns": [
            {
                "name": c.name,
                "kind": c.kind,
                "values": list(ds.vocab.values[i]),
                "bin_edges": list(c.bin_edges),
                "bin_representatives": list(c.bin_representatives),
            }
            for i, c in enumerate(ds.schema)
        ],
        "label_column": ds.label_column,
        "classes": list(ds.class_values),
        "schema_digest": ckpt.schema_digest(ds.schema, ds.vocab),
    }
    click.echo(json.dumps(payload, indent=2))


@main.command("train-diffusion")
@config_option
@seed_option
@click.option("--out", required=True, type=click.Path(), help="Checkpoint path.")
def train_diffusion_cmd(config_path, seed, out):
    """Train the embedding-space diffusion model."""
    cfg = _apply_seed(load_config(config_path), seed)
    ds = _load_dataset(cfg)
    model = train_diffusion(ds, cfg.diffusion)
    ckpt.save_diffusion(out, model)
    click.echo(f"saved diffusion checkpoint to {out}")


@main.command("train-classifier")
@config_option
@seed_option
@click.option("--diffusion", "diffusion_path", required=True,
              type=click.Path(exists=True),
              help="Diffusion checkpoint providing the embedding dictionary.")
@click.option("--out", required=True, type=click.Path())
def train_classifier_cmd(config_path, seed, diffusion_path, out):
    """Train the black-box classifier over frozen embeddings."""
    cfg = _apply_seed(load_config(config_path), seed)
    ds = _load_dataset(cfg)
    diffusion = ckpt.load_diffusion(diffusion_path)
    clf = train_classifier(ds, diffusion.dictionary, cfg.classifier,
                           hidden_dim=cfg.classifier_hidden)
    ckpt.save_classifier(out, clf, ds.schema, ds.vocab, ds.n_classes,
                         class_names=ds.class_values)
    click.echo(f"saved classifier checkpoint to {out}")


@main.command("train-plausibility")
@config_option
@seed_option
@click.option("--variant", type=click.Choice(["recurrent", "causal_transformer"]),
              default="recurrent", show_default=True)
@click.option("--out", required=True, type=click.Path())
def train_plausibility_cmd(config_path, seed, variant, out):
    """Train an autoregressive plausibility oracle."""
    cfg = _apply_seed(load_config(config_path), seed)
    ds = _load_dataset(cfg)
    tcfg = cfg.plausibility
    if variant == "causal_transformer":
        tcfg = dataclasses.replace(tcfg, seed=tcfg.seed + 1)
    model = train_plausibility(ds, variant, tcfg, d_hidden=cfg.ar_hidden)
    ckpt.save_plausibility(out, model, ds.schema, ds.vocab)
    click.echo(f"saved {variant} plausibility checkpoint to {out}")


@main.command("train-vae")
@config_option
@seed_option
@click.option("--diffusion", "diffusion_path", required=True,
              type=click.Path(exists=True),
              help="Diffusion checkpoint providing the embedding dictionary.")
@click.option("--out", required=True, type=click.Path())
def train_vae_cmd(config_path, seed, diffusion_path, out):
    """Train the VAE used by the dice_vae baseline."""
    cfg = _apply_seed(load_config(config_path), seed)
    ds = _load_dataset(cfg)
    diffusion = ckpt.load_diffusion(diffusion_path)
    vae = train_vae(ds, diffusion.dictionary, cfg.vae, latent_dim=cfg.vae_latent)
    ckpt.save_vae(out, vae, ds.schema, ds.vocab)
    click.echo(f"saved vae checkpoint to {out}")


@main.command()
@config_option
@seed_option
@_model_options
@click.option("--row", required=True, help="Input row as JSON array or object.")
@click.option("--desired", required=True, help="Desired class label.")
@click.option("--method", default="scd", show_default=True,
              type=click.Choice(("scd",) + BASELINE_METHODS))
def generate(config_path, seed, diffusion_path, classifier_path, recurrent_path,
             transformer_path, vae_path, row, desired, method):
    """Generate counterfactual rows plus a metric report."""
    cfg = _apply_seed(load_config(config_path), seed)
    ds = _load_dataset(cfg)
    bundle, class_names = load_bundle(ds, diffusion_path, classifier_path,
                                      recurrent_path, transformer_path, vae_path)
    raw = _parse_row(row, bundle.diffusion.schema)
    target = _class_id(desired, class_names)
    cs = generate_for_method(bundle, method, raw, target, cfg)
    enc = encode_row(raw, bundle.diffusion.vocab, bundle.diffusion.schema)
    report = evaluate(cs.encoded, cs.rows, enc, target, bundle.classifier,
                      bundle.diffusion.dictionary, bundle.recurrent,
                      bundle.transformer, method=method)
    payload = {
        "method": method,
        "seed": cfg.guidance.seed if method == "scd" else cfg.baseline.seed,
        "rows": [list(r) for r in cs.rows],
        "report": json.loads(report.to_record()),
    }
    click.echo(json.dumps(payload, indent=2))


@main.command("evaluate")
@config_option
@seed_option
@_model_options
@click.option("--rows", "rows_text", required=True,
              help="Counterfactual rows as a JSON array of rows.")
@click.option("--original", required=True, help="Original row (JSON).")
@click.option("--desired", required=True, help="Desired class label.")
def evaluate_cmd(config_path, seed, diffusion_path, classifier_path,
                 recurrent_path, transformer_path, vae_path, rows_text,
                 original, desired):
    """Score a counterfactual set against an original row."""
    cfg = _apply_seed(load_config(config_path), seed)
    ds = _load_dataset(cfg)
    bundle, class_names = load_bundle(ds, diffusion_path, classifier_path,
                                      recurrent_path, transformer_path, vae_path)
    schema, vocab = bundle.diffusion.schema, bundle.diffusion.vocab
    try:
        row_list = json.loads(rows_text)
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"rows is not valid JSON: {exc}")
    if not isinstance(row_list, list) or not row_list:
        raise click.ClickException("rows must be a non-empty JSON array of rows")
    rows = [_parse_row(json.dumps(r), schema) for r in row_list]
    encoded = [encode_row(r, vocab, schema) for r in rows]
    orig = encode_row(_parse_row(original, schema), vocab, schema)
    target = _class_id(desired, class_names)
    report = evaluate(encoded, rows, orig, target, bundle.classifier,
                      bundle.diffusion.dictionary, bundle.recurrent,
                      bundle.transformer)
    click.echo(report.to_record())


@main.command()
@config_option
@seed_option
@_model_options
@click.option("--grid", default="all", show_default=True,
              type=click.Choice(["loss-drop", "tau-noise", "strategy", "count",
                                 "all"]))
@click.option("--desired", default=None, help="Desired class label.")
@click.option("--inputs", "n_inputs", default=8, show_default=True,
              help="Number of input rows to average over.")
@click.option("--out", default=None, type=click.Path(),
              help="Write JSONL report lines here instead of stdout.")
@click.option("--csv", "csv_out", default=None, type=click.Path(),
              help="Also export the grid cells as CSV for plotting.")
def ablate(config_path, seed, diffusion_path, classifier_path, recurrent_path,
           transformer_path, vae_path, grid, desired, n_inputs, out, csv_out):
    """Run the ablation grids, one report line per cell."""
    cfg = _apply_seed(load_config(config_path), seed)
    ds = _load_dataset(cfg)
    bundle, class_names = load_bundle(ds, diffusion_path, classifier_path,
                                      recurrent_path, transformer_path, vae_path)
    if desired is None:
        target = ds.n_classes - 1
    else:
        target = _class_id(desired, class_names)
    inputs = pick_inputs(bundle, target, n_inputs, seed=cfg.seed + 11)
    cells = []
    if grid in ("loss-drop", "all"):
        cells += loss_drop_grid(bundle, inputs, target, cfg)
    if grid in ("tau-noise", "all"):
        cells += tau_noise_grid(bundle, inputs, target, cfg)
    if grid in ("strategy", "all"):
        cells += strategy_grid(bundle, inputs, target, cfg)
    if grid in ("count", "all"):
        cells += count_grid(bundle, inputs, target, cfg)
    text = cells_to_jsonl(cells)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        click.echo(f"wrote {len(cells)} cells to {out}")
    else:
        click.echo(text)
    if csv_out:
        with open(csv_out, "w", encoding="utf-8") as fh:
            fh.write(cells_to_csv(cells) + "\n")


@main.command()
@config_option
@seed_option
@click.option("--diffusion", "diffusion_path", required=True,
              type=click.Path(exists=True))
@click.option("--count", default=10, show_default=True)
@click.option("--strategy", default="max", show_default=True,
              type=click.Choice(STRATEGIES))
def sample(config_path, seed, diffusion_path, count, strategy):
    """Emit unconditional rows from the diffusion model."""
    cfg = _apply_seed(load_config(config_path), seed)
    model = ckpt.load_diffusion(diffusion_path)
    rng = np.random.default_rng(cfg.seed)
    for row in sample_unconditional(model, count, rng, strategy=strategy):
        click.echo(json.dumps(list(row)))


@main.command()
@config_option
@seed_option
@_model_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(config_path, seed, diffusion_path, classifier_path, recurrent_path,
          transformer_path, vae_path, host, port):
    """Start the HTTP what-if service."""
    import uvicorn

    from .service import build_app

    cfg = _apply_seed(load_config(config_path), seed)
    ds = _load_dataset(cfg)
    bundle, class_names = load_bundle(ds, diffusion_path, classifier_path,
                                      recurrent_path, transformer_path, vae_path)
    app = build_app(bundle, cfg, class_names,
                    checkpoints={"diffusion": diffusion_path,
                                 "classifier": classifier_path,
                                 "recurrent": recurrent_path,
                                 "transformer": transformer_path,
                                 "vae": vae_path})
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    sys.exit(main())

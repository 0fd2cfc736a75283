"""Experiment helpers: train a full model bundle, score methods over a
panel of inputs, and run the ablation grids (loss dropping, guided-step /
initial-noise sweep, sampling strategies, counterfactual count).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, replace

import numpy as np

from .baselines import baseline_generate
from .config import RunConfig, STRATEGIES
from .diffusion import DiffusionModel, train_diffusion
from .guidance import generate_counterfactuals
from .metrics import evaluate
from .nets import (
    ARPlausibilityModel,
    ClassifierNet,
    TabularVAE,
    train_classifier,
    train_plausibility,
    train_vae,
)
from .tabular import Dataset, decode_row, encode_row

__all__ = [
    "TrainedBundle",
    "AggregateReport",
    "train_bundle",
    "pick_inputs",
    "evaluate_method",
    "generate_for_method",
    "loss_drop_grid",
    "tau_noise_grid",
    "strategy_grid",
    "count_grid",
]

METHODS = ("scd", "wachter", "dice", "dice_vae")


@dataclass
class TrainedBundle:
    """Everything needed to generate and score counterfactuals."""

    dataset: Dataset
    diffusion: DiffusionModel
    classifier: ClassifierNet
    recurrent: ARPlausibilityModel
    transformer: ARPlausibilityModel
    vae: TabularVAE


@dataclass(frozen=True)
class AggregateReport:
    """Metrics averaged over a panel of input rows."""

    method: str
    n_inputs: int
    validity: float
    proximity: float
    raw_mean_distance: float
    diversity: float
    plausibility_recurrent: float
    plausibility_transformer: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def train_bundle(dataset: Dataset, cfg: RunConfig, log=None) -> TrainedBundle:
    """Train diffusion, classifier, both AR oracles, and the VAE."""

    def tick(name):
        if log:
            log(name)

    tick("diffusion")
    diffusion = train_diffusion(dataset, cfg.diffusion)
    tick("classifier")
    classifier = train_classifier(
        dataset, diffusion.dictionary, cfg.classifier, hidden_dim=cfg.classifier_hidden
    )
    tick("plausibility-recurrent")
    recurrent = train_plausibility(
        dataset, "recurrent", cfg.plausibility, d_hidden=cfg.ar_hidden
    )
    tick("plausibility-transformer")
    transformer = train_plausibility(
        dataset, "causal_transformer",
        replace(cfg.plausibility, seed=cfg.plausibility.seed + 1),
        d_hidden=cfg.ar_hidden,
    )
    tick("vae")
    vae = train_vae(
        dataset, diffusion.dictionary, cfg.vae, latent_dim=cfg.vae_latent
    )
    return TrainedBundle(dataset, diffusion, classifier, recurrent, transformer, vae)


def pick_inputs(bundle: TrainedBundle, desired: int, count: int, seed: int = 0):
    """Sample training rows currently predicted as some other class."""
    ds = bundle.dataset
    ids = ds.encoded_matrix()
    preds = bundle.classifier.predict(bundle.diffusion.dictionary.embed(ids).data)
    candidates = np.flatnonzero(preds != desired)
    if not candidates.size:
        raise ValueError("no rows predicted away from the desired class")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(candidates, size=min(count, candidates.size), replace=False)
    return [decode_row(ds.rows[i], ds.vocab, ds.schema) for i in sorted(chosen)]


def generate_for_method(bundle: TrainedBundle, method: str, row, desired,
                        cfg: RunConfig):
    """Route one input row to the guided sampler or a baseline."""
    if method == "scd":
        return generate_counterfactuals(
            bundle.diffusion, bundle.classifier, row, desired, cfg.guidance
        )
    bcfg = replace(cfg.baseline, method=method)
    return baseline_generate(
        bundle.classifier, row, desired, bcfg, bundle.diffusion.dictionary,
        bundle.dataset.schema, bundle.dataset.vocab,
        vae=bundle.vae if method == "dice_vae" else None,
    )


def evaluate_method(
    bundle: TrainedBundle, method: str, inputs, desired: int, cfg: RunConfig
) -> AggregateReport:
    """Generate counterfactuals per input and average the four scores."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    ds = bundle.dataset
    rows = []
    for i, row in enumerate(inputs):
        run_cfg = dataclasses.replace(
            cfg,
            guidance=replace(cfg.guidance, seed=cfg.guidance.seed + i),
            baseline=replace(cfg.baseline, seed=cfg.baseline.seed + i),
        )
        cs = generate_for_method(bundle, method, row, desired, run_cfg)
        enc = encode_row(row, ds.vocab, ds.schema)
        report = evaluate(
            cs.encoded, cs.rows, enc, desired, bundle.classifier,
            bundle.diffusion.dictionary, bundle.recurrent, bundle.transformer,
            method=method,
        )
        rows.append(report)
    return AggregateReport(
        method=method,
        n_inputs=len(rows),
        validity=float(np.mean([r.validity for r in rows])),
        proximity=float(np.mean([r.proximity for r in rows])),
        raw_mean_distance=float(np.mean([r.raw_mean_distance for r in rows])),
        diversity=float(np.mean([r.diversity for r in rows])),
        plausibility_recurrent=float(np.mean([r.plausibility_recurrent for r in rows])),
        plausibility_transformer=float(np.mean([r.plausibility_transformer for r in rows])),
    )


def _zero_lambda(cfg: RunConfig, term: str) -> RunConfig:
    return dataclasses.replace(
        cfg,
        guidance=replace(cfg.guidance, **{f"lambda_{term}": 0.0}),
        baseline=replace(cfg.baseline, **{f"lambda_{term}": 0.0}),
    )


def loss_drop_grid(bundle, inputs, desired, cfg: RunConfig, methods=("scd", "dice")):
    """Four cells per method: all terms, then each term dropped in turn."""
    cells = []
    for method in methods:
        for drop in ("none", "validity", "proximity", "diversity"):
            cell_cfg = cfg if drop == "none" else _zero_lambda(cfg, drop)
            agg = evaluate_method(bundle, method, inputs, desired, cell_cfg)
            cells.append({"grid": "loss-drop", "method": method, "dropped": drop,
                          **agg.to_dict()})
    return cells


def tau_noise_grid(bundle, inputs, desired, cfg: RunConfig, taus=(25, 50, 100)):
    """Guided-step sweep crossed with the initial-noise flag (guided method)."""
    cells = []
    for tau in taus:
        for noise in (True, False):
            cell_cfg = dataclasses.replace(
                cfg, guidance=replace(cfg.guidance, tau=tau, add_initial_noise=noise)
            )
            agg = evaluate_method(bundle, "scd", inputs, desired, cell_cfg)
            cells.append({"grid": "tau-noise", "tau": tau,
                          "add_initial_noise": noise, **agg.to_dict()})
    return cells


def strategy_grid(bundle, inputs, desired, cfg: RunConfig):
    """All four reverse-lookup strategies (guided method)."""
    cells = []
    for strategy in STRATEGIES:
        cell_cfg = dataclasses.replace(
            cfg, guidance=replace(cfg.guidance, strategy=strategy)
        )
        agg = evaluate_method(bundle, "scd", inputs, desired, cell_cfg)
        cells.append({"grid": "strategy", "strategy": strategy, **agg.to_dict()})
    return cells


def count_grid(bundle, inputs, desired, cfg: RunConfig, counts=(2, 4, 8)):
    """Counterfactual-count sweep with no re-tuning (guided method)."""
    cells = []
    for b in counts:
        cell_cfg = dataclasses.replace(
            cfg, guidance=replace(cfg.guidance, n_counterfactuals=b)
        )
        agg = evaluate_method(bundle, "scd", inputs, desired, cell_cfg)
        cells.append({"grid": "count", "n_counterfactuals": b, **agg.to_dict()})
    return cells


def cells_to_jsonl(cells) -> str:
    return "\n".join(json.dumps(c, sort_keys=True) for c in cells)


def cells_to_csv(cells) -> str:
    keys = sorted({k for c in cells for k in c})
    lines = [",".join(keys)]
    for c in cells:
        lines.append(",".join(str(c.get(k, "")) for k in keys))
    return "\n".join(lines)

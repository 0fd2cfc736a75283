"""Guided iterative denoising: steer the diffusion chain from the input
row's embedding toward a desired black-box prediction, alternating
denoising steps with gradient steps on a validity/proximity/diversity
guiding loss.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .autodiff import Tensor, cross_entropy, squared_error
from .config import GuidanceConfig
from .diffusion import DiffusionModel, denoise_step
from .nets import ClassifierNet, reverse_lookup
from .tabular import decode_row, encode_row

__all__ = [
    "GuidingLossBreakdown",
    "CounterfactualSet",
    "validity_loss",
    "proximity_loss",
    "diversity_loss",
    "guiding_loss",
    "generate_counterfactuals",
]


@dataclass(frozen=True)
class GuidingLossBreakdown:
    step: int
    validity: float
    proximity: float
    diversity: float
    total: float
    plausibility: float = 0.0

    def to_record(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True)
class CounterfactualSet:
    rows: tuple  # decoded human-readable rows
    encoded: tuple  # per-row integer ids
    final_embeddings: np.ndarray  # (B, C, d)
    loss_trace: tuple  # GuidingLossBreakdown per guided step


def validity_loss(Zp: Tensor, classifier: ClassifierNet, desired: int) -> Tensor:
    """Cross-entropy of the black-box prediction against the desired class."""
    if not 0 <= desired < classifier.n_classes:
        raise ValueError(f"class {desired} out of range")
    b = Zp.shape[0]
    targets = np.full(b, desired, dtype=np.intp)
    # summed over the batch so each counterfactual feels the full pull
    # regardless of how many siblings it has
    return cross_entropy(classifier.forward(Zp), targets) * b


def proximity_loss(Z: Tensor, Zp: Tensor) -> Tensor:
    """Squared distance to the stacked original embedding."""
    return squared_error(Z, Zp)


def diversity_loss(Zp: Tensor) -> Tensor:
    """Negated mean pairwise squared distance; 0 for a single sample."""
    b = Zp.shape[0]
    if b < 2:
        return Tensor(0.0) * Zp.sum() if Zp.requires_grad else Tensor(0.0)
    total = None
    for i in range(b - 1):
        for j in range(i + 1, b):
            d = squared_error(Zp[i], Zp[j])
            total = d if total is None else total + d
    return total * (-2.0 / (b * (b - 1)))


def guiding_loss(
    Zp: Tensor,
    Z: Tensor,
    classifier: ClassifierNet,
    desired: int,
    cfg: GuidanceConfig,
    step: int = 0,
):
    """Weighted three-term loss plus its per-term breakdown."""
    v = validity_loss(Zp, classifier, desired)
    p = proximity_loss(Z, Zp)
    d = diversity_loss(Zp)
    total = cfg.lambda_validity * v + cfg.lambda_proximity * p + cfg.lambda_diversity * d
    breakdown = GuidingLossBreakdown(
        step=step,
        validity=v.item(),
        proximity=p.item(),
        diversity=d.item(),
        total=total.item(),
    )
    return total, breakdown


def generate_counterfactuals(
    model: DiffusionModel,
    classifier: ClassifierNet,
    row,
    desired: int,
    cfg: GuidanceConfig,
) -> CounterfactualSet:
    """Produce a batch of counterfactual rows for one input.

    Stacks the input's embedding B times, optionally noises it to the
    guided start step tau, then alternates a clamped denoising step with
    a gradient step on the guiding loss (networks frozen; only the
    embedding moves).  The final embedding is snapped per the configured
    strategy and decoded.
    """
    if model.dictionary.dim != classifier.embed_dim or \
            model.dictionary.n_columns != classifier.n_columns:
        raise ValueError("diffusion model and classifier disagree on embedding shape")
    if cfg.tau > model.schedule.steps:
        raise ValueError(f"tau {cfg.tau} exceeds chain length {model.schedule.steps}")
    rng = np.random.default_rng(cfg.seed)
    encoded_input = encode_row(row, model.vocab, model.schema)
    z = model.dictionary.embed_row(encoded_input).data
    b = cfg.n_counterfactuals
    Z_orig = np.broadcast_to(z, (b,) + z.shape).copy()
    if cfg.add_initial_noise:
        ab = model.schedule.alpha_bar[cfg.tau]
        Z = math.sqrt(ab) * Z_orig + math.sqrt(1.0 - ab) * rng.normal(size=Z_orig.shape)
    else:
        Z = Z_orig.copy()
    Z_ref = Tensor(Z_orig)
    trace = []
    for t in range(cfg.tau, 0, -1):
        Z = denoise_step(Z, t, model, rng, cfg.strategy, cfg.temperature)
        Zp = Tensor(Z, requires_grad=True)
        loss, breakdown = guiding_loss(Zp, Z_ref, classifier, desired, cfg, step=t)
        if cfg.eta > 0:
            loss.backward()
            Z = Z - cfg.eta * Zp.grad
        trace.append(breakdown)
    encoded, snapped = reverse_lookup(Z, model.dictionary, cfg.strategy,
                                      cfg.temperature, rng)
    rows = tuple(decode_row(e, model.vocab, model.schema) for e in encoded)
    return CounterfactualSet(
        rows=rows,
        encoded=tuple(encoded),
        final_embeddings=snapped,
        loss_trace=tuple(trace),
    )

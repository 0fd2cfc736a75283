"""Noise schedule, forward noising, denoising steps, training, and
unconditional sampling for the row-embedding diffusion model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, cross_entropy, squared_error
from .config import DiffusionConfig
from .nets import DenoiserNet, EmbeddingDictionary, SGD, reverse_lookup
from .tabular import decode_row

__all__ = [
    "NoiseSchedule",
    "DiffusionModel",
    "cosine_schedule",
    "forward_noise",
    "denoise_step",
    "train_diffusion",
    "sample_unconditional",
]


@dataclass(frozen=True)
class NoiseSchedule:
    """Coefficient tables for a T-step diffusion chain.

    ``alpha_bar`` has T+1 entries indexed 0..T with alpha_bar[0] = 1; the
    per-step tables are indexed 1..T (index 0 unused).
    """

    steps: int
    offset: float
    beta: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    alpha_bar: np.ndarray = field(repr=False)
    gamma1: np.ndarray = field(repr=False)
    gamma2: np.ndarray = field(repr=False)

    def check(self, t: int):
        if not 1 <= t <= self.steps:
            raise ValueError(f"step {t} outside [1, {self.steps}]")


def cosine_schedule(steps: int, offset: float = 0.008) -> NoiseSchedule:
    """Cosine variance schedule with the squared-cosine cumulative form."""
    if steps < 1:
        raise ValueError("need at least one diffusion step")

    def f(t):
        return math.cos(((t / steps + offset) / (1 + offset)) * math.pi / 2) ** 2

    alpha_bar = np.array([f(t) / f(0) for t in range(steps + 1)])
    beta = np.zeros(steps + 1)
    beta[1:] = 1.0 - alpha_bar[1:] / alpha_bar[:-1]
    beta[1:] = np.clip(beta[1:], 1e-8, 0.999)
    # rebuild alpha_bar from the clipped betas so the tables stay consistent
    alpha = np.zeros(steps + 1)
    alpha[1:] = 1.0 - beta[1:]
    alpha_bar = np.concatenate([[1.0], np.cumprod(alpha[1:])])
    gamma1 = np.zeros(steps + 1)
    gamma2 = np.zeros(steps + 1)
    gamma1[1:] = beta[1:] * np.sqrt(alpha_bar[:-1]) / (1.0 - alpha_bar[1:])
    gamma2[1:] = (1.0 - alpha_bar[:-1]) * np.sqrt(alpha[1:]) / (1.0 - alpha_bar[1:])
    return NoiseSchedule(
        steps=steps, offset=offset, beta=beta, alpha=alpha,
        alpha_bar=alpha_bar, gamma1=gamma1, gamma2=gamma2,
    )


def forward_noise(z0: np.ndarray, t: int, eps: np.ndarray, schedule: NoiseSchedule) -> np.ndarray:
    """Noisy version of z0 at step t: sqrt(abar_t) z0 + sqrt(1-abar_t) eps."""
    schedule.check(t)
    z0 = np.asarray(z0)
    eps = np.asarray(eps)
    if z0.shape != eps.shape:
        raise ValueError("noise must match the signal's shape")
    ab = schedule.alpha_bar[t]
    return math.sqrt(ab) * z0 + math.sqrt(1.0 - ab) * eps


@dataclass
class DiffusionModel:
    """A trained chain: schedule + denoiser + frozen embedding dictionary."""

    schedule: NoiseSchedule
    denoiser: DenoiserNet
    dictionary: EmbeddingDictionary
    schema: tuple
    vocab: object

    def predict_clean(self, Zt: np.ndarray, t: int) -> np.ndarray:
        Zt = np.asarray(Zt)
        squeeze = Zt.ndim == 2
        if squeeze:
            Zt = Zt[None]
        out = self.denoiser.forward(Tensor(Zt), t).data
        return out[0] if squeeze else out


def denoise_step(
    Zt: np.ndarray,
    t: int,
    model: DiffusionModel,
    rng: np.random.Generator,
    clamp_strategy: str | None = None,
    temperature: float = 1.0,
) -> np.ndarray:
    """One reverse step: gamma1 z0_hat + gamma2 z_t plus sqrt(beta) noise.

    At t=1 the noise term is omitted so the final step is deterministic
    given the predictor.  ``clamp_strategy`` snaps the clean prediction to
    dictionary entries before it is used.
    """
    sched = model.schedule
    sched.check(t)
    z0_hat = model.predict_clean(Zt, t)
    if clamp_strategy is not None:
        _, z0_hat = reverse_lookup(z0_hat, model.dictionary, clamp_strategy,
                                   temperature, rng)
    mean = sched.gamma1[t] * z0_hat + sched.gamma2[t] * np.asarray(Zt)
    if t == 1:
        return mean
    return mean + math.sqrt(sched.beta[t]) * rng.normal(size=mean.shape)


def train_diffusion(dataset, cfg: DiffusionConfig, log=None) -> DiffusionModel:
    """Jointly fit the denoiser and the embedding dictionaries.

    Per minibatch: embed rows, draw a uniform step t and Gaussian noise,
    form z_t, and minimize the mean squared error between the predicted
    and true clean embeddings.  A token-anchoring cross-entropy term
    (classify each predicted column embedding against the dictionary by
    negative squared distance) keeps within-column embeddings separated;
    without it the joint objective collapses the dictionary toward a
    single point, which destroys reverse lookup.  Dictionaries are
    frozen on return.
    """
    if not dataset.rows:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(cfg.seed)
    dictionary = EmbeddingDictionary(dataset.vocab.cardinalities, cfg.embed_dim, rng)
    denoiser = DenoiserNet(dataset.n_columns, cfg.embed_dim, cfg.hidden_dim,
                           cfg.time_dim, rng)
    schedule = cosine_schedule(cfg.steps, cfg.schedule_offset)
    params = {**denoiser.params(), **dictionary.params()}
    opt = SGD(params, cfg.lr, cfg.warmup_steps, cfg.half_life_steps, cfg.grad_clip)
    ids = dataset.encoded_matrix()
    n = len(ids)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            Z0 = dictionary.embed(ids[batch])
            t = int(rng.integers(1, cfg.steps + 1))
            eps = rng.normal(size=Z0.shape)
            ab = schedule.alpha_bar[t]
            Zt = Z0 * math.sqrt(ab) + Tensor(eps * math.sqrt(1.0 - ab))
            pred = denoiser.forward(Zt, t)
            loss = squared_error(pred, Z0) / pred.size
            if cfg.anchor_weight > 0.0:
                anchor = None
                for c in range(dataset.n_columns):
                    table = dictionary.tables[c]
                    # -||p - e_k||^2 up to a per-row constant (softmax-invariant)
                    logits = (pred[:, c, :] @ table.swapaxes(0, 1)) * 2.0 \
                        - (table * table).sum(axis=1)
                    ce = cross_entropy(logits, ids[batch][:, c])
                    anchor = ce if anchor is None else anchor + ce
                loss = loss + (cfg.anchor_weight / dataset.n_columns) * anchor
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(batch)
        if log:
            log(epoch, total / n)
    dictionary.freeze()
    return DiffusionModel(
        schedule=schedule, denoiser=denoiser, dictionary=dictionary,
        schema=dataset.schema, vocab=dataset.vocab,
    )


def sample_unconditional(
    model: DiffusionModel,
    count: int,
    rng: np.random.Generator,
    strategy: str = "max",
    clamp_during_denoise: bool = False,
    temperature: float = 1.0,
):
    """Draw rows by denoising pure Gaussian noise down the full chain."""
    if count == 0:
        return []
    c, d = model.dictionary.n_columns, model.dictionary.dim
    Z = rng.normal(size=(count, c, d))
    clamp = strategy if clamp_during_denoise else None
    for t in range(model.schedule.steps, 0, -1):
        Z = denoise_step(Z, t, model, rng, clamp, temperature)
    encoded, _ = reverse_lookup(Z, model.dictionary, strategy, temperature, rng)
    return [decode_row(e, model.vocab, model.schema) for e in encoded]

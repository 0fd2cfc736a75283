"""Gradient-search counterfactual baselines over relaxed one-hot rows.

``wachter`` optimizes validity + proximity, ``dice`` adds a pairwise
diversity term, and ``dice_vae`` further adds the negative ELBO of a
pre-trained VAE as a plausibility regularizer.  The relaxed scores are
softmax-normalized per column and classified through probability-weighted
embedding mixtures, so the same frozen black-box serves every method.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, concat, cross_entropy, softmax, squared_error
from .config import BaselineConfig
from .guidance import CounterfactualSet, GuidingLossBreakdown
from .nets import ClassifierNet, EmbeddingDictionary, TabularVAE, vae_elbo
from .tabular import decode_row, encode_row

__all__ = ["baseline_generate", "baseline_loss"]


def _mixture_embedding(probs: list, dictionary: EmbeddingDictionary) -> Tensor:
    """Probability-weighted dictionary mixture: [(B, |X_c|)] -> (B, C, d)."""
    b = probs[0].shape[0]
    slices = [
        (p @ dictionary.tables[c]).reshape(b, 1, dictionary.dim)
        for c, p in enumerate(probs)
    ]
    return concat(slices, axis=1)


def baseline_loss(
    state: list,
    classifier: ClassifierNet,
    desired: int,
    x_onehot: list,
    cfg: BaselineConfig,
    dictionary: EmbeddingDictionary,
    vae: TabularVAE | None = None,
    rng: np.random.Generator | None = None,
    step: int = 0,
):
    """Loss over the relaxed state; returns (total, breakdown)."""
    probs = [softmax(s * (1.0 / cfg.temperature), axis=-1) for s in state]
    Z = _mixture_embedding(probs, dictionary)
    b = probs[0].shape[0]
    targets = np.full(b, desired, dtype=np.intp)
    v = cross_entropy(classifier.forward(Z), targets)

    p = None
    for c, pr in enumerate(probs):
        d = squared_error(pr, Tensor(np.broadcast_to(x_onehot[c], pr.shape).copy()))
        p = d if p is None else p + d

    if cfg.method in ("dice", "dice_vae") and b >= 2:
        total_pair = None
        for i in range(b - 1):
            for j in range(i + 1, b):
                pd = None
                for pr in probs:
                    d = squared_error(pr[i], pr[j])
                    pd = d if pd is None else pd + d
                total_pair = pd if total_pair is None else total_pair + pd
        dvt = total_pair * (-2.0 / (b * (b - 1)))
    else:
        dvt = Tensor(0.0)

    pl = Tensor(0.0)
    if cfg.method == "dice_vae":
        if vae is None:
            raise ValueError("dice_vae requires a trained VAE")
        pl = -vae_elbo(Z, vae, rng if rng is not None else np.random.default_rng(0))

    total = cfg.lambda_validity * v + cfg.lambda_proximity * p
    if cfg.method in ("dice", "dice_vae"):
        total = total + cfg.lambda_diversity * dvt
    if cfg.method == "dice_vae":
        total = total + cfg.lambda_plausibility * pl
    breakdown = GuidingLossBreakdown(
        step=step,
        validity=v.item(),
        proximity=p.item(),
        diversity=dvt.item(),
        total=total.item(),
        plausibility=pl.item(),
    )
    return total, breakdown


def baseline_generate(
    classifier: ClassifierNet,
    row,
    desired: int,
    cfg: BaselineConfig,
    dictionary: EmbeddingDictionary,
    schema,
    vocab,
    vae: TabularVAE | None = None,
) -> CounterfactualSet:
    """Run SGD from the jittered one-hot of the input and decode by argmax."""
    if cfg.method == "dice_vae" and vae is None:
        raise ValueError("dice_vae requires a trained VAE")
    rng = np.random.default_rng(cfg.seed)
    encoded_input = encode_row(row, vocab, schema)
    b = cfg.n_counterfactuals
    x_onehot = []
    state = []
    for c, k in enumerate(dictionary.cardinalities):
        onehot = np.zeros(k)
        onehot[encoded_input[c]] = 1.0
        x_onehot.append(onehot)
        init = np.broadcast_to(onehot, (b, k)) + rng.normal(0.0, cfg.jitter, (b, k))
        state.append(Tensor(init, requires_grad=True))
    trace = []
    for step in range(cfg.steps):
        total, breakdown = baseline_loss(
            state, classifier, desired, x_onehot, cfg, dictionary, vae, rng, step
        )
        total.backward()
        for s in state:
            s.data -= cfg.lr * s.grad
            s.grad = None
        trace.append(breakdown)
    encoded = tuple(
        tuple(int(s.data[i].argmax()) for s in state) for i in range(b)
    )
    rows = tuple(decode_row(e, vocab, schema) for e in encoded)
    final = np.stack(
        [
            np.concatenate(
                [dictionary.tables[c].data[e[c]][None, :] for c in range(len(e))]
            )
            for e in encoded
        ]
    )
    return CounterfactualSet(
        rows=rows, encoded=encoded, final_embeddings=final, loss_trace=tuple(trace)
    )

"""Networks built on the minimal autodiff core: per-column embedding
dictionaries, the denoiser, the black-box classifier, autoregressive
plausibility oracles (recurrent and causal-transformer), and the VAE
used by the plausibility-regularized baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Tensor,
    concat,
    cross_entropy,
    gather_rows,
    log_softmax,
    softmax,
    squared_error,
)
from .config import STRATEGIES, TrainConfig

__all__ = [
    "EmbeddingDictionary",
    "ClassifierNet",
    "DenoiserNet",
    "ARPlausibilityModel",
    "TabularVAE",
    "SGD",
    "column_probabilities",
    "reverse_lookup",
    "time_encoding",
    "ar_nll",
    "vae_elbo",
    "train_classifier",
    "train_plausibility",
    "train_vae",
]


def _init(rng: np.random.Generator, *shape, scale=None) -> Tensor:
    if scale is None:
        scale = 1.0 / math.sqrt(shape[0])
    return Tensor(rng.normal(0.0, scale, size=shape), requires_grad=True)


def _zeros(*shape) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


class EmbeddingDictionary:
    """One learned embedding table per column, all of width ``dim``."""

    def __init__(self, cardinalities, dim: int, rng: np.random.Generator):
        self.dim = dim
        self.cardinalities = tuple(cardinalities)
        self.tables = [_init(rng, k, dim, scale=1.0) for k in cardinalities]

    @property
    def n_columns(self) -> int:
        return len(self.tables)

    def params(self) -> dict:
        return {f"embed.{c}": t for c, t in enumerate(self.tables)}

    def freeze(self):
        for t in self.tables:
            t.requires_grad = False

    def embed(self, ids: np.ndarray) -> Tensor:
        """Look up a batch of encoded rows: (B, C) ids -> (B, C, d)."""
        ids = np.atleast_2d(np.asarray(ids, dtype=np.intp))
        b, c = ids.shape
        if c != self.n_columns:
            raise ValueError(f"expected {self.n_columns} columns, got {c}")
        for col in range(c):
            if ids[:, col].min() < 0 or ids[:, col].max() >= self.cardinalities[col]:
                raise ValueError(f"id out of range in column {col}")
        slices = [
            gather_rows(self.tables[col], ids[:, col]).reshape(b, 1, self.dim)
            for col in range(c)
        ]
        return concat(slices, axis=1)

    def embed_row(self, ids) -> Tensor:
        """Single-row convenience: (C,) ids -> (C, d)."""
        return self.embed(np.asarray(ids)[None, :]).reshape(self.n_columns, self.dim)


def column_probabilities(
    z_slice: np.ndarray, column: int, dictionary: EmbeddingDictionary, temperature: float = 1.0
) -> np.ndarray:
    """Softmax over negative squared distances to column ``column``'s rows."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    table = dictionary.tables[column].data
    d2 = ((table - np.asarray(z_slice)[None, :]) ** 2).sum(axis=1)
    logits = -d2 / temperature
    logits -= logits.max()
    e = np.exp(logits)
    return e / e.sum()


def reverse_lookup(
    Z: np.ndarray,
    dictionary: EmbeddingDictionary,
    strategy: str = "max",
    temperature: float = 1.0,
    rng: np.random.Generator | None = None,
):
    """Snap continuous embeddings back onto dictionary entries.

    Returns (encoded rows, snapped (B, C, d) array).  ``average`` keeps the
    probability-weighted mixture as the snapped slice but still reports the
    most probable id so every row remains decodable.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if rng is None:
        rng = np.random.default_rng(0)
    Z = np.asarray(Z, dtype=np.float64)
    squeeze = Z.ndim == 2
    if squeeze:
        Z = Z[None]
    b, c, d = Z.shape
    ids = np.zeros((b, c), dtype=np.intp)
    snapped = np.zeros_like(Z)
    for col in range(c):
        table = dictionary.tables[col].data
        for i in range(b):
            probs = column_probabilities(Z[i, col], col, dictionary, temperature)
            if strategy == "max":
                pick = int(probs.argmax())
                snapped[i, col] = table[pick]
            elif strategy == "full_sampling":
                pick = int(rng.choice(len(probs), p=probs))
                snapped[i, col] = table[pick]
            elif strategy == "top3":
                top = np.argsort(probs)[::-1][: min(3, len(probs))]
                renorm = probs[top] / probs[top].sum()
                pick = int(rng.choice(top, p=renorm))
                snapped[i, col] = table[pick]
            else:  # average
                pick = int(probs.argmax())
                snapped[i, col] = probs @ table
            ids[i, col] = pick
    rows = [tuple(int(v) for v in ids[i]) for i in range(b)]
    if squeeze:
        return rows[0], snapped[0]
    return rows, snapped


def time_encoding(t: int, dim: int) -> np.ndarray:
    """Sinusoidal encoding of the diffusion step index."""
    half = dim // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / max(half - 1, 1))
    angles = t * freqs
    return np.concatenate([np.sin(angles), np.cos(angles)])


class ClassifierNet:
    """The frozen black-box: a 2-layer MLP over the flattened row embedding."""

    def __init__(self, n_columns, embed_dim, hidden_dim, n_classes, rng):
        self.n_columns = n_columns
        self.embed_dim = embed_dim
        self.n_classes = n_classes
        d_in = n_columns * embed_dim
        self.w1 = _init(rng, d_in, hidden_dim)
        self.b1 = _zeros(hidden_dim)
        self.w2 = _init(rng, hidden_dim, n_classes)
        self.b2 = _zeros(n_classes)

    def params(self) -> dict:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def forward(self, Z: Tensor) -> Tensor:
        b = Z.shape[0]
        expected = self.n_columns * self.embed_dim
        flat = Z.reshape(b, -1)
        if flat.shape[1] != expected:
            raise ValueError(f"expected input width {expected}, got {flat.shape[1]}")
        h = (flat @ self.w1 + self.b1).gelu()
        return h @ self.w2 + self.b2

    def predict(self, Z: np.ndarray) -> np.ndarray:
        logits = self.forward(Tensor(Z)).data
        return logits.argmax(axis=-1)


class DenoiserNet:
    """Predicts the clean embedding from a noisy one plus a time encoding."""

    def __init__(self, n_columns, embed_dim, hidden_dim, time_dim, rng):
        self.n_columns = n_columns
        self.embed_dim = embed_dim
        self.time_dim = time_dim
        d_in = n_columns * embed_dim + time_dim
        d_out = n_columns * embed_dim
        self.w1 = _init(rng, d_in, hidden_dim)
        self.b1 = _zeros(hidden_dim)
        self.w2 = _init(rng, hidden_dim, hidden_dim)
        self.b2 = _zeros(hidden_dim)
        self.w3 = _init(rng, hidden_dim, d_out)
        self.b3 = _zeros(d_out)

    def params(self) -> dict:
        return {
            "w1": self.w1, "b1": self.b1,
            "w2": self.w2, "b2": self.b2,
            "w3": self.w3, "b3": self.b3,
        }

    def forward(self, Zt: Tensor, t: int) -> Tensor:
        b, c, d = Zt.shape
        flat = Zt.reshape(b, c * d)
        tvec = Tensor(np.broadcast_to(time_encoding(t, self.time_dim), (b, self.time_dim)))
        x = concat([flat, tvec], axis=1)
        h = (x @ self.w1 + self.b1).gelu()
        h = (h @ self.w2 + self.b2).gelu()
        return (h @ self.w3 + self.b3).reshape(b, c, d)


class _GRUCell:
    def __init__(self, d_in, d_hidden, rng):
        self.wz = _init(rng, d_in, d_hidden)
        self.uz = _init(rng, d_hidden, d_hidden)
        self.bz = _zeros(d_hidden)
        self.wr = _init(rng, d_in, d_hidden)
        self.ur = _init(rng, d_hidden, d_hidden)
        self.br = _zeros(d_hidden)
        self.wn = _init(rng, d_in, d_hidden)
        self.un = _init(rng, d_hidden, d_hidden)
        self.bn = _zeros(d_hidden)

    def params(self, prefix: str) -> dict:
        return {
            f"{prefix}.wz": self.wz, f"{prefix}.uz": self.uz, f"{prefix}.bz": self.bz,
            f"{prefix}.wr": self.wr, f"{prefix}.ur": self.ur, f"{prefix}.br": self.br,
            f"{prefix}.wn": self.wn, f"{prefix}.un": self.un, f"{prefix}.bn": self.bn,
        }

    def step(self, x: Tensor, h: Tensor) -> Tensor:
        z = (x @ self.wz + h @ self.uz + self.bz).sigmoid()
        r = (x @ self.wr + h @ self.ur + self.br).sigmoid()
        n = (x @ self.wn + (r * h) @ self.un + self.bn).tanh()
        return (1.0 - z) * n + z * h


class _CausalAttentionBlock:
    def __init__(self, d_model, n_heads, rng):
        if d_model % n_heads:
            raise ValueError("d_model must divide by n_heads")
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.wq = _init(rng, d_model, d_model)
        self.wk = _init(rng, d_model, d_model)
        self.wv = _init(rng, d_model, d_model)
        self.wo = _init(rng, d_model, d_model)
        self.wf1 = _init(rng, d_model, 4 * d_model)
        self.bf1 = _zeros(4 * d_model)
        self.wf2 = _init(rng, 4 * d_model, d_model)
        self.bf2 = _zeros(d_model)

    def params(self, prefix: str) -> dict:
        return {
            f"{prefix}.wq": self.wq, f"{prefix}.wk": self.wk,
            f"{prefix}.wv": self.wv, f"{prefix}.wo": self.wo,
            f"{prefix}.wf1": self.wf1, f"{prefix}.bf1": self.bf1,
            f"{prefix}.wf2": self.wf2, f"{prefix}.bf2": self.bf2,
        }

    def forward(self, x: Tensor, mask: np.ndarray) -> Tensor:
        b, n, dm = x.shape
        h, dh = self.n_heads, self.d_head

        def heads(t):
            return t.reshape(b, n, h, dh).swapaxes(1, 2)  # (B, H, N, dh)

        q, k, v = heads(x @ self.wq), heads(x @ self.wk), heads(x @ self.wv)
        scores = (q @ k.swapaxes(-1, -2)) * (1.0 / math.sqrt(dh)) + Tensor(mask)
        attn = softmax(scores, axis=-1)
        mixed = (attn @ v).swapaxes(1, 2).reshape(b, n, dm)
        x = x + mixed @ self.wo
        return x + ((x @ self.wf1 + self.bf1).gelu() @ self.wf2 + self.bf2)


class ARPlausibilityModel:
    """Autoregressive model over a row's column ids, left to right.

    Owns its input embeddings (independent of the diffusion dictionary so
    it stays an objective oracle).  ``variant`` selects a recurrent cell
    or a causal-masked transformer; either way position n's logits depend
    only on positions < n.
    """

    def __init__(self, cardinalities, variant="recurrent", d_embed=16, d_hidden=32,
                 n_layers=2, n_heads=2, rng=None):
        if variant not in ("recurrent", "causal_transformer"):
            raise ValueError(f"unknown variant {variant!r}")
        if rng is None:
            rng = np.random.default_rng(0)
        self.variant = variant
        self.cardinalities = tuple(cardinalities)
        self.d_embed = d_embed
        self.d_hidden = d_hidden
        self.n_layers = n_layers
        self.n_heads = n_heads
        n = len(self.cardinalities)
        self.embeds = [_init(rng, k, d_embed, scale=0.5) for k in self.cardinalities]
        self.start = _init(rng, 1, d_embed, scale=0.5)
        if variant == "recurrent":
            self.cell = _GRUCell(d_embed, d_hidden, rng)
            self.heads_out = [_init(rng, d_hidden, k) for k in self.cardinalities]
        else:
            self.pos = _zeros(n, d_embed)
            self.blocks = [
                _CausalAttentionBlock(d_embed, n_heads, rng) for _ in range(n_layers)
            ]
            self.heads_out = [_init(rng, d_embed, k) for k in self.cardinalities]
        self.biases_out = [_zeros(k) for k in self.cardinalities]

    def params(self) -> dict:
        out = {"start": self.start}
        for c, e in enumerate(self.embeds):
            out[f"in.{c}"] = e
        for c, (w, b2) in enumerate(zip(self.heads_out, self.biases_out)):
            out[f"out.{c}.w"] = w
            out[f"out.{c}.b"] = b2
        if self.variant == "recurrent":
            out.update(self.cell.params("gru"))
        else:
            out["pos"] = self.pos
            for i, blk in enumerate(self.blocks):
                out.update(blk.params(f"block.{i}"))
        return out

    def logits(self, ids: np.ndarray) -> list:
        """Per-position logits for a batch of rows: (B, C) -> [ (B, |X_n|) ]."""
        ids = np.atleast_2d(np.asarray(ids, dtype=np.intp))
        b, n = ids.shape
        if n != len(self.cardinalities):
            raise ValueError(f"expected {len(self.cardinalities)} columns, got {n}")
        start = Tensor(np.ones((b, 1))) @ self.start
        inputs = [start] + [
            gather_rows(self.embeds[c], ids[:, c]) for c in range(n - 1)
        ]
        if self.variant == "recurrent":
            out = []
            h = Tensor(np.zeros((b, self.d_hidden)))
            for c in range(n):
                h = self.cell.step(inputs[c], h)
                out.append(h @ self.heads_out[c] + self.biases_out[c])
            return out
        x = concat([t.reshape(b, 1, self.d_embed) for t in inputs], axis=1)
        x = x + self.pos.reshape(1, n, self.d_embed)
        mask = np.triu(np.full((n, n), -1e9), k=1)
        for blk in self.blocks:
            x = blk.forward(x, mask)
        return [
            x[:, c, :] @ self.heads_out[c] + self.biases_out[c] for c in range(n)
        ]


def ar_nll(row, model: ARPlausibilityModel) -> float:
    """Negative log-likelihood of one encoded row under the AR model."""
    ids = np.asarray(row, dtype=np.intp)[None, :]
    total = 0.0
    for c, logit in enumerate(model.logits(ids)):
        lp = log_softmax(logit, axis=-1).data
        total -= float(lp[0, ids[0, c]])
    return total


def ar_nll_batch(rows, model: ARPlausibilityModel) -> np.ndarray:
    ids = np.asarray(rows, dtype=np.intp)
    nll = np.zeros(ids.shape[0])
    for c, logit in enumerate(model.logits(ids)):
        lp = log_softmax(logit, axis=-1).data
        nll -= lp[np.arange(ids.shape[0]), ids[:, c]]
    return nll


class TabularVAE:
    """VAE over the row-embedding space, used as a plausibility prior."""

    def __init__(self, n_columns, embed_dim, hidden_dim, latent_dim, rng):
        self.n_columns = n_columns
        self.embed_dim = embed_dim
        self.latent_dim = latent_dim
        d_in = n_columns * embed_dim
        self.ew = _init(rng, d_in, hidden_dim)
        self.eb = _zeros(hidden_dim)
        self.mw = _init(rng, hidden_dim, latent_dim)
        self.mb = _zeros(latent_dim)
        self.vw = _init(rng, hidden_dim, latent_dim)
        self.vb = _zeros(latent_dim)
        self.dw1 = _init(rng, latent_dim, hidden_dim)
        self.db1 = _zeros(hidden_dim)
        self.dw2 = _init(rng, hidden_dim, d_in)
        self.db2 = _zeros(d_in)

    def params(self) -> dict:
        return {
            "ew": self.ew, "eb": self.eb, "mw": self.mw, "mb": self.mb,
            "vw": self.vw, "vb": self.vb, "dw1": self.dw1, "db1": self.db1,
            "dw2": self.dw2, "db2": self.db2,
        }

    def encode(self, Z: Tensor):
        b = Z.shape[0]
        h = (Z.reshape(b, -1) @ self.ew + self.eb).gelu()
        return h @ self.mw + self.mb, h @ self.vw + self.vb

    def decode(self, latent: Tensor) -> Tensor:
        b = latent.shape[0]
        h = (latent @ self.dw1 + self.db1).gelu()
        return (h @ self.dw2 + self.db2).reshape(b, self.n_columns, self.embed_dim)


def vae_elbo(Z: Tensor, model: TabularVAE, rng: np.random.Generator) -> Tensor:
    """Single-sample reparametrized ELBO, averaged over the batch."""
    b = Z.shape[0]
    mu, logvar = model.encode(Z)
    eps = Tensor(rng.normal(size=(b, model.latent_dim)))
    latent = mu + (logvar * 0.5).exp() * eps
    recon = model.decode(latent)
    rec_term = -squared_error(recon, Z)
    kl = 0.5 * (logvar.exp() + mu * mu - 1.0 - logvar).sum()
    return (rec_term - kl) / b


class SGD:
    """Plain SGD with optional linear warmup, exponential half-life decay,
    and global gradient-norm clipping."""

    def __init__(self, params: dict, lr: float, warmup_steps=0, half_life_steps=0,
                 grad_clip=0.0):
        self.params = params
        self.base_lr = lr
        self.warmup_steps = warmup_steps
        self.half_life_steps = half_life_steps
        self.grad_clip = grad_clip
        self.step_count = 0

    def current_lr(self) -> float:
        lr = self.base_lr
        if self.warmup_steps:
            lr *= min(1.0, (self.step_count + 1) / self.warmup_steps)
        if self.half_life_steps:
            lr *= 0.5 ** (self.step_count / self.half_life_steps)
        return lr

    def step(self):
        grads = {k: p.grad for k, p in self.params.items() if p.grad is not None}
        if self.grad_clip:
            total = math.sqrt(sum(float((g**2).sum()) for g in grads.values()))
            if total > self.grad_clip:
                scale = self.grad_clip / total
                grads = {k: g * scale for k, g in grads.items()}
        lr = self.current_lr()
        for k, g in grads.items():
            self.params[k].data -= lr * g
        self.step_count += 1

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None


def _minibatches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def train_classifier(dataset, dictionary: EmbeddingDictionary, cfg: TrainConfig,
                     hidden_dim=64, log=None) -> ClassifierNet:
    """Fit the black-box MLP on frozen embeddings with cross-entropy."""
    if not dataset.rows:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(cfg.seed)
    net = ClassifierNet(dataset.n_columns, dictionary.dim, hidden_dim,
                        dataset.n_classes, rng)
    ids = dataset.encoded_matrix()
    labels = np.asarray(dataset.labels)
    opt = SGD(net.params(), cfg.lr, cfg.warmup_steps, cfg.half_life_steps, cfg.grad_clip)
    for epoch in range(cfg.epochs):
        total = 0.0
        for batch in _minibatches(len(ids), cfg.batch_size, rng):
            Z = dictionary.embed(ids[batch]).detach()
            loss = cross_entropy(net.forward(Z), labels[batch])
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(batch)
        if log:
            log(epoch, total / len(ids))
    return net


def train_plausibility(dataset, variant: str, cfg: TrainConfig,
                       d_embed=16, d_hidden=32, n_layers=2, n_heads=2,
                       log=None) -> ARPlausibilityModel:
    """Teacher-forced cross-entropy training of an AR oracle."""
    if not dataset.rows:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(cfg.seed)
    model = ARPlausibilityModel(dataset.vocab.cardinalities, variant,
                                d_embed, d_hidden, n_layers, n_heads, rng)
    ids = dataset.encoded_matrix()
    opt = SGD(model.params(), cfg.lr, cfg.warmup_steps, cfg.half_life_steps, cfg.grad_clip)
    for epoch in range(cfg.epochs):
        total = 0.0
        for batch in _minibatches(len(ids), cfg.batch_size, rng):
            rows = ids[batch]
            logits = model.logits(rows)
            loss = logits[0].sum() * 0.0
            for c, lg in enumerate(logits):
                loss = loss + cross_entropy(lg, rows[:, c])
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(batch)
        if log:
            log(epoch, total / len(ids))
    return model


def train_vae(dataset, dictionary: EmbeddingDictionary, cfg: TrainConfig,
              hidden_dim=64, latent_dim=8, log=None) -> TabularVAE:
    """Maximize the ELBO over frozen row embeddings."""
    if not dataset.rows:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(cfg.seed)
    model = TabularVAE(dataset.n_columns, dictionary.dim, hidden_dim, latent_dim, rng)
    ids = dataset.encoded_matrix()
    opt = SGD(model.params(), cfg.lr, cfg.warmup_steps, cfg.half_life_steps, cfg.grad_clip)
    for epoch in range(cfg.epochs):
        total = 0.0
        for batch in _minibatches(len(ids), cfg.batch_size, rng):
            Z = dictionary.embed(ids[batch]).detach()
            loss = -vae_elbo(Z, model, rng)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(batch)
        if log:
            log(epoch, total / len(ids))
    return model

"""Shared fixtures: a small trained bundle plus checkpoint files.

The "small" bundle trains on the full benchmark table but with reduced
epochs, which is plenty for interface-level tests (CLI, service,
determinism).  Accuracy-sensitive assertions live in test_acceptance.py
with fully trained models.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from tabcf import checkpoint as ckpt
from tabcf.config import RunConfig
from tabcf.experiments import train_bundle
from tabcf.synth import benchmark_dataset


def small_config() -> RunConfig:
    cfg = RunConfig()
    return dataclasses.replace(
        cfg,
        diffusion=dataclasses.replace(cfg.diffusion, epochs=60),
        classifier=dataclasses.replace(cfg.classifier, epochs=40),
        plausibility=dataclasses.replace(cfg.plausibility, epochs=10),
        vae=dataclasses.replace(cfg.vae, epochs=20),
    )


@pytest.fixture(scope="session")
def small_cfg():
    return small_config()


@pytest.fixture(scope="session")
def dataset():
    return benchmark_dataset()


@pytest.fixture(scope="session")
def small_bundle(dataset, small_cfg):
    return train_bundle(dataset, small_cfg)


@pytest.fixture(scope="session")
def checkpoint_dir(tmp_path_factory, small_bundle, dataset):
    """The small bundle saved as the five checkpoint files."""
    d = tmp_path_factory.mktemp("ckpt")
    ds = dataset
    ckpt.save_diffusion(str(d / "diff.ckpt"), small_bundle.diffusion)
    ckpt.save_classifier(str(d / "clf.ckpt"), small_bundle.classifier,
                         ds.schema, ds.vocab, ds.n_classes,
                         class_names=ds.class_values)
    ckpt.save_plausibility(str(d / "rec.ckpt"), small_bundle.recurrent,
                           ds.schema, ds.vocab)
    ckpt.save_plausibility(str(d / "tra.ckpt"), small_bundle.transformer,
                           ds.schema, ds.vocab)
    ckpt.save_vae(str(d / "vae.ckpt"), small_bundle.vae, ds.schema, ds.vocab)
    return d


def fd_grad(fn, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of scalar fn at x."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = fn(x)
        flat[i] = orig - h
        lo = fn(x)
        flat[i] = orig
        out[i] = (hi - lo) / (2.0 * h)
    return grad


def assert_grad_close(analytic: np.ndarray, numeric: np.ndarray,
                      rel_tol: float = 1e-4):
    """Relative error against the FD oracle, guarded for tiny entries."""
    analytic = np.asarray(analytic, dtype=np.float64)
    scale = np.maximum(np.abs(numeric), 1.0)
    err = np.abs(analytic - numeric) / scale
    assert err.max() < rel_tol, f"max relative gradient error {err.max():.3e}"

"""Acceptance gate: every release criterion as one test, with pinned
tolerances, over a fully trained model bundle on the synthetic benchmark.

The bundle trains once per test session at the shipped defaults; all
trend assertions average over a fixed 16-row input panel.
"""

import dataclasses
import math

import numpy as np
import pytest

from conftest import assert_grad_close, fd_grad
from tabcf import checkpoint as ckpt
from tabcf.autodiff import Tensor
from tabcf.config import GuidanceConfig, RunConfig
from tabcf.diffusion import (
    cosine_schedule,
    forward_noise,
    sample_unconditional,
)
from tabcf.experiments import (
    count_grid,
    evaluate_method,
    loss_drop_grid,
    pick_inputs,
    strategy_grid,
    tau_noise_grid,
    train_bundle,
)
from tabcf.guidance import diversity_loss, proximity_loss, validity_loss
from tabcf.metrics import evaluate
from tabcf.nets import ClassifierNet, TabularVAE, reverse_lookup, vae_elbo
from tabcf.synth import SHADE_OF, benchmark_dataset, rule_violation_rate
from tabcf.tabular import decode_row, encode_row

N_INPUTS = 16
PANEL_SEED = 11


@pytest.fixture(scope="module")
def cfg():
    return RunConfig()


@pytest.fixture(scope="module")
def full_dataset():
    return benchmark_dataset()


@pytest.fixture(scope="module")
def bundle(full_dataset, cfg):
    return train_bundle(full_dataset, cfg)


@pytest.fixture(scope="module")
def desired(full_dataset):
    return full_dataset.class_values.index("pos")


@pytest.fixture(scope="module")
def panel(bundle, desired):
    return pick_inputs(bundle, desired, N_INPUTS, seed=PANEL_SEED)


@pytest.fixture(scope="module")
def trend(bundle, panel, desired, cfg):
    return {m: evaluate_method(bundle, m, panel, desired, cfg)
            for m in ("scd", "wachter", "dice", "dice_vae")}


@pytest.fixture(scope="module")
def drop_cells(bundle, panel, desired, cfg):
    return loss_drop_grid(bundle, panel, desired, cfg)


@pytest.fixture(scope="module")
def tau_cells(bundle, panel, desired, cfg):
    return tau_noise_grid(bundle, panel, desired, cfg)


# --- schedule correctness ------------------------------------------------

def test_schedule_correctness():
    s = cosine_schedule(100)
    assert s.alpha_bar[0] == 1.0
    assert (np.diff(s.alpha_bar) < 0).all()
    assert abs(s.gamma1[1] - 1.0) < 1e-12
    assert abs(s.gamma2[1]) < 1e-12
    # independent recomputation at 1e-12
    f = lambda t: math.cos(((t / 100 + s.offset) / (1 + s.offset)) * math.pi / 2) ** 2
    raw = [f(t) / f(0) for t in range(101)]
    for t in range(1, 101):
        beta = min(max(1.0 - raw[t] / raw[t - 1], 1e-8), 0.999)
        assert abs(s.beta[t] - beta) < 1e-12
        assert abs(s.gamma1[t]
                   - beta * math.sqrt(s.alpha_bar[t - 1])
                   / (1.0 - s.alpha_bar[t])) < 1e-12
        assert abs(s.gamma2[t]
                   - (1.0 - s.alpha_bar[t - 1]) * math.sqrt(1.0 - beta)
                   / (1.0 - s.alpha_bar[t])) < 1e-12


# --- gradient suite ------------------------------------------------------

def test_gradient_suite_guidance_and_elbo():
    rng = np.random.default_rng(0)
    clf = ClassifierNet(3, 4, 8, 2, np.random.default_rng(1))
    vae = TabularVAE(3, 4, 8, 2, np.random.default_rng(1))
    Z = rng.normal(size=(4, 3, 4))
    Zp = rng.normal(size=(4, 3, 4))

    def guided(x):
        t = Tensor(x)
        return (validity_loss(t, clf, 1)
                + 0.1 * proximity_loss(Tensor(Z), t)
                + 0.01 * diversity_loss(t)).item()

    t = Tensor(Zp.copy(), requires_grad=True)
    (validity_loss(t, clf, 1) + 0.1 * proximity_loss(Tensor(Z), t)
     + 0.01 * diversity_loss(t)).backward()
    assert_grad_close(t.grad, fd_grad(guided, Zp))

    def elbo(x):
        return vae_elbo(Tensor(x), vae, np.random.default_rng(7)).item()

    t = Tensor(Z.copy(), requires_grad=True)
    vae_elbo(t, vae, np.random.default_rng(7)).backward()
    assert_grad_close(t.grad, fd_grad(elbo, Z))


# --- round trips ---------------------------------------------------------

def test_round_trips(bundle, full_dataset, tmp_path):
    ds = full_dataset
    for ids in ds.rows[:50]:
        row = decode_row(ids, ds.vocab, ds.schema)
        assert encode_row(row, ds.vocab, ds.schema) == ids
    dictionary = bundle.diffusion.dictionary
    ids = ds.encoded_matrix()[:50]
    Z = dictionary.embed(ids).data
    recovered, _ = reverse_lookup(Z, dictionary, "max")
    assert [tuple(r) for r in recovered] == [tuple(r) for r in ids]
    first, second = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    ckpt.save_diffusion(str(first), bundle.diffusion)
    ckpt.save_diffusion(str(second), ckpt.load_diffusion(str(first)))
    assert first.read_bytes() == second.read_bytes()


# --- forward-noise statistics -------------------------------------------

def test_forward_noise_statistics():
    steps, t, n = 100, 50, 10_000
    s = cosine_schedule(steps)
    rng = np.random.default_rng(0)
    z0 = np.full(n, -0.4)
    zt = forward_noise(z0, t, rng.normal(size=n), s)
    ab = s.alpha_bar[t]
    assert abs(zt.mean() - math.sqrt(ab) * -0.4) < 3 * math.sqrt((1 - ab) / n)
    assert abs(zt.var(ddof=1) - (1 - ab)) < 3 * (1 - ab) * math.sqrt(2 / (n - 1))


# --- generative plausibility --------------------------------------------

def test_generative_plausibility(bundle, full_dataset):
    rows = sample_unconditional(bundle.diffusion, 200, np.random.default_rng(5))
    violation = rule_violation_rate(rows, full_dataset.schema)
    uniform = 1.0 - 1.0 / len(SHADE_OF)
    assert uniform >= 0.5
    assert violation < 0.10


# --- method-ranking trend ------------------------------------------------

def test_method_ranking_trend(trend):
    scd, wachter = trend["scd"], trend["wachter"]
    dice, vae = trend["dice"], trend["dice_vae"]
    assert scd.validity >= 0.6
    assert scd.diversity >= dice.diversity
    for oracle in ("plausibility_recurrent", "plausibility_transformer"):
        s, w = getattr(scd, oracle), getattr(wachter, oracle)
        d, v = getattr(dice, oracle), getattr(vae, oracle)
        assert s < d and s < w, f"{oracle}: scd {s} not lowest ({d}, {w})"
        assert s < v < d, f"{oracle}: dice_vae {v} not between {s} and {d}"


# --- loss-drop ablations -------------------------------------------------

def _cell(cells, **keys):
    for c in cells:
        if all(c[k] == v for k, v in keys.items()):
            return c
    raise KeyError(keys)


def test_drop_validity_collapses_to_input(drop_cells):
    for method in ("scd", "dice"):
        cell = _cell(drop_cells, method=method, dropped="validity")
        assert cell["validity"] < 0.1
        assert cell["raw_mean_distance"] < 0.15  # near-identity to the input


def test_drop_diversity_separates_methods(drop_cells):
    assert _cell(drop_cells, method="dice", dropped="diversity")["diversity"] < 0.01
    assert _cell(drop_cells, method="scd", dropped="diversity")["diversity"] > 0.05


def test_drop_proximity_stays_within_quarter(drop_cells):
    base = _cell(drop_cells, method="scd", dropped="none")
    drop = _cell(drop_cells, method="scd", dropped="proximity")
    for metric in ("validity", "proximity", "diversity",
                   "plausibility_recurrent", "plausibility_transformer"):
        rel = abs(drop[metric] - base[metric]) / abs(base[metric])
        assert rel <= 0.25, f"{metric} moved {rel:.0%} without proximity loss"


# --- guided-step / initial-noise ablations -------------------------------

def test_tau_sweep_metric_stability(tau_cells):
    on = [c for c in tau_cells if c["add_initial_noise"]]
    assert [c["tau"] for c in on] == [25, 50, 100]
    for metric in ("validity", "proximity", "plausibility_recurrent",
                   "plausibility_transformer"):
        values = [c[metric] for c in on]
        mean = sum(values) / len(values)
        dev = max(abs(v - mean) / mean for v in values)
        assert dev <= 0.20, f"{metric} deviates {dev:.0%} across the tau sweep"
    diversities = [c["diversity"] for c in on]
    assert diversities == sorted(diversities), "diversity not non-decreasing"


@pytest.mark.parametrize("tau", [25, 50])
def test_initial_noise_raises_diversity(tau_cells, tau):
    on = _cell(tau_cells, tau=tau, add_initial_noise=True)
    off = _cell(tau_cells, tau=tau, add_initial_noise=False)
    assert off["diversity"] < on["diversity"]


@pytest.mark.xfail(
    reason="at tau = T the guided start is (nearly) pure noise either way: "
           "alpha_bar[T] is ~0, so the initial-noise flag cannot change the "
           "starting distribution and the strict ordering degenerates to a tie",
    strict=False,
)
def test_initial_noise_raises_diversity_at_full_tau(tau_cells):
    on = _cell(tau_cells, tau=100, add_initial_noise=True)
    off = _cell(tau_cells, tau=100, add_initial_noise=False)
    assert off["diversity"] < on["diversity"]


# --- strategies and counterfactual count ---------------------------------

def test_strategies_agree_on_validity(bundle, panel, desired, cfg):
    cells = strategy_grid(bundle, panel, desired, cfg)
    validities = {c["strategy"]: c["validity"] for c in cells}
    assert max(validities.values()) - min(validities.values()) <= 0.15
    assert validities["max"] >= max(validities.values()) - 1e-12


def test_count_sweep_needs_no_retuning(bundle, panel, desired, cfg):
    cells = count_grid(bundle, panel, desired, cfg)
    assert [c["n_counterfactuals"] for c in cells] == [2, 4, 8]
    for metric in ("validity", "proximity", "diversity",
                   "plausibility_recurrent", "plausibility_transformer"):
        values = [c[metric] for c in cells]
        mean = sum(values) / len(values)
        dev = max(abs(v - mean) / mean for v in values)
        assert dev <= 0.20, f"{metric} deviates {dev:.0%} across B in 2,4,8"


# --- metric unit values --------------------------------------------------

def test_metric_unit_values(bundle, full_dataset):
    ds = full_dataset
    ids = ds.encoded_matrix()
    preds = bundle.classifier.predict(bundle.diffusion.dictionary.embed(ids).data)
    enc, target = ds.rows[0], int(preds[0])
    rows = [decode_row(enc, ds.vocab, ds.schema)] * 3
    report = evaluate([enc] * 3, rows, enc, target, bundle.classifier,
                      bundle.diffusion.dictionary, bundle.recurrent,
                      bundle.transformer)
    assert report.validity == 1.0
    assert report.proximity == 1.0
    assert report.diversity == 0.0
    assert report.valid_only.count == 3
    assert report.valid_only.validity == 1.0

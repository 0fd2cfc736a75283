"""Config defaults, JSON overlay semantics, and field validation."""

import json

import pytest

from tabcf.config import (
    BaselineConfig,
    GuidanceConfig,
    RunConfig,
    load_config,
)


def test_defaults_run_config():
    cfg = RunConfig()
    assert cfg.diffusion.steps == 100
    assert cfg.guidance.tau <= cfg.diffusion.steps
    assert cfg.baseline.method == "dice"


def test_overlay_nested_merge():
    cfg = load_config({"diffusion": {"epochs": 5},
                       "guidance": {"tau": 12, "eta": 0.5}})
    assert cfg.diffusion.epochs == 5
    assert cfg.diffusion.steps == 100  # untouched sibling keeps its default
    assert cfg.guidance.tau == 12
    assert cfg.guidance.eta == 0.5


def test_overlay_from_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 9, "baseline": {"steps": 40}}))
    cfg = load_config(str(path))
    assert cfg.seed == 9
    assert cfg.baseline.steps == 40


def test_unknown_key_rejected():
    with pytest.raises(KeyError):
        load_config({"difusion": {"epochs": 5}})
    with pytest.raises(KeyError):
        load_config({"guidance": {"tua": 12}})


def test_guidance_validation():
    with pytest.raises(ValueError):
        GuidanceConfig(strategy="argmax")
    with pytest.raises(ValueError):
        GuidanceConfig(tau=0)
    with pytest.raises(ValueError):
        GuidanceConfig(eta=-0.1)
    with pytest.raises(ValueError):
        GuidanceConfig(n_counterfactuals=0)


def test_baseline_validation():
    with pytest.raises(ValueError):
        BaselineConfig(method="gradient-descent")

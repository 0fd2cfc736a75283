"""Run configuration with full defaults and JSON overlay semantics.

Every field has a default so a minimal config runs end-to-end; a JSON
config file overrides defaults key-by-key (nested sections merge).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

__all__ = [
    "DataConfig",
    "TrainConfig",
    "DiffusionConfig",
    "GuidanceConfig",
    "BaselineConfig",
    "RunConfig",
    "load_config",
]

STRATEGIES = ("max", "average", "full_sampling", "top3")
BASELINE_METHODS = ("wachter", "dice", "dice_vae")


@dataclass
class DataConfig:
    path: str = ""
    numeric_columns: list = field(default_factory=list)
    label_column: str = "label"
    bin_count: int = 20
    binning: str = "quantile"  # or "width"


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 120
    lr: float = 0.1
    warmup_steps: int = 0
    half_life_steps: int = 0  # 0 disables decay
    grad_clip: float = 0.0  # 0 disables clipping
    seed: int = 0


@dataclass
class DiffusionConfig:
    steps: int = 100  # diffusion chain length T
    schedule_offset: float = 0.008
    anchor_weight: float = 0.5  # token-anchoring CE; 0 restores plain MSE
    embed_dim: int = 16
    time_dim: int = 32
    hidden_dim: int = 64
    epochs: int = 800
    batch_size: int = 120
    lr: float = 0.2
    warmup_steps: int = 100
    half_life_steps: int = 4000
    grad_clip: float = 5.0
    seed: int = 0


@dataclass
class GuidanceConfig:
    tau: int = 50
    eta: float = 1.0
    n_counterfactuals: int = 4
    lambda_validity: float = 1.0
    lambda_proximity: float = 0.01
    lambda_diversity: float = 0.001
    lambda_plausibility: float = 0.0
    strategy: str = "max"
    temperature: float = 1.0
    add_initial_noise: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.n_counterfactuals < 1:
            raise ValueError("need at least one counterfactual")


@dataclass
class BaselineConfig:
    method: str = "dice"
    steps: int = 300
    lr: float = 2.5
    n_counterfactuals: int = 4
    lambda_validity: float = 1.0
    lambda_proximity: float = 0.1
    lambda_diversity: float = 0.0325
    lambda_plausibility: float = 0.2
    jitter: float = 0.01
    temperature: float = 1.0  # softmax sharpness of the one-hot relaxation
    seed: int = 0

    def __post_init__(self):
        if self.method not in BASELINE_METHODS:
            raise ValueError(f"unknown baseline method {self.method!r}")


@dataclass
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    classifier: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=200, lr=0.2))
    plausibility: TrainConfig = field(
        default_factory=lambda: TrainConfig(epochs=80, lr=0.15, grad_clip=1.0)
    )
    vae: TrainConfig = field(
        default_factory=lambda: TrainConfig(epochs=200, lr=0.05, grad_clip=1.0)
    )
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    classifier_hidden: int = 64
    ar_hidden: int = 32
    vae_latent: int = 8
    seed: int = 0


def _overlay(cls, base, overrides: dict):
    for key, value in overrides.items():
        if not hasattr(base, key):
            raise KeyError(f"unknown config key {key!r} in {cls.__name__}")
        current = getattr(base, key)
        if dataclasses.is_dataclass(current) and isinstance(value, dict):
            _overlay(type(current), current, value)
        else:
            setattr(base, key, value)
    return base


def load_config(source=None) -> RunConfig:
    """Build a RunConfig from defaults, overlaid with a JSON file or dict."""
    cfg = RunConfig()
    if source is None:
        return cfg
    if isinstance(source, str):
        with open(source, encoding="utf-8") as fh:
            source = json.load(fh)
    return _overlay(RunConfig, cfg, source)

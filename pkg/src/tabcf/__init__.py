"""Diffusion-based counterfactual explanations for tabular black-box
classifiers: embedding-space diffusion with guided denoising, gradient
search baselines, and a four-metric evaluation suite.
"""

from .config import (
    BaselineConfig,
    DataConfig,
    DiffusionConfig,
    GuidanceConfig,
    RunConfig,
    TrainConfig,
    load_config,
)
from .tabular import (
    ColumnSchema,
    Dataset,
    TabularError,
    Vocabulary,
    build_dataset,
    decode_row,
    encode_row,
    infer_schema,
    mismatch_distance,
    read_csv,
)
from .diffusion import (
    DiffusionModel,
    NoiseSchedule,
    cosine_schedule,
    denoise_step,
    forward_noise,
    sample_unconditional,
    train_diffusion,
)
from .guidance import (
    CounterfactualSet,
    GuidingLossBreakdown,
    diversity_loss,
    generate_counterfactuals,
    guiding_loss,
    proximity_loss,
    validity_loss,
)
from .baselines import baseline_generate, baseline_loss
from .metrics import (
    CounterfactualReport,
    diversity_score,
    evaluate,
    plausibility_score,
    proximity_score,
    report_table,
    validity_score,
)
from .nets import (
    ARPlausibilityModel,
    ClassifierNet,
    DenoiserNet,
    EmbeddingDictionary,
    TabularVAE,
    ar_nll,
    column_probabilities,
    reverse_lookup,
    train_classifier,
    train_plausibility,
    train_vae,
    vae_elbo,
)

__version__ = "0.1.0"

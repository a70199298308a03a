"""Finger-vein verification with sparse-autoencoder features."""

from ._fvein import (
    Bundle,
    FveinError,
    PipelineConfig,
    SampleRecord,
    SynthConfig,
    auc,
    autoencoder_cost,
    eer,
    fit_whitening,
    kl_divergence,
    learn_features,
    load_dataset,
    read_image,
    roc,
    sweep,
    synthesize,
)

__all__ = [
    "Bundle",
    "FveinError",
    "PipelineConfig",
    "SampleRecord",
    "SynthConfig",
    "auc",
    "autoencoder_cost",
    "eer",
    "fit_whitening",
    "kl_divergence",
    "learn_features",
    "load_dataset",
    "read_image",
    "roc",
    "sweep",
    "synthesize",
]

"""Topic models from iterative clustering and decomposition of embeddings."""

from ._core import (
    ConfigError,
    DegenerateVectorError,
    LoadError,
    LookupError,
    Model,
    ScaConfig,
    cv_coherence,
    fit,
    ground_truth_scores,
    load_embeddings,
    noise_rate,
    npmi_coherence,
    preprocess_text,
    sample_overlap,
    save_embeddings,
    score_recovery,
    set_log_level,
    spectral_norm,
    synth_generate,
    tokenize,
    topic_diversity,
)

__all__ = [
    "ConfigError",
    "DegenerateVectorError",
    "LoadError",
    "LookupError",
    "Model",
    "ScaConfig",
    "cv_coherence",
    "fit",
    "ground_truth_scores",
    "load_embeddings",
    "noise_rate",
    "npmi_coherence",
    "preprocess_text",
    "sample_overlap",
    "save_embeddings",
    "score_recovery",
    "set_log_level",
    "spectral_norm",
    "synth_generate",
    "tokenize",
    "topic_diversity",
]

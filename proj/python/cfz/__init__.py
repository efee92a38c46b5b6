"""Conditional-VAE feature synthesis for zero-shot learning."""

from ._cfz import (
    ConfigError,
    DataError,
    Dataset,
    Model,
    ShapeError,
    TrainConfig,
    cce_loss,
    clusterability_nmi,
    decode_feature_file,
    encode_feature_file,
    gaussian_similarity_loss,
    generate_synthetic,
    harmonic_mean,
    kl_to_standard_normal,
    load_checkpoint,
    load_dataset,
    normalized_mutual_information,
    per_class_top1,
    run_ablation,
    run_fewshot,
    run_pipeline,
    variance_stats,
)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Python interface to the hypergraph wavelet-diffusion recommender core."""

from _hyperwave import (
    ConfigError,
    DataError,
    NumericError,
    bpr_loss,
    gradcheck_max_error,
    infonce,
    load_interactions_summary,
    ndcg_at_k,
    propagation_dense,
    recall_at_k,
    synth_dataset,
    train_eval,
    wavelet_theta,
)

__all__ = [
    "ConfigError",
    "DataError",
    "NumericError",
    "bpr_loss",
    "gradcheck_max_error",
    "infonce",
    "load_interactions_summary",
    "ndcg_at_k",
    "propagation_dense",
    "recall_at_k",
    "synth_dataset",
    "train_eval",
    "wavelet_theta",
]

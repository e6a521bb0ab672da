"""Shapley-value attribution for point-cloud + tabular networks."""

from svehnn._core import (
    Model,
    __version__,
    exact_shapley,
    generate_hetero,
    generate_xi,
    hull_template,
    load_model,
    model_from_json,
    mse,
    ndcg,
    occlusion,
    save_model,
    shapley_sampling,
    spearman,
    svehnn,
    svehnn_mc,
    train,
)

__all__ = [
    "Model",
    "__version__",
    "exact_shapley",
    "generate_hetero",
    "generate_xi",
    "hull_template",
    "load_model",
    "model_from_json",
    "mse",
    "ndcg",
    "occlusion",
    "save_model",
    "shapley_sampling",
    "spearman",
    "svehnn",
    "svehnn_mc",
    "train",
]

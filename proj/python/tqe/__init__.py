from ._tqe import (
    Model,
    TqeError,
    augment,
    ensemble,
    mae,
    mse,
    pearson,
    rmse,
    tokenize_ids,
    train,
    zscore,
)

__all__ = [
    "Model",
    "TqeError",
    "augment",
    "ensemble",
    "mae",
    "mse",
    "pearson",
    "rmse",
    "tokenize_ids",
    "train",
    "zscore",
]

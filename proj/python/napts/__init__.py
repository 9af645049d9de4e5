"""Python bindings for the napts trust-region training library."""

from ._core import (
    Dataset,
    Net,
    ParamPartition,
    agreement_ratios,
    clip_step,
    correction_candidate,
    format_metrics_csv,
    generate_dataset,
    model_decrease,
    radius_update,
    train,
)

__all__ = [
    "Dataset",
    "Net",
    "ParamPartition",
    "agreement_ratios",
    "clip_step",
    "correction_candidate",
    "format_metrics_csv",
    "generate_dataset",
    "model_decrease",
    "radius_update",
    "train",
]

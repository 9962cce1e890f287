"""Python bindings for the federated drowsiness-detection simulator."""

from fedssta._core import (
    __version__,
    cosine,
    generate_sequence,
    gsc_report,
    hog_descriptor,
    metrics_from_counts,
    recover_gradient,
    run_experiment,
    softmax,
)

__all__ = [
    "__version__",
    "cosine",
    "generate_sequence",
    "gsc_report",
    "hog_descriptor",
    "metrics_from_counts",
    "recover_gradient",
    "run_experiment",
    "softmax",
]

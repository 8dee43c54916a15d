"""Density-adaptive clustering that grows clusters under an Isolation Kernel set similarity."""

from .data import (
    ImageTensor,
    LabeledDataset,
    generate_gaussian_mixture,
    generate_ring_g,
    load_csv,
    load_image_cielab,
    write_segmented_image,
)
from .engine import (
    NOISE,
    PSKC,
    ClusteringResult,
    PskcParams,
    cluster,
    max_iterations,
    objective,
    post_process,
)
from .evaluation import EvalReport, f1_score, scaleup_bench, stability_trial
from .exceptions import DataFormatError, InvalidInputError, InvalidParameterError, PskcError
from .isolation import (
    KernelParams,
    PartitioningModel,
    build_model,
    embed,
    embed_many,
    gram_matrix,
    kappa,
    load_model,
    save_model,
)
from .pointset import MeanMap, add_members, mean_map, psk_similarity, remove_members

__version__ = "0.1.0"

__all__ = [
    "NOISE", "PSKC", "ClusteringResult", "DataFormatError", "EvalReport", "ImageTensor",
    "InvalidInputError", "InvalidParameterError", "KernelParams", "LabeledDataset", "MeanMap",
    "PartitioningModel", "PskcError", "PskcParams", "add_members", "build_model", "cluster",
    "embed", "embed_many", "f1_score", "generate_gaussian_mixture", "generate_ring_g",
    "gram_matrix", "kappa", "load_csv", "load_image_cielab", "load_model", "max_iterations",
    "mean_map", "objective", "post_process", "psk_similarity", "remove_members", "save_model",
    "scaleup_bench", "stability_trial", "write_segmented_image",
]

"""Abs-activated linear layers read as per-principal-component Mahalanobis
distances: Gaussian mixtures, whitening, layer construction, translation,
data-driven initialization and a small trainer."""

from distlayer._kernels import BACKEND
from distlayer.gaussian import (
    Dataset,
    Gaussian,
    GaussianMixture,
    WhiteningBasis,
    component_distance,
    mahalanobis,
    mahalanobis_pca,
    rotate_whitening,
    sample_gmm,
    whitening_basis,
)
from distlayer.init import ClusterModel, Strategy, estimate_cluster_gaussians, initialize_layer, kmeans
from distlayer.layer import (
    Activation,
    DistanceLayer,
    IntensityKind,
    abs_to_relu,
    forward,
    layer_from_gaussian,
    node_from_component,
    to_intensity,
)
from distlayer.linalg import EigenDecomposition, eigh_symmetric, least_squares, random_rotation
from distlayer.train import (
    Loss,
    MLPModel,
    TrainConfig,
    gradient_check,
    mlp_backward,
    mlp_forward,
    orthogonality_penalty,
    train,
)
from distlayer.translate import (
    TranslationReport,
    gmm_to_network,
    network_to_gmm,
    recover_prototype,
    translate_network,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Dataset",
    "Gaussian",
    "GaussianMixture",
    "WhiteningBasis",
    "component_distance",
    "mahalanobis",
    "mahalanobis_pca",
    "rotate_whitening",
    "sample_gmm",
    "whitening_basis",
    "ClusterModel",
    "Strategy",
    "estimate_cluster_gaussians",
    "initialize_layer",
    "kmeans",
    "Activation",
    "DistanceLayer",
    "IntensityKind",
    "abs_to_relu",
    "forward",
    "layer_from_gaussian",
    "node_from_component",
    "to_intensity",
    "EigenDecomposition",
    "eigh_symmetric",
    "least_squares",
    "random_rotation",
    "Loss",
    "MLPModel",
    "TrainConfig",
    "gradient_check",
    "mlp_backward",
    "mlp_forward",
    "orthogonality_penalty",
    "train",
    "TranslationReport",
    "gmm_to_network",
    "network_to_gmm",
    "recover_prototype",
    "translate_network",
    "__version__",
]

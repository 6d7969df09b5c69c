"""Topological signal processing and simplicial neural networks in numpy/scipy."""

__version__ = "0.1.0"

from .complex import (
    HodgeTriple,
    SimplicialComplex,
    build_complex,
    flag_complex,
    hodge_laplacians,
    incidence_matrix,
    verify_chain_property,
)
from .data import (
    FeatureFile,
    Mask,
    TrajectoryDataset,
    load_complex,
    load_features,
    mask_features,
    save_complex,
    save_features,
    synth_citation_like,
    synth_trajectories,
)
from .errors import *  # noqa: F401,F403
from .training import (
    AdamState,
    GradientTape,
    Metrics,
    SimplicialModel,
    TrainConfig,
    adam_step,
    count_parameters,
    cross_entropy_loss,
    l1_loss,
    train_classification,
    train_imputation,
)
from .tsp import (
    HodgeParts,
    SpectralBasis,
    hodge_decompose,
    sft_basis,
    sft_forward,
    sft_inverse,
    spatial_filter,
    spectral_filter,
)

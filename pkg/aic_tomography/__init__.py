# Model selection for few-qubit state estimation

__version__ = "0.1.0"

from .errors import (
    TomographyError,
    NonHermitianInput,
    MaskLengthMismatch,
    AlphaOutOfRange,
    MissingSetting,
    DimensionMismatch,
    NegativeProbability,
    InvalidDistribution,
    TooFewShots,
    OddShotCount,
    DesignMismatch,
    EmptyDataset,
    AllPointsUnphysical,
    SampleTooSmall,
    InvalidPartition,
    NoSignChange,
    AllZeroWeights,
    PseudostateRejected,
    ConfigInvalid,
)
from .qcore import (
    DensityMatrix,
    TraceOneMatrix,
    kron,
    pauli_word,
    hermitian_eigenvalues,
    jacobi_eigh,
    partial_transpose,
    is_psd,
)
from .states import (
    PureState,
    Pseudostate,
    ModelFamily,
    ModelKind,
    dicke_state,
    target_state,
    depolarize,
    model_m1,
    model_m2,
    pseudostate_from_counts,
)
from .measurement import (
    Povm,
    MeasurementDesign,
    Dataset,
    sic_povm_qubit,
    product_sic_design,
    collective_pauli_design,
    born_probabilities,
    sample_counts,
    simulate_dataset,
    expected_dataset,
    split_dataset,
    combine_datasets,
)
from .inference import (
    log_likelihood,
    grid_log_likelihoods,
    fpm_loglik_upper_bound,
    fpm_parameter_count,
    aic,
    aicc,
    fit_mle,
    rank_models,
    approx_mle_state,
    cross_model_protocol,
    compare_m1_m2,
)
from .entanglement import (
    NegativityTriple,
    negativity,
    generalized_negativities,
    collective_spin,
    witness_operator,
    witness_expectation,
    witness_threshold,
    witness_phase_curve,
)
from .bayes import (
    PosteriorGrid,
    posterior_over_params,
    negativity_posterior,
    physicality_map,
)
from .logging_config import (
    setup_logging,
    stop_logging,
    get_logger,
    ThreadSafeLoggingConfig,
)

__all__ = [
    "__version__",
    # Errors
    "TomographyError",
    "NonHermitianInput",
    "MaskLengthMismatch",
    "AlphaOutOfRange",
    "MissingSetting",
    "DimensionMismatch",
    "NegativeProbability",
    "InvalidDistribution",
    "TooFewShots",
    "OddShotCount",
    "DesignMismatch",
    "EmptyDataset",
    "AllPointsUnphysical",
    "SampleTooSmall",
    "InvalidPartition",
    "NoSignChange",
    "AllZeroWeights",
    "PseudostateRejected",
    "ConfigInvalid",
    # Linear algebra
    "DensityMatrix",
    "TraceOneMatrix",
    "kron",
    "pauli_word",
    "hermitian_eigenvalues",
    "jacobi_eigh",
    "partial_transpose",
    "is_psd",
    # States and models
    "PureState",
    "Pseudostate",
    "ModelFamily",
    "ModelKind",
    "dicke_state",
    "target_state",
    "depolarize",
    "model_m1",
    "model_m2",
    "pseudostate_from_counts",
    # Measurement
    "Povm",
    "MeasurementDesign",
    "Dataset",
    "sic_povm_qubit",
    "product_sic_design",
    "collective_pauli_design",
    "born_probabilities",
    "sample_counts",
    "simulate_dataset",
    "expected_dataset",
    "split_dataset",
    "combine_datasets",
    # Inference
    "log_likelihood",
    "grid_log_likelihoods",
    "fpm_loglik_upper_bound",
    "fpm_parameter_count",
    "aic",
    "aicc",
    "fit_mle",
    "rank_models",
    "approx_mle_state",
    "cross_model_protocol",
    "compare_m1_m2",
    # Entanglement
    "NegativityTriple",
    "negativity",
    "generalized_negativities",
    "collective_spin",
    "witness_operator",
    "witness_expectation",
    "witness_threshold",
    "witness_phase_curve",
    # Posteriors
    "PosteriorGrid",
    "posterior_over_params",
    "negativity_posterior",
    "physicality_map",
    # Logging
    "setup_logging",
    "stop_logging",
    "get_logger",
    "ThreadSafeLoggingConfig",
]

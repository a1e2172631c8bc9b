"""Sublinear-query eigenvalue estimation by random principal-submatrix sampling."""
from .errors import (
    CapacityError,
    ConfigError,
    DegenerateSampleError,
    EigSampleError,
    RestrictionError,
    ShapeError,
)
from .matrix import (
    EstimatorConfig,
    QueryLedger,
    SpectrumEstimate,
    SymmetricMatrixOracle,
    derive_seed,
    exact_spectrum,
    load_matrix,
    query_entry,
    spectrum_error,
)
from .generators import KINDS, generate
from .uniform import SampleDraw, build_sampled_matrix, draw_uniform, estimate_spectrum_uniform
from .rownorm import (
    SplitDraw,
    ZeroingRule,
    estimate_spectrum_restricted,
    estimate_spectrum_rownorm,
    is_zeroed,
    split_matrix,
    zeroed_matrix,
)
from .eigvec import top_eigenvector, max_generalized_rayleigh, build_gram_pair, draw_columns
from .hadamard import HadamardRotation, conjugate, fwht, jl_row_norms, sketch_spectrum
from .analysis import (
    CheckReport,
    OuterMiddleSplit,
    check_assumption,
    eigenbasis_at_least,
    incoherence_report,
    leverage_scores,
    middle_norm_check,
    split_outer_middle,
    subspace_distortion,
)
from .experiment import ExperimentConfig, run_experiment

__all__ = [name for name in dir() if not name.startswith("_")]

"""Laplace-approximated collapse-uncollapse inference for multinomial
logistic-normal regression and related latent matrix-t process models."""

from ._core import (
    DlmSpec,
    DomainError,
    Error,
    FactorizationError,
    NumericalError,
    ParameterError,
    ParseError,
    alr_forward,
    alr_inverse,
    clr_from_alr,
    collapse_gmcl,
    collapse_gmdlm,
    collapsed_objective,
    fit,
    log_density_matrix_t,
    pclm,
    sample_matrix_t,
    simulate,
    smooth_gmdlm,
    smoothed_moments_gmdlm,
    uncollapse_gmcl,
    zero_fraction,
)

__all__ = [
    "DlmSpec",
    "DomainError",
    "Error",
    "FactorizationError",
    "NumericalError",
    "ParameterError",
    "ParseError",
    "alr_forward",
    "alr_inverse",
    "clr_from_alr",
    "collapse_gmcl",
    "collapse_gmdlm",
    "collapsed_objective",
    "fit",
    "log_density_matrix_t",
    "pclm",
    "sample_matrix_t",
    "simulate",
    "smooth_gmdlm",
    "smoothed_moments_gmdlm",
    "uncollapse_gmcl",
    "zero_fraction",
]

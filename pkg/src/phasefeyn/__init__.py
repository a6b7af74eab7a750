"""Numerical white-noise phase-space Feynman integrals.

Block-operator Gauss kernels on a midpoint time grid, Donsker-delta
pinning, T-transforms, Green's functions and the canonical commutator,
each checked against an independent oracle.
"""

from .errors import (
    GaussianPreconditionError,
    GramConditionError,
    GridMismatchError,
    IllConditionedError,
    PhaseFeynError,
    VanishingDeterminantError,
)
from .grid import PhaseFunction, TimeGrid, bilinear_pair, build_grid, indicator
from .kernels import (
    ExponentCoefficients,
    GaussKernelSpec,
    TTransformResult,
    donsker_t_transform,
    exponent_coefficients,
    gaussian_quadratic_expectation,
    master_t_transform,
    nexp_t_transform,
    pinning_gram,
    pointprod_t_transform,
)
from .moments import (
    CcrParams,
    Mollifier,
    ccr_difference,
    ccr_limit,
    moment1,
    moment2,
    smeared_delta,
    wick_derivative_oracle,
    wick_mixed_oracle,
)
from .operators import (
    BlockOperator,
    assemble_N,
    fredholm_det,
    invert_N,
    make_A,
    make_K_free,
    make_L_ho,
    spectrum_A,
)
from .propagators import (
    free_green,
    free_t_transform,
    ho_green,
    ho_t_transform,
    mehler_kernel,
    schrodinger_residual,
    time_slice_oracle,
)

__version__ = "0.1.0"

"""Heat kernels of Jacobi expansions and of the spaces they describe.

Covers Jacobi heat kernels, compact rank-one symmetric spaces, the unit ball
and the unit simplex, the sharp two-sided envelopes for each, and the sweeps
and identity checks that measure kernel against envelope.
"""

from __future__ import annotations

from .envelopes import (
    EnvelopeValue,
    env_ball,
    env_jac_gen,
    env_jac_spec,
    env_simplex,
    env_symmetric,
    env_symmetric_derivative,
    lemma_f7_pair,
    lemma_fvii_pair,
)
from .jacobi_kernel import (
    DEFAULT_TOL,
    T_MIN,
    BelowTimeFloorError,
    HeatQuery,
    heat_kernel,
    heat_kernel_reduced,
    truncation_order,
)
from .model_spaces import (
    SpaceDescriptor,
    alpha_beta,
    ball_heat_kernel,
    default_catalog,
    simplex_heat_kernel,
    symmetric_heat_kernel,
)
from .quadrature import QuadratureRule, gauss_jacobi_rule
from .specfun import DomainError, JacobiParams, jacobi_poly
from .sweeps import RatioReport, SweepSpec, run_ratio_sweep
from .verify import run_identity_checks, run_varadhan_check

__version__ = "0.1.0"

__all__ = [
    "BelowTimeFloorError",
    "DEFAULT_TOL",
    "DomainError",
    "EnvelopeValue",
    "HeatQuery",
    "JacobiParams",
    "QuadratureRule",
    "RatioReport",
    "SpaceDescriptor",
    "SweepSpec",
    "T_MIN",
    "alpha_beta",
    "ball_heat_kernel",
    "default_catalog",
    "env_ball",
    "env_jac_gen",
    "env_jac_spec",
    "env_simplex",
    "env_symmetric",
    "env_symmetric_derivative",
    "gauss_jacobi_rule",
    "heat_kernel",
    "heat_kernel_reduced",
    "jacobi_poly",
    "lemma_f7_pair",
    "lemma_fvii_pair",
    "run_identity_checks",
    "run_ratio_sweep",
    "run_varadhan_check",
    "simplex_heat_kernel",
    "symmetric_heat_kernel",
    "truncation_order",
]

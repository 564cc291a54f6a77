"""Numerical laboratory for transition densities of subordinate Brownian
motions with Gaussian components, their killed counterparts in model domains,
and the two-sided estimate envelopes they are compared against."""

__version__ = "0.1.0"

from .bernstein import (  # noqa: F401
    BernsteinSpec,
    LaplaceExponent,
    ScalingWitness,
    builtin_exponent,
    certify_scaling,
    eval_H,
    eval_phi,
    invert_phi,
    shift_threshold,
)

"""Numerical laboratory for the doubly nonlinear diffusion equation

    d/dt (u^q) - div(|Du|^(p-2) Du) = 0.

Subpackages:
    core        exponent arithmetic, regime classification, intrinsic geometry,
                g-functions, time mollifiers
    exact       catalog of closed-form solutions / counterexample families
    solver      implicit finite-volume solver for Cauchy-Dirichlet problems
    diagnostics empirical measurement of Harnack / boundedness / extinction /
                gradient estimates
    porous      porous-media flow models -> PDE parameter mapping
    cli         configuration-driven experiment runner
"""

from .core import (
    ExponentTriple,
    RegimeFlags,
    IntrinsicCylinder,
    Grid1D,
    Field,
    lambda_r,
    classify,
    g_signed,
    intrinsic_distance,
    mollify_exp,
    steklov,
)

__version__ = "0.1.0"

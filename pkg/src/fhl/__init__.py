"""Numerical laboratory for fractional Hartree blow-up asymptotics.

Modules
-------
model        parameter validation, critical exponents
constants    closed-form constants via a Gamma-function chain
grids        domains and sampled fields
riesz        weakly singular Riesz-potential convolution
bubbles      extremal bubbles and their identities
spectral     Dirichlet sine eigenbasis, Green and Robin functions
solver       subcritical Hartree and Brezis-Nirenberg solves
diagnostics  eps-continuation and asymptotic-law checks
cli          command-line surface
"""

__version__ = "0.1.0"

from .model import Params, Regime, exponents, make_params  # noqa: F401

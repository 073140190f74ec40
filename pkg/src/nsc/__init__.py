"""Pseudo-spectral toolkit for the rotating (Navier-Stokes-Coriolis) mild formulation.

Submodules
----------
spectral_core        grids, fields, transforms, Leray projection, nonlinear term
littlewood_paley     dyadic blocks, Besov and mixed space-time norms
coriolis_semigroup   heat / oscillation operators and the Stokes-Coriolis semigroup
mild_solver          Duhamel operator, ETD time stepping, Picard iteration
continuum            axisymmetric whole-space evaluator used by dispersive checks
dispersive_lab       kernel decay, Strichartz / vanishing / threshold / asymptotic sweeps
cli                  ``nsc`` command-line front end
"""
from importlib.metadata import PackageNotFoundError, version

from .kernels import BACKEND

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]

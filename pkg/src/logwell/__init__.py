"""Spectra of multi-well log-anharmonic oscillators.

Two independent routes: per-well large-N expansions around each minimum
(:mod:`logwell.largen`) and a finite-difference grid solver
(:mod:`logwell.numeric`).  :mod:`logwell.catastrophe` compares well ground
states along parameter paths to find where the ground state jumps wells.
"""
__version__ = "0.1.0"

from .errors import LogwellError, NumericalError, SpecError
from .potential import PotentialSpec, evaluate, singularities, taylor_coeffs, validate
from .wells import Well, find_minima

__all__ = [
    "LogwellError",
    "NumericalError",
    "PotentialSpec",
    "SpecError",
    "Well",
    "__version__",
    "evaluate",
    "find_minima",
    "singularities",
    "taylor_coeffs",
    "validate",
]

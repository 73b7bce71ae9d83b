"""Hypergeometric harmonic analysis on rank-1/2 root systems.

Subpackages by theme: ``rootsys`` (root systems, Weyl groups, chambers),
``trigpoly`` (exact Cherednik algebra), ``evaluate`` (G/F eigenfunction
engines), ``spectral`` (c-function and Plancherel densities), ``heat``
(heat kernels, transforms, resolvent), ``verify`` (certification suites),
``cli`` (command-line front end).
"""

from .rootsys import (
    build_root_system,
    chamber_decompose,
    enumerate_Qplus,
    multiplicity,
    weyl_group,
)
from .trigpoly import CherednikContext, TrigPolynomial, make_context

__all__ = [
    "build_root_system",
    "weyl_group",
    "multiplicity",
    "chamber_decompose",
    "enumerate_Qplus",
    "CherednikContext",
    "TrigPolynomial",
    "make_context",
]

__version__ = "0.1.0"

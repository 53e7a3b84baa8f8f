"""Numerical laboratory for boundary layers of the radial nonlocal sinh-Gordon equation."""

from .params import DomainError, LayerPoint, ProblemParams, TwoTerm

__all__ = ["DomainError", "LayerPoint", "ProblemParams", "TwoTerm"]
__version__ = "0.1.0"

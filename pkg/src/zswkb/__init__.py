"""Semiclassical scattering data of the Zakharov-Shabat operator."""
from .potentials import PotentialSpec

__all__ = ["PotentialSpec"]
__version__ = "0.1.0"

"""Emulation of a small quantum anneal as exact dynamics and as a gate circuit."""

from .model import LINEAR, AnnealSchedule, IsingModel, load_model, t4_model
from .reference import ConvergenceCriteria, ConvergenceError, evolve_exact

__all__ = [
    "LINEAR",
    "AnnealSchedule",
    "IsingModel",
    "load_model",
    "t4_model",
    "ConvergenceCriteria",
    "ConvergenceError",
    "evolve_exact",
]
__version__ = "0.1.0"

"""Radial stable solutions of Delta u + mu |x|^-2 u + |x|^l |u|^(p-1) u = 0.

Modules: exponents (critical exponents and curves), regions (labels of the
(mu, p)-plane), phase (Emden-Fowler phase plane and shooting), stability
(second variation), estimates (integral estimates and Pohozaev), cli.
"""

from .exponents import Parameters, ParameterError, derive, p_critical
from .phase import DynamicsError
from .regions import RegionLabel, classify

__all__ = ["Parameters", "ParameterError", "derive", "p_critical", "DynamicsError",
           "RegionLabel", "classify"]
__version__ = "0.1.0"

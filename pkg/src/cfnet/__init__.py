"""Downlink ergodic-rate estimation for clustered cell-free networks."""

from .config import ConfigError, NetworkConfig, RegPolicy
from .kernels import BACKEND
from .linkops import mc_ergodic_rate
from .sere import sere_rate
from .topology import generate_network

__all__ = [
    "BACKEND",
    "ConfigError",
    "NetworkConfig",
    "RegPolicy",
    "generate_network",
    "mc_ergodic_rate",
    "sere_rate",
]

__version__ = "0.1.0"

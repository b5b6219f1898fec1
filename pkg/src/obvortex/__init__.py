"""Random vortex and expansion-rate simulation of weakly compressible
Boussinesq flow over a heated wall, with finite-difference oracles."""

__version__ = "0.1.0"

from .config import SimConfig, format_config, parse_config, parse_config_text
from .engine import initialize, simulate, step
from .errors import ObvortexError
from .io import run

__all__ = ["SimConfig", "format_config", "parse_config", "parse_config_text",
           "initialize", "simulate", "step", "run", "ObvortexError", "__version__"]

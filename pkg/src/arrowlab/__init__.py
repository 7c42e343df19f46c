"""arrowlab: a laboratory for the arrow of time.

Three engines under one roof: a bit-exactly reversible soft-disc gas,
stochastic position-collapse dynamics on a lattice, and branching-topology
analysis of finite transition systems, tied together by a reproducible
scenario runner.
"""

from .errors import (
    ArrowLabError,
    ConfigError,
    DomainError,
    EngineError,
    FixedPointOverflowError,
)
from .fixedpoint import SCALE, SCALE_BITS, FixedPoint
from .graining import CoarseGraining, Histogram, coarse_grain, entropy
from .manifest import RunManifest
from .rng import RngStream, child_seed, rng_stream

__version__ = "0.1.0"

__all__ = [
    "ArrowLabError",
    "ConfigError",
    "CoarseGraining",
    "DomainError",
    "EngineError",
    "FixedPoint",
    "FixedPointOverflowError",
    "Histogram",
    "RngStream",
    "RunManifest",
    "SCALE",
    "SCALE_BITS",
    "child_seed",
    "coarse_grain",
    "entropy",
    "rng_stream",
]

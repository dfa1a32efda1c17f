"""Exact and Monte Carlo analysis of the step/doubling random walk on Z_n."""

from .errors import *  # noqa: F401,F403
from .rng import RngStream
from .walk_core import (
    StepDistribution,
    TheoryReport,
    WalkConfig,
    load_config,
    make_config,
    theory_report,
    validate_config,
)
from .exact_engine import DistVector, MixingProfile, tv_to_uniform

__all__ = [
    "DistVector",
    "MixingProfile",
    "RngStream",
    "StepDistribution",
    "TheoryReport",
    "WalkConfig",
    "load_config",
    "make_config",
    "theory_report",
    "tv_to_uniform",
    "validate_config",
]

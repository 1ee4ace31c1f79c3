"""Critical Bellman-Harris branching processes with small-population conditioning.

Subpackages by role:

* models    -- offspring/lifetime laws, validation, derived constants
* series    -- exact population-size laws via truncated pgf recursion
* renewal   -- discrete renewal function, expected young-particle counts
* simulate  -- genealogy Monte Carlo and the rejection-conditioning harness
* limits    -- closed-form limit-law and asymptotic-predictor evaluators
* stats     -- empirical-vs-analytic comparison machinery
* cli       -- declarative experiment runner (`bhreduce` entry point)
"""

from .models import (
    LifetimeLaw,
    Model,
    ModelConstants,
    ModelError,
    OffspringLaw,
    builtin_model,
    constants,
    load_model,
    make_lifetime,
    make_model,
    make_offspring,
)
from .rng import Stream
from .schedules import Schedule, parse_schedule

__all__ = [
    "LifetimeLaw",
    "Model",
    "ModelConstants",
    "ModelError",
    "OffspringLaw",
    "Schedule",
    "Stream",
    "builtin_model",
    "constants",
    "load_model",
    "make_lifetime",
    "make_model",
    "make_offspring",
    "parse_schedule",
]

__version__ = "0.1.0"

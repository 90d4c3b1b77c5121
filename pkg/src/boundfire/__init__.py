"""Boundary-driven forest fires on the triangular lattice.

Site percolation estimators, the forest-fire process with boundary
ignitions, cone-site statistics, exponent fits and a batch runner.
"""

from ._jit import BACKEND
from .analysis import PowerLawFit, binomial_ci, check_scaling_relations, fit_power_law
from .ctmc import BurntBy, EventuallyBurnt, exact_small_ctmc
from .forestfire import (
    NO_RECOVERY,
    RECOVERY,
    T_C,
    ProcessSpec,
    RunRecord,
    eventual_burn_closure,
    origin_burn_experiment,
    simulate,
)
from .lattice import Domain, Hexagon, HalfPlaneStrip, Rectangle, Rhombus, Site, SiteSet, build_domain
from .percolation import Estimate, characteristic_length, estimate_event, evaluate_event, sample

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "PowerLawFit", "binomial_ci", "check_scaling_relations", "fit_power_law",
    "BurntBy", "EventuallyBurnt", "exact_small_ctmc",
    "NO_RECOVERY", "RECOVERY", "T_C", "ProcessSpec", "RunRecord", "eventual_burn_closure",
    "origin_burn_experiment", "simulate",
    "Domain", "Hexagon", "HalfPlaneStrip", "Rectangle", "Rhombus", "Site", "SiteSet", "build_domain",
    "Estimate", "characteristic_length", "estimate_event", "evaluate_event", "sample",
]

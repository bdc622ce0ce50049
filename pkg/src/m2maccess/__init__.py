"""Proactive estimation and serving access frames for massive M2M random access in LTE.

Submodules:

* :mod:`m2maccess.estimator` - contender-count estimation from one RAO;
* :mod:`m2maccess.occupancy` and :mod:`m2maccess.dimensioning` - serving-phase
  reliability, sizing and barring;
* :mod:`m2maccess.traffic` - alarm bursts and periodic reports;
* :mod:`m2maccess.sim` - event-driven simulation of legacy and proposed access;
* :mod:`m2maccess.experiments` - scenario files, runners and the CLI.
"""

from .dimensioning import (
    ContentionSpace,
    FrameBudget,
    ServingPhaseDimensioner,
    ServingPlan,
    TwoClassPlan,
    dimension_single,
    dimension_two_class,
    optimal_barring,
    optimal_split,
    reliability,
    reliability_with_barring,
    required_raos,
)
from .estimator import (
    CardinalityEstimator,
    Estimate,
    EstimatorConfig,
    PreambleObservation,
    PreambleState,
    estimate,
    simulate_estimation_rao,
)
from .occupancy import collision_pmf, success_pmf

__version__ = "0.1.0"

__all__ = [
    "CardinalityEstimator",
    "ContentionSpace",
    "Estimate",
    "EstimatorConfig",
    "FrameBudget",
    "PreambleObservation",
    "PreambleState",
    "ServingPhaseDimensioner",
    "ServingPlan",
    "TwoClassPlan",
    "collision_pmf",
    "dimension_single",
    "dimension_two_class",
    "estimate",
    "optimal_barring",
    "optimal_split",
    "reliability",
    "reliability_with_barring",
    "required_raos",
    "simulate_estimation_rao",
    "success_pmf",
]

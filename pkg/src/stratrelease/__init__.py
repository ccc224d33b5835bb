"""Strategic classification with partial information release.

Agents hold a shared prior over which classifier a learner deploys; the
learner may publish any subset of the hypothesis class that contains the
deployed classifier.  This package computes agents' best responses to the
resulting posterior and the learner's optimal release.
"""

from stratrelease.core import (
    AbsoluteCost,
    Box,
    CostTable,
    FiniteDomain,
    Instance,
    Interval,
    LinearClassifier,
    PNormCost,
    Posterior,
    Prior,
    TableClassifier,
    ThresholdClassifier,
    UniformIntervalPrior,
    agent_utility,
    restrict_posterior,
)
from stratrelease.distributions import DataDistribution, interval_prob, sample

__version__ = "0.1.0"

__all__ = [
    "AbsoluteCost",
    "Box",
    "CostTable",
    "DataDistribution",
    "FiniteDomain",
    "Instance",
    "Interval",
    "LinearClassifier",
    "PNormCost",
    "Posterior",
    "Prior",
    "TableClassifier",
    "ThresholdClassifier",
    "UniformIntervalPrior",
    "agent_utility",
    "interval_prob",
    "restrict_posterior",
    "sample",
]

"""Structured-bandit simulation with feature-guided hierarchical priors.

Semi-bandit, cascading-click and multinomial-choice environments, exact
and MCMC posterior machinery, four Thompson-sampling policies, and a
seeded regret-measurement harness.
"""

__version__ = "0.1.0"

from .core import (BernoulliStats, CascadeObs, GaussianStats, GeometricStats,
                   InteractionHistory, ItemCatalog, MnlEpochObs, ProblemKind,
                   RankedListAction, RegretTrace, SemiBanditObs, SubsetAction,
                   replay_statistics)
from .rng import seeded_rng

__all__ = [
    "__version__",
    "BernoulliStats",
    "CascadeObs",
    "GaussianStats",
    "GeometricStats",
    "InteractionHistory",
    "ItemCatalog",
    "MnlEpochObs",
    "ProblemKind",
    "RankedListAction",
    "RegretTrace",
    "SemiBanditObs",
    "SubsetAction",
    "replay_statistics",
    "seeded_rng",
]

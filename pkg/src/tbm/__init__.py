"""Temporal belief manager.

Uncertain, temporally scoped beliefs over a network of time-point distance
constraints, with lazily fired causal rules, monitors and dependency-driven
updates.  :mod:`tbm.calculus` supplies a Dempster-Shafer calculus for the
born/load/shoot scenarios.
"""

from .apsp import BACKEND
from .calculus import CalculusConfig, ShaferCalculus
from .errors import TBMError
from .network import NEG_INF, POS_INF, Range, TemporalNetwork
from .patterns import parse_pattern, unify
from .rules import DECLINE
from .shafer import ShaferStrength, dempster_combine
from .store import ASSESSMENT, OBSERVATION, BeliefInstance, BeliefStore, TBM

__all__ = [
    "ASSESSMENT",
    "BACKEND",
    "BeliefInstance",
    "BeliefStore",
    "CalculusConfig",
    "DECLINE",
    "NEG_INF",
    "OBSERVATION",
    "POS_INF",
    "Range",
    "ShaferCalculus",
    "ShaferStrength",
    "TBM",
    "TBMError",
    "TemporalNetwork",
    "dempster_combine",
    "parse_pattern",
    "unify",
]

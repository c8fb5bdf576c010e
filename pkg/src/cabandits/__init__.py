"""Comparator-adaptive bandit convex optimization.

Learners whose regret scales with the norm of the comparator, for linear and
convex bandit feedback, plus adversarial environments, worst-case baselines,
and an experiment harness that verifies the claimed regret behavior.
"""

from ._accel import NUMBA_ENABLED
from .baselines import FlaxmanPolicy, FullInfoOgdPolicy
from .direction import BarrierDirectionLearner, OgdDirectionLearner
from .envs import Environment, ProtocolViolation, best_comparator
from .geometry import (ConvexBody, membership, project, radial_scale,
                       sample_sphere, sample_sphere_batch)
from .reductions import (ConvexBanditConfig, ConvexBanditPolicy,
                         LinearBanditPolicy, RoundRecord, decomposition_terms,
                         full_info_round, run_policy)
from .scale import ScaleLearner, Segment, scale_regret

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED",
    "BarrierDirectionLearner",
    "ConvexBanditConfig",
    "ConvexBanditPolicy",
    "ConvexBody",
    "Environment",
    "FlaxmanPolicy",
    "FullInfoOgdPolicy",
    "LinearBanditPolicy",
    "OgdDirectionLearner",
    "ProtocolViolation",
    "RoundRecord",
    "ScaleLearner",
    "Segment",
    "best_comparator",
    "decomposition_terms",
    "full_info_round",
    "membership",
    "project",
    "radial_scale",
    "run_policy",
    "sample_sphere",
    "sample_sphere_batch",
    "scale_regret",
]

"""Stabilizer-group learning for matrix product states."""

from .errors import (
    CapacityError,
    DegenerateStateError,
    InconsistencyError,
    InvariantViolationError,
    MpsStabError,
    NumericalConsistencyError,
    StaleRowError,
    ValidationError,
)
from .learner import LearnerConfig, LearnResult, assign_signs, learn, modified_state
from .mps import MpsState, TruncationConfig, random_mps, right_normalize, zero_state
from .pauli import PauliString, Tableau
from .sampler import SamplerConfig, perfect_samples, stabilizer_sweep, sweep, verify_stabilizer

__all__ = [
    "CapacityError",
    "DegenerateStateError",
    "InconsistencyError",
    "InvariantViolationError",
    "LearnResult",
    "LearnerConfig",
    "MpsState",
    "MpsStabError",
    "NumericalConsistencyError",
    "PauliString",
    "SamplerConfig",
    "StaleRowError",
    "Tableau",
    "TruncationConfig",
    "ValidationError",
    "assign_signs",
    "learn",
    "modified_state",
    "perfect_samples",
    "random_mps",
    "right_normalize",
    "stabilizer_sweep",
    "sweep",
    "verify_stabilizer",
    "zero_state",
]

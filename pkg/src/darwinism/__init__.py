"""Classify system-environment Hamiltonians for redundant classical records and
check the verdicts by exact state-vector simulation."""

__version__ = "0.1.0"

from .classifier import ClassifierVerdict, check_initial_state, classify, mixing_closure, pointer_observable
from .evolution import StateVector, Trajectory, branch_decompose, decoherence_factor, evolve
from .information import MIProfile, entropy, mi_by_size, mutual_information, partial_trace, plateau_score
from .model import HamiltonianModel, ModelInstance, SubsystemLayout, assemble, breakpoints, instantiate
from .presets import preset

__all__ = [
    "ClassifierVerdict", "HamiltonianModel", "MIProfile", "ModelInstance", "StateVector", "SubsystemLayout",
    "Trajectory", "assemble", "branch_decompose", "breakpoints", "check_initial_state", "classify",
    "decoherence_factor", "entropy", "evolve", "instantiate", "mi_by_size", "mixing_closure",
    "mutual_information", "partial_trace", "plateau_score", "pointer_observable", "preset",
]

"""Nondestructive Bell-state discrimination between distant parties: simulation toolkit."""
from .errors import BoundViolation, LocalityViolation, QubitIndexError, SizeError, ValidationError
from .noise import HARDWARE_NOISE, NOISELESS, NoiseModel
from .protocol import (
    DEFAULT_WIRES,
    ExperimentStats,
    ShotRecord,
    WireMap,
    classify_outcome,
    discrimination_layers,
    enumerate_branches,
    expected_ancilla_state,
    run_experiment,
    run_trial,
)
from .qstate import BellLabel, Gate, PureState, apply_gate, bell_measure, bell_pair, fidelity, measure, zero_state
from .werner import WernerParams, analytic_success, bell_mixture_weights, event_table, sweep_lambda

__version__ = "0.1.0"

"""
Stochastic Pauli gate noise and classical readout flips.

Every ideal gate is followed, with probability ``p1`` (one-qubit gates) or
``p2`` (multi-qubit gates), by a uniformly drawn non-identity Pauli string
on the gate's qubits.  This is the trajectory unravelling of a depolarizing
channel; averaging many shots reproduces the mixed-state statistics.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .errors import ValidationError
from .qstate import PAULIS, Gate, PureState, apply_gate, apply_matrix


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.0
    p2: float = 0.0
    readout_flip: float = 0.0

    def __post_init__(self) -> None:
        for name in ("p1", "p2", "readout_flip"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name}={v} outside [0, 1]")
            object.__setattr__(self, name, v)

    @property
    def is_noiseless(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0 and self.readout_flip == 0.0

    def gate_error_probability(self, arity: int) -> float:
        return self.p1 if arity == 1 else self.p2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseModel":
        return cls(**{k: float(data[k]) for k in ("p1", "p2", "readout_flip") if k in data})

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def parse(cls, text: str) -> "NoiseModel":
        """Parse ``"p1,p2,r"`` or the name ``"hardware"``/``"none"``."""
        key = text.strip().lower()
        if key == "hardware":
            return HARDWARE_NOISE
        if key in ("none", "ideal", "0"):
            return NOISELESS
        parts = [float(x) for x in key.split(",")]
        if len(parts) != 3:
            raise ValidationError(f"noise spec {text!r} must be 'p1,p2,r'")
        return cls(*parts)


NOISELESS = NoiseModel()

# Least-squares fit to the trapped-ion aggregates (P_D 0.796, P_F 0.800,
# P_succ 0.736) over the full four-section circuit; demos/calibrate_noise.py
# regenerates it.  Check run, 5e4 shots per target: P_D 0.801, P_F 0.801,
# P_succ 0.733, classes TT 0.733 / TF 0.068 / FT 0.068 / FF 0.132.
HARDWARE_NOISE = NoiseModel(p1=0.0225, p2=0.0275, readout_flip=0.0025)


@lru_cache(maxsize=None)
def pauli_string(index: int, arity: int) -> np.ndarray:
    """Tensor product of Paulis encoded base-4, first qubit most significant
    (digit 0=I, 1=X, 2=Y, 3=Z)."""
    if not 0 <= index < 4**arity:
        raise ValueError(f"Pauli index {index} out of range for {arity} qubit(s)")
    m = np.ones((1, 1), dtype=complex)
    for shift in reversed(range(arity)):
        m = np.kron(m, PAULIS[(index >> (2 * shift)) & 3])
    return m


def apply_noisy_gate(
    state: PureState, gate: Gate, model: NoiseModel, rng: np.random.Generator
) -> PureState:
    """Ideal gate followed by a random Pauli error with the model's rate.

    With a zero rate no random numbers are consumed and the result is
    bit-identical to ``apply_gate``.
    """
    state = apply_gate(state, gate)
    p = model.gate_error_probability(gate.arity)
    if p == 0.0:
        return state
    if rng.random() < p:
        k = int(rng.integers(1, 4**gate.arity))
        state = PureState(state.num_qubits, apply_matrix(state.amplitudes, pauli_string(k, gate.arity), gate.qubits))
    return state


def flip_readout(bits: str, model: NoiseModel, rng: np.random.Generator) -> str:
    r = model.readout_flip
    if r == 0.0:
        return bits
    flips = rng.random(len(bits)) < r
    return "".join(str(int(b) ^ int(f)) for b, f in zip(bits, flips))


# -- batched counterparts ---------------------------------------------------

def apply_noisy_gate_batch(
    amps: np.ndarray,
    gate: Gate,
    model: NoiseModel,
    rng: np.random.Generator,
    rows: np.ndarray | None = None,
) -> np.ndarray:
    """Vectorised ``apply_noisy_gate`` over the leading axis of ``amps``.

    ``rows`` (boolean mask) restricts the gate, and its noise, to a subset.
    """
    if rows is None:
        out = apply_matrix(amps, gate.unitary, gate.qubits)
        active = np.ones(amps.shape[0], dtype=bool)
    else:
        out = amps.copy()
        if rows.any():
            out[rows] = apply_matrix(amps[rows], gate.unitary, gate.qubits)
        active = rows
    p = model.gate_error_probability(gate.arity)
    if p == 0.0:
        return out
    hit = (rng.random(amps.shape[0]) < p) & active
    choice = rng.integers(1, 4**gate.arity, size=amps.shape[0])
    for k in np.unique(choice[hit]):
        sel = hit & (choice == k)
        out[sel] = apply_matrix(out[sel], pauli_string(int(k), gate.arity), gate.qubits)
    return out


def flip_readout_batch(bits: np.ndarray, model: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    r = model.readout_flip
    if r == 0.0:
        return bits
    return bits ^ (rng.random(bits.shape) < r).astype(bits.dtype)

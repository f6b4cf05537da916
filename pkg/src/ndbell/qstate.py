"""
Dense pure-state simulator used by every other module.

Conventions
-----------
* Qubit 0 is the leftmost character of a printed bit string and the most
  significant bit of the amplitude index (big-endian).
* Every stochastic call takes an explicit ``numpy.random.Generator``.
* The array-level kernels (``apply_matrix``, ``measure_array``, ...) accept
  amplitude arrays with arbitrary leading batch dimensions, shape
  ``(..., 2**n)``.  The ``PureState`` API is the batch-free view on top of
  them, so the scalar and vectorised simulators share one implementation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

import numpy as np

from .errors import QubitIndexError, SizeError, ValidationError

MAX_QUBITS = 12
UNITARY_ATOL = 1e-10

_SQRT2_INV = 1 / np.sqrt(2)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
PAULIS = (I2, X, Y, Z)


class BellLabel(IntEnum):
    """The four Bell states, in reporting order.

    The integer value packs the two Bell-basis bits as ``2 * parity + phase``,
    where parity is 1 for the psi states and phase is 1 for the minus states.
    """

    PHI_PLUS = 0
    PHI_MINUS = 1
    PSI_PLUS = 2
    PSI_MINUS = 3

    @property
    def parity(self) -> int:
        return self.value >> 1

    @property
    def phase(self) -> int:
        return self.value & 1

    @classmethod
    def from_bits(cls, parity: int, phase: int) -> "BellLabel":
        return cls(2 * parity + phase)

    @classmethod
    def parse(cls, text: str) -> "BellLabel":
        key = text.strip().lower()
        for label in cls:
            if key in (label.display.lower(), label.name.lower(), label.symbol):
                return label
        raise ValueError(f"unknown Bell label {text!r}")

    @property
    def display(self) -> str:
        return {0: "PhiPlus", 1: "PhiMinus", 2: "PsiPlus", 3: "PsiMinus"}[self.value]

    @property
    def symbol(self) -> str:
        return {0: "phi+", 1: "phi-", 2: "psi+", 3: "psi-"}[self.value]

    def __str__(self) -> str:
        return self.display


# Rows are Bell vectors in the computational basis, indexed by BellLabel.
BELL_VECTORS = np.array(
    [
        [1, 0, 0, 1],
        [1, 0, 0, -1],
        [0, 1, 1, 0],
        [0, 1, -1, 0],
    ],
    dtype=complex,
) * _SQRT2_INV


# ---------------------------------------------------------------------------
# Gates
# ---------------------------------------------------------------------------

_FIXED = {"H": H, "X": X, "Y": Y, "Z": Z, "CNOT": CNOT}


def is_unitary(matrix: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=atol, rtol=0)


@dataclass(frozen=True)
class Gate:
    """A named gate or explicit unitary acting on ``qubits`` (in order).

    For ``CNOT`` the first qubit is the control.  ``kind="U"`` carries an
    explicit ``2**k x 2**k`` matrix for ``k`` qubits.
    """

    kind: str
    qubits: tuple[int, ...]
    matrix: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if len(set(qubits)) != len(qubits):
            raise QubitIndexError(f"repeated qubit in {qubits}")
        if any(q < 0 for q in qubits):
            raise QubitIndexError(f"negative qubit index in {qubits}")
        if self.kind in _FIXED:
            expected = 2 if self.kind == "CNOT" else 1
            if len(qubits) != expected:
                raise QubitIndexError(f"{self.kind} acts on {expected} qubit(s), got {qubits}")
            return
        if self.kind != "U":
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        if self.matrix is None:
            raise ValidationError("unitary gate needs a matrix")
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2 ** len(qubits),) * 2:
            raise ValidationError(f"matrix shape {m.shape} does not fit {len(qubits)} qubit(s)")
        if not is_unitary(m):
            raise ValidationError("gate matrix is not unitary")
        object.__setattr__(self, "matrix", m)

    @property
    def unitary(self) -> np.ndarray:
        return _FIXED[self.kind] if self.kind in _FIXED else self.matrix

    @property
    def arity(self) -> int:
        return len(self.qubits)

    def __str__(self) -> str:
        if self.kind == "CNOT":
            return f"CNOT({self.qubits[0]}->{self.qubits[1]})"
        return f"{self.kind}({','.join(map(str, self.qubits))})"

    @classmethod
    def h(cls, q: int) -> "Gate":
        return cls("H", (q,))

    @classmethod
    def x(cls, q: int) -> "Gate":
        return cls("X", (q,))

    @classmethod
    def y(cls, q: int) -> "Gate":
        return cls("Y", (q,))

    @classmethod
    def z(cls, q: int) -> "Gate":
        return cls("Z", (q,))

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls("CNOT", (control, target))

    @classmethod
    def u(cls, matrix: np.ndarray, *qubits: int) -> "Gate":
        return cls("U", tuple(qubits), np.asarray(matrix, dtype=complex))


# ---------------------------------------------------------------------------
# Array-level kernels (leading batch dimensions allowed)
# ---------------------------------------------------------------------------

def num_qubits_of(amps: np.ndarray) -> int:
    dim = amps.shape[-1]
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise SizeError(f"amplitude length {dim} is not a power of two")
    return n


def _check_qubits(qubits: Sequence[int], n: int) -> tuple[int, ...]:
    qs = tuple(int(q) for q in qubits)
    if len(set(qs)) != len(qs):
        raise QubitIndexError(f"repeated qubit in {qs}")
    for q in qs:
        if not 0 <= q < n:
            raise QubitIndexError(f"qubit {q} out of range for {n}-qubit state")
    return qs


def apply_matrix(amps: np.ndarray, matrix: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Apply a ``2**k`` square matrix to ``qubits`` of a (batched) amplitude array."""
    n = num_qubits_of(amps)
    qs = _check_qubits(qubits, n)
    k = len(qs)
    batch = amps.shape[:-1]
    nb = len(batch)
    psi = amps.reshape(batch + (2,) * n)
    m = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * k))
    axes = [nb + q for q in qs]
    out = np.tensordot(psi, m, axes=(axes, list(range(k, 2 * k))))
    out = np.moveaxis(out, list(range(out.ndim - k, out.ndim)), axes)
    return np.ascontiguousarray(out).reshape(amps.shape)


def qubit_probabilities(amps: np.ndarray, qubit: int) -> np.ndarray:
    """Probability that ``qubit`` reads 1, per batch row."""
    n = num_qubits_of(amps)
    (q,) = _check_qubits([qubit], n)
    batch = amps.shape[:-1]
    psi = amps.reshape(batch + (2,) * n)
    ones = np.take(psi, 1, axis=len(batch) + q)
    return np.sum(np.abs(ones.reshape(batch + (-1,))) ** 2, axis=-1)


def project_array(amps: np.ndarray, qubit: int, bit) -> tuple[np.ndarray, np.ndarray]:
    """Project ``qubit`` onto ``bit`` (scalar or per-row array) and renormalise.

    Returns ``(probability, collapsed)``.  Rows with zero probability are left
    unnormalised (all zeros).
    """
    n = num_qubits_of(amps)
    (q,) = _check_qubits([qubit], n)
    batch = amps.shape[:-1]
    bit = np.broadcast_to(np.asarray(bit, dtype=np.int64), batch)
    psi = amps.reshape(batch + (2,) * n).copy()
    axis = len(batch) + q
    zero = np.take(psi, 0, axis=axis)
    one = np.take(psi, 1, axis=axis)
    expand = bit.reshape(batch + (1,) * (n - 1))
    keep_one = expand == 1
    zero = np.where(keep_one, 0, zero)
    one = np.where(keep_one, one, 0)
    psi = np.stack([zero, one], axis=axis)
    flat = psi.reshape(batch + (-1,))
    prob = np.sum(np.abs(flat) ** 2, axis=-1)
    norm = np.sqrt(prob)
    safe = np.where(norm > 0, norm, 1.0)
    return prob, flat / safe[..., None]


def measure_array(
    amps: np.ndarray, qubits: Sequence[int], rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Sequential computational-basis measurement of ``qubits``.

    Draws one uniform per qubit (per batch row), in the order given.
    Returns ``(bits, collapsed)`` with ``bits.shape == batch + (len(qubits),)``.
    """
    n = num_qubits_of(amps)
    qs = _check_qubits(qubits, n)
    if not qs:
        raise ValueError("measure needs at least one qubit")
    batch = amps.shape[:-1]
    bits = np.empty(batch + (len(qs),), dtype=np.int8)
    for i, q in enumerate(qs):
        p1 = qubit_probabilities(amps, q)
        u = rng.random(batch) if batch else rng.random()
        bit = (u < p1).astype(np.int8)
        _, amps = project_array(amps, q, bit)
        bits[..., i] = bit
    return bits, amps


# ---------------------------------------------------------------------------
# PureState API
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PureState:
    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        n = int(self.num_qubits)
        if not 1 <= n <= MAX_QUBITS:
            raise SizeError(f"qubit count {n} outside [1, {MAX_QUBITS}]")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (2**n,):
            raise SizeError(f"expected {2**n} amplitudes, got {amps.size}")
        amps.setflags(write=False)
        object.__setattr__(self, "num_qubits", n)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = num_qubits_of(amps)
        if normalize:
            amps = amps / np.linalg.norm(amps)
        elif not np.isclose(np.linalg.norm(amps), 1.0, atol=1e-10):
            raise ValidationError("amplitudes are not normalised")
        return cls(n, amps)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tensor(self, other: "PureState") -> "PureState":
        return PureState(self.num_qubits + other.num_qubits, np.kron(self.amplitudes, other.amplitudes))

    __matmul__ = tensor


def zero_state(n: int) -> PureState:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise SizeError(f"qubit count {n!r} outside [1, {MAX_QUBITS}]")
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1.0
    return PureState(int(n), amps)


def basis_state(bits: str) -> PureState:
    n = len(bits)
    amps = np.zeros(2**n, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return PureState(n, amps)


def apply_gate(state: PureState, gate: Gate) -> PureState:
    _check_qubits(gate.qubits, state.num_qubits)
    return PureState(state.num_qubits, apply_matrix(state.amplitudes, gate.unitary, gate.qubits))


def apply_gates(state: PureState, gates: Sequence[Gate]) -> PureState:
    for g in gates:
        state = apply_gate(state, g)
    return state


def bits_to_str(bits) -> str:
    return "".join(str(int(b)) for b in np.asarray(bits).reshape(-1))


def measure(state: PureState, qubits: Sequence[int], rng: np.random.Generator) -> tuple[str, PureState]:
    """Born-rule measurement of ``qubits``; returns the bit string (in the
    order of ``qubits``) and the collapsed, renormalised state."""
    if len(qubits) == 0:
        raise ValueError("measure needs at least one qubit")
    bits, amps = measure_array(state.amplitudes, qubits, rng)
    return bits_to_str(bits), PureState(state.num_qubits, amps)


def project(state: PureState, qubits: Sequence[int], bits: str) -> tuple[float, PureState | None]:
    """Deterministic projection onto an outcome; ``(probability, collapsed)``.

    The collapsed state is ``None`` when the outcome has probability zero.
    """
    qs = _check_qubits(qubits, state.num_qubits)
    if len(bits) != len(qs):
        raise ValueError("bit string length does not match qubit list")
    amps = state.amplitudes
    total = 1.0
    for q, b in zip(qs, bits):
        p, amps = project_array(amps, q, int(b))
        total *= float(p)
        if total < 1e-14:
            return 0.0, None
    return total, PureState(state.num_qubits, amps)


def bell_pair(label: BellLabel) -> PureState:
    return PureState(2, BELL_VECTORS[BellLabel(label)])


def product_of_bell_pairs(labels: Sequence[BellLabel]) -> PureState:
    amps = np.ones(1, dtype=complex)
    for lab in labels:
        amps = np.kron(amps, BELL_VECTORS[BellLabel(lab)])
    return PureState(2 * len(labels), amps)


def fidelity(a: PureState, b: PureState) -> float:
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"fidelity between {a.num_qubits}- and {b.num_qubits}-qubit states")
    f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(1.0, f))


def label_from_bell_bits(first, second):
    """Map (post-H qubit bit, other bit) to a Bell label index.

    Works elementwise on arrays: 00 -> phi+, 10 -> phi-, 01 -> psi+, 11 -> psi-.
    """
    return 2 * np.asarray(second) + np.asarray(first)


def bell_rotation(pair: Sequence[int]) -> list[Gate]:
    """Gates mapping the Bell basis on ``pair`` to the computational basis."""
    a, b = pair
    return [Gate.cnot(a, b), Gate.h(a)]


def bell_measure(state: PureState, pair: Sequence[int], rng: np.random.Generator) -> tuple[BellLabel, PureState]:
    _check_qubits(pair, state.num_qubits)
    if len(pair) != 2:
        raise QubitIndexError("Bell measurement needs exactly two qubits")
    rotated = apply_gates(state, bell_rotation(pair))
    bits, collapsed = measure(rotated, pair, rng)
    return BellLabel(int(label_from_bell_bits(int(bits[0]), int(bits[1])))), collapsed


def bell_probabilities(state: PureState, pair: Sequence[int]) -> np.ndarray:
    """Exact outcome distribution of a Bell measurement on ``pair``, indexed by BellLabel."""
    rotated = apply_gates(state, bell_rotation(pair))
    probs = np.zeros(4)
    for first in (0, 1):
        for second in (0, 1):
            p, _ = project(rotated, pair, f"{first}{second}")
            probs[int(label_from_bell_bits(first, second))] = p
    return probs

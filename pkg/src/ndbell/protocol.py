"""
Nondestructive Bell-state discrimination with two pre-shared ancilla pairs.

Qubit roles: Alice holds ``a1, a2, sA`` and Bob holds ``b1, b2, sB``.  The
target Bell pair sits on ``(sA, sB)``; the ancilla pairs sit on ``(a1, b1)``
and ``(a2, b2)``.  A full shot has four sections:

1. prepare the ancilla pairs (H + CNOT, then a Pauli for non-phi+ labels),
2. prepare the target pair the same way,
3. the six local discrimination gates, then readout of the ancillas,
4. a diagnostic Bell measurement of the target pair.

``run_trial`` is the reference scalar path.  ``simulate_batch`` runs the
identical circuit on many shots at once and backs ``run_experiment``.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import QubitIndexError
from .noise import (
    NOISELESS,
    NoiseModel,
    apply_noisy_gate,
    apply_noisy_gate_batch,
    flip_readout,
    flip_readout_batch,
)
from .qstate import (
    BellLabel,
    Gate,
    PureState,
    apply_gates,
    bell_probabilities,
    bell_rotation,
    label_from_bell_bits,
    measure,
    measure_array,
    project,
    zero_state,
)

CLASSES = ("TT", "TF", "FT", "FF")
CHUNK = 8192

# Readout table: which a1 b1 a2 b2 strings each target produces with ideal phi+ ancillas.
OUTCOME_TABLE: dict[BellLabel, tuple[str, ...]] = {
    BellLabel.PHI_PLUS: ("0000", "0011", "1100", "1111"),
    BellLabel.PHI_MINUS: ("0111", "0100", "1000", "1011"),
    BellLabel.PSI_PLUS: ("0001", "0010", "1110", "1101"),
    BellLabel.PSI_MINUS: ("0101", "0110", "1001", "1010"),
}
_LOOKUP = {bits: label for label, rows in OUTCOME_TABLE.items() for bits in rows}

# Pauli on the first qubit of a fresh phi+ that produces each label.
_LABEL_PAULI = {
    BellLabel.PHI_MINUS: Gate.z,
    BellLabel.PSI_PLUS: Gate.x,
    BellLabel.PSI_MINUS: Gate.y,
}


@dataclass(frozen=True)
class WireMap:
    a1: int = 0
    b1: int = 1
    a2: int = 2
    b2: int = 3
    sA: int = 4
    sB: int = 5

    def __post_init__(self) -> None:
        idx = self.as_tuple()
        if len(set(idx)) != 6:
            raise QubitIndexError(f"wire indices must be distinct, got {idx}")
        if min(idx) < 0:
            raise QubitIndexError("wire indices must be non-negative")

    def as_tuple(self) -> tuple[int, ...]:
        return (self.a1, self.b1, self.a2, self.b2, self.sA, self.sB)

    @property
    def num_qubits(self) -> int:
        return max(self.as_tuple()) + 1

    @property
    def alice(self) -> frozenset[int]:
        return frozenset((self.a1, self.a2, self.sA))

    @property
    def bob(self) -> frozenset[int]:
        return frozenset((self.b1, self.b2, self.sB))

    @property
    def ancillas(self) -> tuple[int, int, int, int]:
        """Ancilla qubits in printed order a1 b1 a2 b2."""
        return (self.a1, self.b1, self.a2, self.b2)


DEFAULT_WIRES = WireMap()


@dataclass(frozen=True)
class ShotRecord:
    target: BellLabel
    ancilla_bits: str
    guess: BellLabel | None  # None means unclassifiable
    verified: BellLabel
    classification: str = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "classification", classify_shot(self.target, self.guess, self.verified))

    def as_row(self) -> dict:
        return {
            "target": str(self.target),
            "ancilla_bits": self.ancilla_bits,
            "guess": "Unclassifiable" if self.guess is None else str(self.guess),
            "verified": str(self.verified),
            "class": self.classification,
        }


def classify_shot(target: BellLabel, guess: BellLabel | None, verified: BellLabel) -> str:
    d = "T" if guess == target else "F"
    f = "T" if verified == target else "F"
    return d + f


# ---------------------------------------------------------------------------
# Circuit pieces
# ---------------------------------------------------------------------------

def discrimination_layers(wires: WireMap = DEFAULT_WIRES) -> list[Gate]:
    w = wires
    return [
        Gate.cnot(w.sA, w.a2),
        Gate.cnot(w.sB, w.b2),
        Gate.cnot(w.a1, w.sA),
        Gate.cnot(w.b1, w.sB),
        Gate.h(w.a1),
        Gate.h(w.b1),
    ]


def bell_prep_gates(label: BellLabel, first: int, second: int) -> list[Gate]:
    gates = [Gate.h(first), Gate.cnot(first, second)]
    if label != BellLabel.PHI_PLUS:
        gates.append(_LABEL_PAULI[BellLabel(label)](first))
    return gates


def preparation_gates(
    target: BellLabel, ancilla1: BellLabel, ancilla2: BellLabel, wires: WireMap = DEFAULT_WIRES
) -> list[Gate]:
    return (
        bell_prep_gates(ancilla1, wires.a1, wires.b1)
        + bell_prep_gates(ancilla2, wires.a2, wires.b2)
        + bell_prep_gates(target, wires.sA, wires.sB)
    )


def classify_outcome(bits: str) -> BellLabel:
    """Readout-table lookup of an ``a1 b1 a2 b2`` string."""
    if len(bits) != 4 or any(c not in "01" for c in bits):
        raise ValueError(f"expected a 4-bit string, got {bits!r}")
    return _LOOKUP[bits]


def classify_outcome_parity(bits: str) -> BellLabel:
    """Closed form of the table: (a1^b1, a2^b2) gives (phase, parity)."""
    if len(bits) != 4 or any(c not in "01" for c in bits):
        raise ValueError(f"expected a 4-bit string, got {bits!r}")
    a1, b1, a2, b2 = (int(c) for c in bits)
    return BellLabel.from_bits(parity=a2 ^ b2, phase=a1 ^ b1)


def expected_ancilla_state(target: BellLabel) -> tuple[BellLabel, BellLabel]:
    """Ancilla pair labels after the discrimination layers (ideal phi+ inputs)."""
    target = BellLabel(target)
    first = BellLabel.PSI_PLUS if target.phase else BellLabel.PHI_PLUS
    second = BellLabel.PSI_PLUS if target.parity else BellLabel.PHI_PLUS
    return first, second


# ---------------------------------------------------------------------------
# Scalar path
# ---------------------------------------------------------------------------

def _run_noisy(state: PureState, gates: Iterable[Gate], noise: NoiseModel, rng) -> PureState:
    for g in gates:
        state = apply_noisy_gate(state, g, noise, rng)
    return state


def prepare_state(
    target: BellLabel,
    ancilla1: BellLabel,
    ancilla2: BellLabel,
    noise: NoiseModel,
    rng: np.random.Generator,
    wires: WireMap = DEFAULT_WIRES,
) -> PureState:
    state = zero_state(wires.num_qubits)
    return _run_noisy(state, preparation_gates(target, ancilla1, ancilla2, wires), noise, rng)


def noisy_readout(
    state: PureState, qubits: Sequence[int], noise: NoiseModel, rng: np.random.Generator
) -> tuple[str, PureState]:
    bits, state = measure(state, qubits, rng)
    return flip_readout(bits, noise, rng), state


def verify_target(
    state: PureState, noise: NoiseModel, rng: np.random.Generator, wires: WireMap = DEFAULT_WIRES
) -> tuple[BellLabel, PureState]:
    """Diagnostic Bell measurement of the target pair (last section of the circuit)."""
    state = _run_noisy(state, bell_rotation((wires.sA, wires.sB)), noise, rng)
    bits, state = noisy_readout(state, (wires.sA, wires.sB), noise, rng)
    return BellLabel(int(label_from_bell_bits(int(bits[0]), int(bits[1])))), state


def interleave_ancilla_bits(alice_bits: str, bob_bits: str) -> str:
    """(a1 a2), (b1 b2) -> a1 b1 a2 b2."""
    return alice_bits[0] + bob_bits[0] + alice_bits[1] + bob_bits[1]


def run_trial(
    target: BellLabel,
    ancilla1: BellLabel = BellLabel.PHI_PLUS,
    ancilla2: BellLabel = BellLabel.PHI_PLUS,
    noise: NoiseModel = NOISELESS,
    rng: np.random.Generator | None = None,
    wires: WireMap = DEFAULT_WIRES,
) -> ShotRecord:
    """One shot of the full circuit.

    Ancillas are read out party by party, Alice's ``(a1, a2)`` first, then
    Bob's ``(b1, b2)``; the two-party session relies on this order to consume
    random numbers identically.
    """
    rng = np.random.default_rng() if rng is None else rng
    state = prepare_state(target, ancilla1, ancilla2, noise, rng, wires)
    state = _run_noisy(state, discrimination_layers(wires), noise, rng)
    alice_bits, state = noisy_readout(state, (wires.a1, wires.a2), noise, rng)
    bob_bits, state = noisy_readout(state, (wires.b1, wires.b2), noise, rng)
    bits = interleave_ancilla_bits(alice_bits, bob_bits)
    verified, _ = verify_target(state, noise, rng, wires)
    return ShotRecord(BellLabel(target), bits, classify_outcome(bits), verified)


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Per-trial generator derived from (master seed, trial index)."""
    return np.random.default_rng([int(seed), int(index)])


# ---------------------------------------------------------------------------
# Exhaustive branch evaluation (noiseless)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Branch:
    ancilla_bits: str
    probability: float
    guess: BellLabel
    verify_distribution: np.ndarray  # indexed by BellLabel
    system_state: PureState  # post-measurement state, all six qubits


def enumerate_branches(
    target: BellLabel,
    ancilla1: BellLabel = BellLabel.PHI_PLUS,
    ancilla2: BellLabel = BellLabel.PHI_PLUS,
    wires: WireMap = DEFAULT_WIRES,
) -> list[Branch]:
    """Every ancilla readout with nonzero probability, computed exactly."""
    state = apply_gates(zero_state(wires.num_qubits), preparation_gates(target, ancilla1, ancilla2, wires))
    state = apply_gates(state, discrimination_layers(wires))
    out = []
    for bits in ("".join(b) for b in product("01", repeat=4)):
        p, collapsed = project(state, wires.ancillas, bits)
        if collapsed is None:
            continue
        out.append(
            Branch(bits, p, classify_outcome(bits), bell_probabilities(collapsed, (wires.sA, wires.sB)), collapsed)
        )
    return out


# ---------------------------------------------------------------------------
# Batched path
# ---------------------------------------------------------------------------

def simulate_batch(
    targets: np.ndarray,
    ancilla1: np.ndarray,
    ancilla2: np.ndarray,
    noise: NoiseModel,
    rng: np.random.Generator,
    wires: WireMap = DEFAULT_WIRES,
) -> dict[str, np.ndarray]:
    """Vectorised shots.  Inputs are integer label arrays of equal length.

    Returns arrays ``bits`` (shape ``(B, 4)``, order a1 b1 a2 b2), ``guess``
    and ``verified`` (label indices).
    """
    targets = np.asarray(targets, dtype=np.int64)
    ancilla1 = np.broadcast_to(np.asarray(ancilla1, dtype=np.int64), targets.shape)
    ancilla2 = np.broadcast_to(np.asarray(ancilla2, dtype=np.int64), targets.shape)
    b = targets.shape[0]
    n = wires.num_qubits
    amps = np.zeros((b, 2**n), dtype=complex)
    amps[:, 0] = 1.0

    for labels, (q0, q1) in ((ancilla1, (wires.a1, wires.b1)), (ancilla2, (wires.a2, wires.b2)), (targets, (wires.sA, wires.sB))):
        amps = apply_noisy_gate_batch(amps, Gate.h(q0), noise, rng)
        amps = apply_noisy_gate_batch(amps, Gate.cnot(q0, q1), noise, rng)
        for lab, make in _LABEL_PAULI.items():
            rows = labels == int(lab)
            if rows.any():
                amps = apply_noisy_gate_batch(amps, make(q0), noise, rng, rows=rows)

    for g in discrimination_layers(wires):
        amps = apply_noisy_gate_batch(amps, g, noise, rng)

    alice, amps = measure_array(amps, (wires.a1, wires.a2), rng)
    alice = flip_readout_batch(alice, noise, rng)
    bob, amps = measure_array(amps, (wires.b1, wires.b2), rng)
    bob = flip_readout_batch(bob, noise, rng)
    bits = np.stack([alice[:, 0], bob[:, 0], alice[:, 1], bob[:, 1]], axis=1)

    for g in bell_rotation((wires.sA, wires.sB)):
        amps = apply_noisy_gate_batch(amps, g, noise, rng)
    vbits, _ = measure_array(amps, (wires.sA, wires.sB), rng)
    vbits = flip_readout_batch(vbits, noise, rng)

    guess = label_from_bell_bits(bits[:, 0] ^ bits[:, 1], bits[:, 2] ^ bits[:, 3])
    verified = label_from_bell_bits(vbits[:, 0], vbits[:, 1])
    return {"bits": bits, "guess": guess.astype(np.int64), "verified": verified.astype(np.int64)}


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedAncillas:
    first: BellLabel = BellLabel.PHI_PLUS
    second: BellLabel = BellLabel.PHI_PLUS

    def sample_batch(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        return np.full(size, int(self.first)), np.full(size, int(self.second))


def _ancilla_sampler(source) -> Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray]]:
    if source is None:
        source = FixedAncillas()
    if hasattr(source, "sample_batch"):
        return source.sample_batch
    if callable(source):
        return source
    return FixedAncillas(*(BellLabel(x) for x in source)).sample_batch


@dataclass
class ExperimentStats:
    """Aggregated outcome counts.

    ``class_counts[t, c]`` counts shots with target ``t`` falling in class
    ``CLASSES[c]``.
    """

    targets: tuple[BellLabel, ...]
    class_counts: np.ndarray
    records: list[ShotRecord] | None = None

    @property
    def shots_per_target(self) -> np.ndarray:
        return self.class_counts.sum(axis=1)

    @property
    def shots(self) -> int:
        return int(self.class_counts.sum())

    def _rate(self, cols: Sequence[int], per_target: bool = False):
        hits = self.class_counts[:, list(cols)].sum(axis=1)
        if per_target:
            return hits / self.shots_per_target
        return float(hits.sum() / self.shots)

    @property
    def p_d(self) -> float:
        return self._rate([0, 1])

    @property
    def p_f(self) -> float:
        return self._rate([0, 2])

    @property
    def p_succ(self) -> float:
        return self._rate([0])

    def per_target(self, name: str) -> np.ndarray:
        cols = {"p_d": [0, 1], "p_f": [0, 2], "p_succ": [0], "TT": [0], "TF": [1], "FT": [2], "FF": [3]}[name]
        return self._rate(cols, per_target=True)

    def class_rates(self) -> dict[str, float]:
        total = self.class_counts.sum(axis=0) / self.shots
        return dict(zip(CLASSES, map(float, total)))

    def stderr(self, rate: float, shots: int | None = None) -> float:
        n = self.shots if shots is None else shots
        return float(np.sqrt(rate * (1 - rate) / n))

    def summary(self) -> dict[str, float]:
        out = {}
        for name in ("p_d", "p_f", "p_succ"):
            v = getattr(self, name)
            out[name] = v
            out[name + "_stderr"] = self.stderr(v)
        return out


def _chunk_worker(args):
    target, sampler, noise, wires, seed, size, keep = args
    rng = np.random.default_rng(seed)
    anc1, anc2 = sampler(rng, size)
    res = simulate_batch(np.full(size, int(target)), anc1, anc2, noise, rng, wires)
    guess, verified = res["guess"], res["verified"]
    d = guess == int(target)
    f = verified == int(target)
    counts = np.array([np.sum(d & f), np.sum(d & ~f), np.sum(~d & f), np.sum(~d & ~f)])
    if not keep:
        return counts, None
    recs = [
        ShotRecord(BellLabel(int(target)), "".join(map(str, row)), BellLabel(int(g)), BellLabel(int(v)))
        for row, g, v in zip(res["bits"], guess, verified)
    ]
    return counts, recs


def run_experiment(
    targets: Sequence[BellLabel],
    shots: int,
    ancillas=None,
    noise: NoiseModel = NOISELESS,
    rng: np.random.Generator | None = None,
    wires: WireMap = DEFAULT_WIRES,
    workers: int = 1,
    keep_records: bool = False,
) -> ExperimentStats:
    """Run ``shots`` trials for each target and aggregate.

    ``ancillas`` is ``None`` (ideal phi+ pairs), a fixed label pair, a
    ``WernerParams`` or a callable ``(rng, size) -> (labels1, labels2)``.
    Shots are split into fixed-size chunks whose seeds are spawned from one
    draw of ``rng``, so the result does not depend on ``workers``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    targets = tuple(BellLabel(t) for t in targets)
    sampler = _ancilla_sampler(ancillas)
    root = np.random.SeedSequence(int(rng.integers(2**63)))
    jobs = []
    for t, seq in zip(targets, root.spawn(len(targets))):
        sizes = [CHUNK] * (shots // CHUNK) + ([shots % CHUNK] if shots % CHUNK else [])
        for size, child in zip(sizes, seq.spawn(len(sizes))):
            jobs.append((t, sampler, noise, wires, child, size, keep_records))

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chunk_worker, jobs))
    else:
        results = [_chunk_worker(j) for j in jobs]

    counts = np.zeros((len(targets), 4), dtype=np.int64)
    records: list[ShotRecord] | None = [] if keep_records else None
    for job, (c, recs) in zip(jobs, results):
        counts[targets.index(job[0])] += c
        if keep_records:
            records.extend(recs)
    return ExperimentStats(targets, counts, records)


def write_shot_records(records: Iterable[ShotRecord], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["target", "ancilla_bits", "guess", "verified", "class"])
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.as_row())


def read_shot_records(path: str | os.PathLike) -> list[ShotRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            guess = None if row["guess"] == "Unclassifiable" else BellLabel.parse(row["guess"])
            rec = ShotRecord(BellLabel.parse(row["target"]), row["ancilla_bits"], guess, BellLabel.parse(row["verified"]))
            if rec.classification != row["class"]:
                raise ValueError(f"inconsistent class column in row {row}")
            out.append(rec)
    return out

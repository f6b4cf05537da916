"""
Two-party execution harness.

A ``Referee`` owns the joint state and executes ``LocalRequest`` objects only
when every touched qubit belongs to the requesting party.  The agents see
nothing but their own measurement results and the classical messages they
receive.  Preparation of the shared pairs and the diagnostic verification
are done by the referee itself: they stand for the entanglement source and
the test bench, not for either party.

Random numbers are consumed in exactly the order ``protocol.run_trial``
uses, so a session and a monolithic trial seeded alike yield the same record.
"""
from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import LocalityViolation
from .noise import NOISELESS, NoiseModel, apply_noisy_gate
from .protocol import (
    DEFAULT_WIRES,
    ShotRecord,
    WireMap,
    classify_outcome,
    interleave_ancilla_bits,
    noisy_readout,
    prepare_state,
    verify_target,
)
from .qstate import BellLabel, Gate, PureState


class PartyId(Enum):
    ALICE = "Alice"
    BOB = "Bob"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ApplyGate:
    gate: Gate

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.gate.qubits

    def __str__(self) -> str:
        return f"ApplyGate {self.gate}"


@dataclass(frozen=True)
class Measure:
    qubits: tuple[int, ...]

    def __str__(self) -> str:
        return f"Measure({','.join(map(str, self.qubits))})"


@dataclass(frozen=True)
class LocalRequest:
    party: PartyId
    action: ApplyGate | Measure


@dataclass(frozen=True)
class ClassicalMessage:
    sender: PartyId
    payload: str
    round: int


def owned_qubits(party: PartyId, wires: WireMap = DEFAULT_WIRES) -> frozenset[int]:
    return wires.alice if party is PartyId.ALICE else wires.bob


def check_locality(request: LocalRequest, wires: WireMap = DEFAULT_WIRES) -> None:
    owned = owned_qubits(request.party, wires)
    foreign = [q for q in request.action.qubits if q not in owned]
    if foreign:
        raise LocalityViolation(f"{request.party} may not touch qubit(s) {foreign} in {request.action}")


def referee_execute(
    request: LocalRequest,
    state: PureState,
    noise: NoiseModel,
    rng: np.random.Generator,
    wires: WireMap = DEFAULT_WIRES,
) -> tuple[PureState, str | None]:
    """Execute one local request; returns the new state and, for measurements, the bits."""
    check_locality(request, wires)
    action = request.action
    if isinstance(action, ApplyGate):
        return apply_noisy_gate(state, action.gate, noise, rng), None
    if isinstance(action, Measure):
        bits, state = noisy_readout(state, action.qubits, noise, rng)
        return state, bits
    raise TypeError(f"unknown action {action!r}")


class Referee:
    def __init__(self, state: PureState, noise: NoiseModel, rng: np.random.Generator, wires: WireMap = DEFAULT_WIRES):
        self.state = state
        self.noise = noise
        self.rng = rng
        self.wires = wires
        self.transcript: list[str] = []

    def execute(self, request: LocalRequest) -> str | None:
        try:
            self.state, bits = referee_execute(request, self.state, self.noise, self.rng, self.wires)
        except LocalityViolation:
            self.transcript.append(f"reject {request.party} {request.action}")
            raise
        line = f"request {request.party} {request.action}"
        self.transcript.append(line if bits is None else f"{line} -> {bits}")
        return bits

    def deliver(self, message: ClassicalMessage, to: PartyId) -> None:
        self.transcript.append(f"message {message.sender}->{to} round={message.round} payload={message.payload}")


class ProtocolAgent:
    """Scripted party for the discrimination protocol.

    Alice's script is CNOT(sA->a2), CNOT(a1->sA), H(a1), then readout of
    (a1, a2); Bob mirrors it on (b1, b2, sB).
    """

    def __init__(self, party: PartyId, wires: WireMap = DEFAULT_WIRES):
        self.party = party
        w = wires
        if party is PartyId.ALICE:
            first, second, system = w.a1, w.a2, w.sA
        else:
            first, second, system = w.b1, w.b2, w.sB
        self._gates = deque([Gate.cnot(system, second), Gate.cnot(first, system), Gate.h(first)])
        self._readout = (first, second)
        self.own_bits: str | None = None
        self.inbox: list[ClassicalMessage] = []
        self._round = 0

    def next_gate(self) -> LocalRequest | None:
        if not self._gates:
            return None
        return LocalRequest(self.party, ApplyGate(self._gates.popleft()))

    def readout_request(self) -> LocalRequest:
        return LocalRequest(self.party, Measure(self._readout))

    def record(self, bits: str) -> None:
        self.own_bits = bits

    def announce(self) -> ClassicalMessage:
        msg = ClassicalMessage(self.party, self.own_bits, self._round)
        self._round += 1
        return msg

    def receive(self, message: ClassicalMessage) -> None:
        if self.inbox and message.round <= self.inbox[-1].round:
            raise ValueError("message rounds must increase per sender")
        self.inbox.append(message)

    def ancilla_bits(self) -> str:
        other = self.inbox[-1].payload
        if self.party is PartyId.ALICE:
            return interleave_ancilla_bits(self.own_bits, other)
        return interleave_ancilla_bits(other, self.own_bits)

    def guess(self) -> BellLabel:
        return classify_outcome(self.ancilla_bits())


@dataclass
class SessionResult:
    record: ShotRecord
    alice_guess: BellLabel
    bob_guess: BellLabel
    transcript: list[str] = field(default_factory=list)
    messages: list[ClassicalMessage] = field(default_factory=list)


def run_session(
    target: BellLabel,
    ancillas: Sequence[BellLabel] = (BellLabel.PHI_PLUS, BellLabel.PHI_PLUS),
    noise: NoiseModel = NOISELESS,
    rng: np.random.Generator | None = None,
    wires: WireMap = DEFAULT_WIRES,
) -> SessionResult:
    rng = np.random.default_rng() if rng is None else rng
    state = prepare_state(target, ancillas[0], ancillas[1], noise, rng, wires)
    referee = Referee(state, noise, rng, wires)
    referee.transcript.append(f"prepare target={BellLabel(target)} ancillas={BellLabel(ancillas[0])},{BellLabel(ancillas[1])}")
    alice = ProtocolAgent(PartyId.ALICE, wires)
    bob = ProtocolAgent(PartyId.BOB, wires)

    # Gates alternate Alice, Bob; both parties' layers commute with each other.
    while True:
        reqs = [r for r in (alice.next_gate(), bob.next_gate()) if r is not None]
        if not reqs:
            break
        for r in reqs:
            referee.execute(r)
    for agent in (alice, bob):
        agent.record(referee.execute(agent.readout_request()))

    messages = [alice.announce(), bob.announce()]
    referee.deliver(messages[0], PartyId.BOB)
    bob.receive(messages[0])
    referee.deliver(messages[1], PartyId.ALICE)
    alice.receive(messages[1])

    verified, referee.state = verify_target(referee.state, noise, rng, wires)
    referee.transcript.append(f"verify {verified}")
    record = ShotRecord(BellLabel(target), alice.ancilla_bits(), alice.guess(), verified)
    return SessionResult(record, alice.guess(), bob.guess(), referee.transcript, messages)


def run_protocol_session(
    target: BellLabel,
    ancillas: Sequence[BellLabel] = (BellLabel.PHI_PLUS, BellLabel.PHI_PLUS),
    noise: NoiseModel = NOISELESS,
    rng: np.random.Generator | None = None,
    wires: WireMap = DEFAULT_WIRES,
) -> ShotRecord:
    return run_session(target, ancillas, noise, rng, wires).record


def dump_transcript(lines: Sequence[str], path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.writelines(line + "\n" for line in lines)

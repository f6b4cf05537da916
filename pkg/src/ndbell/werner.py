"""
Werner-state ancillas.

A Werner pair ``(1 - lam) |phi+><phi+| + lam I/4`` is a Bell-diagonal
mixture with weights ``(1 - 3 lam/4, lam/4, lam/4, lam/4)``.  It is simulated
by drawing the Bell component of each ancilla pair per shot (twirling), which
keeps the engine pure-state.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .noise import NOISELESS, NoiseModel
from .protocol import DEFAULT_WIRES, WireMap, enumerate_branches, run_experiment
from .qstate import BellLabel

_ATOL = 1e-12


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0 or np.isnan(lam):
        raise ValidationError(f"lambda={lam} outside [0, 1]")
    return lam


def bell_mixture_weights(lam: float) -> np.ndarray:
    """Bell-basis weights of a Werner pair, ordered like ``BellLabel``."""
    lam = _check_lambda(lam)
    return np.array([1 - 3 * lam / 4, lam / 4, lam / 4, lam / 4])


def analytic_success(lam: float) -> float:
    """Noiseless success probability with two Werner ancillas of equal weight."""
    lam = _check_lambda(lam)
    return (1 - 0.75 * lam) ** 2


@dataclass(frozen=True)
class WernerParams:
    lambda1: float = 0.0
    lambda2: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "lambda1", _check_lambda(self.lambda1))
        object.__setattr__(self, "lambda2", _check_lambda(self.lambda2))

    @classmethod
    def symmetric(cls, lam: float) -> "WernerParams":
        return cls(lam, lam)

    def joint_weights(self) -> np.ndarray:
        """4x4 array of probabilities for (first pair, second pair) labels."""
        return np.outer(bell_mixture_weights(self.lambda1), bell_mixture_weights(self.lambda2))

    def sample_batch(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        first = rng.choice(4, size=size, p=bell_mixture_weights(self.lambda1))
        second = rng.choice(4, size=size, p=bell_mixture_weights(self.lambda2))
        return first, second


def sample_ancilla(params: WernerParams, rng: np.random.Generator) -> tuple[BellLabel, BellLabel]:
    first, second = params.sample_batch(rng, 1)
    return BellLabel(int(first[0])), BellLabel(int(second[0]))


@dataclass(frozen=True)
class EventTableRow:
    ancilla_basis: tuple[BellLabel, BellLabel]
    p_f: int
    p_d: int

    def __post_init__(self) -> None:
        if self.p_f not in (0, 1) or self.p_d not in (0, 1):
            raise ValidationError("event table entries are binary")


_P, _M, _S, _A = BellLabel.PHI_PLUS, BellLabel.PHI_MINUS, BellLabel.PSI_PLUS, BellLabel.PSI_MINUS

# (first pair, second pair) -> (p_f, p_d) for target phi+; unlisted rows are (0, 0).
_EVENTS = {
    (_P, _P): (1, 1),
    (_P, _S): (1, 0),
    (_S, _P): (0, 1),
    (_A, _M): (0, 1),
    (_M, _P): (1, 0),
    (_M, _S): (1, 0),
    (_M, _M): (0, 1),
}

# Row order used for reporting.
_TABLE_ORDER = [
    (_P, _P), (_P, _S), (_P, _A), (_P, _M),
    (_S, _P), (_S, _S), (_S, _A), (_S, _M),
    (_A, _P), (_A, _S), (_A, _A), (_A, _M),
    (_M, _P), (_M, _S), (_M, _A), (_M, _M),
]


def event_table() -> list[EventTableRow]:
    """Deterministic (p_f, p_d) per ancilla Bell component, target phi+."""
    return [EventTableRow(basis, *_EVENTS.get(basis, (0, 0))) for basis in _TABLE_ORDER]


def derive_event_table_by_simulation(
    target: BellLabel = BellLabel.PHI_PLUS, wires: WireMap = DEFAULT_WIRES
) -> list[EventTableRow]:
    """Rebuild the event table from exact branch enumeration of the circuit.

    ``p_d`` is 1 when every readout with nonzero probability names the
    target; ``p_f`` is 1 when every branch leaves the target pair intact.
    """
    rows = []
    for basis in _TABLE_ORDER:
        branches = enumerate_branches(target, basis[0], basis[1], wires)
        p_d = all(b.guess == target for b in branches)
        p_f = all(abs(b.verify_distribution[int(target)] - 1) < 1e-10 for b in branches)
        rows.append(EventTableRow(basis, int(p_f), int(p_d)))
    return rows


def mixture_success(params: WernerParams, table: Sequence[EventTableRow] | None = None) -> float:
    """Success probability obtained by weighting each table row by its mixture weight."""
    table = event_table() if table is None else table
    w = params.joint_weights()
    return float(sum(w[int(r.ancilla_basis[0]), int(r.ancilla_basis[1])] * r.p_f * r.p_d for r in table))


@dataclass(frozen=True)
class SweepPoint:
    lam: float
    p_succ: float
    stderr: float
    shots: int

    @property
    def analytic(self) -> float:
        return analytic_success(self.lam)


def sweep_lambda(
    grid: Iterable[float],
    shots: int,
    rng: np.random.Generator,
    noise: NoiseModel = NOISELESS,
    target: BellLabel = BellLabel.PHI_PLUS,
    workers: int = 1,
) -> list[SweepPoint]:
    """Empirical success rate against ``target`` for each lambda on ``grid``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    out = []
    for lam in grid:
        params = WernerParams.symmetric(lam)
        stats = run_experiment([target], shots, ancillas=params, noise=noise, rng=rng, workers=workers)
        p = stats.p_succ
        out.append(SweepPoint(float(lam), p, float(np.sqrt(p * (1 - p) / shots)), shots))
    return out


def write_sweep_csv(points: Sequence[SweepPoint], path: str | os.PathLike, header: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["lambda", "p_succ", "stderr", "shots", "analytic"])
        for p in points:
            writer.writerow([f"{p.lam:.6g}", f"{p.p_succ:.6f}", f"{p.stderr:.6f}", p.shots, f"{p.analytic:.6f}"])


def all_combinations() -> list[tuple[BellLabel, BellLabel]]:
    return [(BellLabel(a), BellLabel(b)) for a, b in product(range(4), repeat=2)]

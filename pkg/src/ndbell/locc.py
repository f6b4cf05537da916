"""
Win probability of unentangled local strategies and a numerical search over them.

A party's strategy couples its half of the Bell pair to a private ancilla
of dimension ``d`` prepared in ``|z>``, applies a unitary on
``system (x) ancilla`` and reads the ancilla in the computational basis.
Outcome ``l`` leaves the system transformed by the Kraus operator

    K_l = (I_2 (x) <l|) U (I_2 (x) |z>).

The referee scores a win when the joint guess names the Bell state *and* the
pair is still that Bell state afterwards, so

    p_win = 1/4 sum_Psi sum_{(i,j) -> Psi} |<Psi| K_i (x) K_j |Psi>|^2.

Ancillas are never entangled across parties.  A mixed separable ancilla is
a convex combination of product pure ones and cannot beat the best of them,
so pure product ``|z>`` suffices when maximising.  Outcomes always map to a
guess; an abstaining outcome would only remove nonnegative terms.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import BoundViolation, ValidationError
from .qstate import BELL_VECTORS, BellLabel, I2, is_unitary, label_from_bell_bits, measure_array, apply_matrix

CLASSICAL_BOUND = 0.25
COMPLETENESS_ATOL = 1e-8

# Bell vectors as 2x2 coefficient matrices: |Psi> = sum_ab M[a, b] |ab>.
_BELL_MATS = BELL_VECTORS.reshape(4, 2, 2)


@dataclass(frozen=True)
class LocalStrategy:
    ancilla_dim: int
    ancilla_init: np.ndarray = field(repr=False)
    unitary: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        d = int(self.ancilla_dim)
        if d < 1:
            raise ValidationError("ancilla_dim must be >= 1")
        z = np.asarray(self.ancilla_init, dtype=complex).reshape(-1)
        u = np.asarray(self.unitary, dtype=complex)
        if z.shape != (d,):
            raise ValidationError(f"ancilla_init must have length {d}")
        if not np.isclose(np.linalg.norm(z), 1.0, atol=1e-10):
            raise ValidationError("ancilla_init is not normalised")
        if u.shape != (2 * d, 2 * d):
            raise ValidationError(f"unitary must be {2 * d}x{2 * d}")
        if not is_unitary(u):
            raise ValidationError("local operation is not unitary")
        object.__setattr__(self, "ancilla_dim", d)
        object.__setattr__(self, "ancilla_init", z)
        object.__setattr__(self, "unitary", u)

    @classmethod
    def identity(cls) -> "LocalStrategy":
        return cls(1, np.ones(1), I2)


def kraus_operators(s: LocalStrategy) -> np.ndarray:
    """Array ``K[l]`` of shape ``(d, 2, 2)``, one Kraus operator per ancilla outcome."""
    d = s.ancilla_dim
    u = s.unitary.reshape(2, d, 2, d)  # (sys_out, anc_out, sys_in, anc_in)
    k = np.einsum("iljm,m->lij", u, s.ancilla_init)
    completeness = np.einsum("lki,lkj->ij", k.conj(), k)
    if not np.allclose(completeness, I2, atol=COMPLETENESS_ATOL):
        raise ValidationError("Kraus family is not complete")
    return k


def _as_guess_array(guess_map, da: int, db: int) -> np.ndarray:
    if callable(guess_map):
        arr = np.array([[int(guess_map(i, j)) for j in range(db)] for i in range(da)], dtype=np.int64)
    else:
        arr = np.asarray(guess_map, dtype=np.int64)
        if arr.ndim == 0:
            arr = np.full((da, db), int(arr))
    if arr.shape != (da, db):
        raise ValidationError(f"guess map must have shape {(da, db)}, got {arr.shape}")
    if arr.min() < 0 or arr.max() > 3:
        raise ValidationError("guess map entries must be Bell labels")
    return arr


@dataclass(frozen=True)
class KrausStrategy:
    """Local strategies for both parties plus the joint outcome -> guess map.

    ``guess_map`` may be a callable ``(i, j) -> BellLabel``, a ``(dA, dB)``
    array of labels, or a single label used for every outcome pair.
    """

    alice: LocalStrategy
    bob: LocalStrategy
    guess_map: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "guess_map", _as_guess_array(self.guess_map, self.alice.ancilla_dim, self.bob.ancilla_dim)
        )
        # completeness is checked when the families are built
        kraus_operators(self.alice)
        kraus_operators(self.bob)

    def kraus(self) -> tuple[np.ndarray, np.ndarray]:
        return kraus_operators(self.alice), kraus_operators(self.bob)

    @classmethod
    def from_shared_ancilla(
        cls,
        alice_unitary: np.ndarray,
        bob_unitary: np.ndarray,
        joint_init: np.ndarray,
        dims: tuple[int, int],
        guess_map,
        atol: float = 1e-10,
    ) -> "KrausStrategy":
        """Build a strategy from a joint ancilla state, which must be a product.

        An entangled ``joint_init`` is pre-shared entanglement and is rejected.
        """
        da, db = dims
        z = np.asarray(joint_init, dtype=complex).reshape(da, db)
        u, s, vh = np.linalg.svd(z)
        if s.size > 1 and s[1] > atol:
            raise ValidationError(
                f"ancilla state has Schmidt coefficients {np.round(s, 6)}; entangled ancillas are not local"
            )
        za = u[:, 0] * s[0]
        zb = vh[0]
        za = za / np.linalg.norm(za)
        return cls(LocalStrategy(da, za, alice_unitary), LocalStrategy(db, zb, bob_unitary), guess_map)


@dataclass(frozen=True)
class WinProbability:
    value: float
    per_target: np.ndarray

    def __float__(self) -> float:
        return self.value


def term_tensor(ka: np.ndarray, kb: np.ndarray) -> np.ndarray:
    """``T[Psi, i, j] = |<Psi| K_i (x) K_j |Psi>|^2``."""
    m = _BELL_MATS
    amp = np.einsum("pab,iac,jbd,pcd->pij", m.conj(), ka, kb, m)
    return np.abs(amp) ** 2


def greedy_guess_map(ka: np.ndarray, kb: np.ndarray) -> np.ndarray:
    return np.argmax(term_tensor(ka, kb), axis=0)


def win_probability(strategy: KrausStrategy) -> WinProbability:
    ka, kb = strategy.kraus()
    t = term_tensor(ka, kb)
    g = strategy.guess_map
    per_target = np.array([t[p][g == p].sum() for p in range(4)])
    return WinProbability(float(per_target.mean()), per_target)


def win_probability_density(
    alice_unitary: np.ndarray,
    bob_unitary: np.ndarray,
    ancilla_rho: np.ndarray,
    dims: tuple[int, int],
    guess_map,
) -> float:
    """Trace-form evaluation with a (possibly mixed) joint ancilla density matrix.

    Works on the full ``A A' B B'`` space with no Kraus decomposition, so it
    is an independent route to ``win_probability``.
    """
    da, db = dims
    g = _as_guess_array(guess_map, da, db)
    rho_anc = np.asarray(ancilla_rho, dtype=complex).reshape(da, db, da, db)
    ua = np.asarray(alice_unitary).reshape(2, da, 2, da)
    vb = np.asarray(bob_unitary).reshape(2, db, 2, db)
    total = 0.0
    for p in range(4):
        m = _BELL_MATS[p]
        rho_in = np.einsum("ij,uvwt,kl->iujvkwlt", m, rho_anc, m.conj())
        half = np.einsum("axiu,byjv,iujvkwlt->axbykwlt", ua, vb, rho_in)
        rho_out = np.einsum("axbykwlt,cskw,erlt->axbycser", half, ua.conj(), vb.conj())
        for i in range(da):
            for j in range(db):
                if g[i, j] == p:
                    block = rho_out[:, i, :, j, :, i, :, j]
                    total += float(np.real(np.einsum("ab,abce,ce->", m.conj(), block, m)))
    return total / 4


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------

def random_guess_strategy(guess: BellLabel = BellLabel.PHI_PLUS) -> KrausStrategy:
    """Leave the pair alone and name a fixed Bell state."""
    return KrausStrategy(LocalStrategy.identity(), LocalStrategy.identity(), int(guess))


def _z_measurement_local() -> LocalStrategy:
    # CNOT from the system qubit onto a |0> ancilla copies its Z value
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    return LocalStrategy(2, np.array([1, 0]), cnot)


Z_GUESS_MAP = np.array(
    [[BellLabel.PHI_PLUS, BellLabel.PSI_PLUS], [BellLabel.PSI_MINUS, BellLabel.PHI_MINUS]], dtype=np.int64
)


def z_measurement_strategy(guess_map=Z_GUESS_MAP) -> KrausStrategy:
    """Both parties measure Z; equal outcomes guess a phi state, unequal a psi state."""
    return KrausStrategy(_z_measurement_local(), _z_measurement_local(), guess_map)


# ---------------------------------------------------------------------------
# Random strategies
# ---------------------------------------------------------------------------

def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed ``n x n`` unitary from the QR decomposition of a Ginibre matrix."""
    g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_unit_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def random_local_strategy(ancilla_dim: int, rng: np.random.Generator) -> LocalStrategy:
    return LocalStrategy(ancilla_dim, random_unit_vector(ancilla_dim, rng), haar_unitary(2 * ancilla_dim, rng))


def random_strategy(ancilla_dim: int, rng: np.random.Generator, greedy: bool = True) -> KrausStrategy:
    """Haar-random local operations for both parties.

    With ``greedy`` the guess map picks, for each outcome pair, the Bell state
    whose term is largest; otherwise the map is uniformly random.
    """
    if ancilla_dim not in (1, 2, 4):
        raise ValidationError("ancilla_dim must be 1, 2 or 4")
    a = random_local_strategy(ancilla_dim, rng)
    b = random_local_strategy(ancilla_dim, rng)
    if greedy:
        g = greedy_guess_map(kraus_operators(a), kraus_operators(b))
    else:
        g = rng.integers(0, 4, size=(ancilla_dim, ancilla_dim))
    return KrausStrategy(a, b, g)


# ---------------------------------------------------------------------------
# Monte Carlo dilation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    stderr: float
    shots: int


def _ancilla_qubits(d: int) -> int:
    k = d.bit_length() - 1
    if 1 << k != d:
        raise ValidationError(f"ancilla dimension {d} is not a power of two")
    return k


def monte_carlo_win_probability(
    strategy: KrausStrategy, shots: int, rng: np.random.Generator, chunk: int = 16384
) -> MonteCarloEstimate:
    """Sample the game on the dilated circuit.

    Register layout: ``sA, sB``, then Alice's ancilla qubits, then Bob's.
    Each shot draws a Bell state uniformly, applies both local unitaries,
    reads the ancillas, forms the guess and Bell-measures the pair.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    a, b = strategy.alice, strategy.bob
    na, nb = _ancilla_qubits(a.ancilla_dim), _ancilla_qubits(b.ancilla_dim)
    qa = [0] + list(range(2, 2 + na))
    qb = [1] + list(range(2 + na, 2 + na + nb))
    anc_a, anc_b = qa[1:], qb[1:]
    inits = np.stack([np.kron(np.kron(BELL_VECTORS[p], a.ancilla_init), b.ancilla_init) for p in range(4)])
    wins = 0
    done = 0
    while done < shots:
        size = min(chunk, shots - done)
        psi = rng.integers(0, 4, size=size)
        amps = inits[psi]
        amps = apply_matrix(amps, a.unitary, qa)
        amps = apply_matrix(amps, b.unitary, qb)
        i = np.zeros(size, dtype=np.int64)
        j = np.zeros(size, dtype=np.int64)
        if anc_a:
            bits, amps = measure_array(amps, anc_a, rng)
            i = bits.astype(np.int64) @ (1 << np.arange(na - 1, -1, -1))
        if anc_b:
            bits, amps = measure_array(amps, anc_b, rng)
            j = bits.astype(np.int64) @ (1 << np.arange(nb - 1, -1, -1))
        guess = strategy.guess_map[i, j]
        amps = apply_matrix(amps, np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]), [0, 1])
        amps = apply_matrix(amps, np.array([[1, 1], [1, -1]]) / np.sqrt(2), [0])
        vbits, _ = measure_array(amps, [0, 1], rng)
        verified = label_from_bell_bits(vbits[:, 0], vbits[:, 1])
        wins += int(np.sum((guess == psi) & (verified == psi)))
        done += size
    p = wins / shots
    return MonteCarloEstimate(p, float(np.sqrt(p * (1 - p) / shots)), shots)


# ---------------------------------------------------------------------------
# Optimisation
# ---------------------------------------------------------------------------

def _hermitian(theta: np.ndarray, n: int) -> np.ndarray:
    k = n * (n - 1) // 2
    h = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    h[iu] = theta[:k] + 1j * theta[k : 2 * k]
    h = h + h.conj().T
    h[np.diag_indices(n)] = theta[2 * k :]
    return h


@dataclass
class OptimizationResult:
    ancilla_dim: int
    best: WinProbability
    strategy: KrausStrategy
    history: list[tuple[int, int, float]]  # (restart, iteration, best p_win so far)
    max_evaluated: float
    evaluations: int


def _optimize_restart(ancilla_dim: int, restart: int, iterations: int, seed, step0: float, step_min: float):
    rng = np.random.default_rng(seed)
    d = ancilla_dim
    n = 2 * d
    base_a = random_local_strategy(d, rng)
    base_b = random_local_strategy(d, rng)
    npar = n * n

    def build(theta):
        ua = base_a.unitary @ expm(1j * _hermitian(theta[:npar], n))
        ub = base_b.unitary @ expm(1j * _hermitian(theta[npar:], n))
        a = LocalStrategy(d, base_a.ancilla_init, ua)
        b = LocalStrategy(d, base_b.ancilla_init, ub)
        ka, kb = kraus_operators(a), kraus_operators(b)
        t = term_tensor(ka, kb)
        g = np.argmax(t, axis=0)
        value = float(np.take_along_axis(t, g[None], axis=0).sum() / 4)
        return value, a, b, g

    theta = np.zeros(2 * npar)
    value, a, b, g = build(theta)
    best = (value, a, b, g)
    max_seen = value
    history = [(restart, 0, value)]
    evals = 1
    ratio = (step_min / step0) ** (1 / max(iterations - 1, 1))
    for it in range(1, iterations + 1):
        step = step0 * ratio ** (it - 1)
        k = rng.integers(2 * npar)
        for sign in (1.0, -1.0):
            trial = theta.copy()
            trial[k] += sign * step
            cand = build(trial)
            evals += 1
            max_seen = max(max_seen, cand[0])
            if cand[0] > best[0]:
                theta, best = trial, cand
                break
        history.append((restart, it, best[0]))
    return best, history, max_seen, evals


def optimize_win_probability(
    ancilla_dim: int,
    restarts: int,
    iterations: int,
    rng: np.random.Generator,
    step0: float = 0.5,
    step_min: float = 1e-3,
    workers: int = 1,
) -> OptimizationResult:
    """Maximise p_win over product-ancilla local strategies.

    Derivative-free: each iteration perturbs one generator coordinate of one
    party's unitary by +/- step (step decays geometrically) and keeps the move
    if the greedy-map win probability improves.  Restarts use independent
    seeds spawned from one draw of ``rng``.
    """
    if restarts < 1 or iterations < 1:
        raise ValueError("restarts and iterations must be >= 1")
    if ancilla_dim not in (1, 2, 4):
        raise ValidationError("ancilla_dim must be 1, 2 or 4")
    seeds = np.random.SeedSequence(int(rng.integers(2**63))).spawn(restarts)
    jobs = [(ancilla_dim, r, iterations, s, step0, step_min) for r, s in enumerate(seeds)]
    if workers > 1 and restarts > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_optimize_restart, *zip(*jobs)))
    else:
        outs = [_optimize_restart(*j) for j in jobs]

    history: list[tuple[int, int, float]] = []
    best = None
    max_seen = 0.0
    evals = 0
    for cand, hist, seen, n_eval in outs:
        history.extend(hist)
        max_seen = max(max_seen, seen)
        evals += n_eval
        if best is None or cand[0] > best[0]:
            best = cand
    _, a, b, g = best
    strategy = KrausStrategy(a, b, g)
    return OptimizationResult(ancilla_dim, win_probability(strategy), strategy, history, max_seen, evals)


@dataclass
class CampaignResult:
    baselines: dict[str, float]
    runs: list[OptimizationResult]
    tolerance: float

    @property
    def best(self) -> float:
        return max(r.best.value for r in self.runs)

    @property
    def max_evaluated(self) -> float:
        return max(r.max_evaluated for r in self.runs)

    @property
    def within_bound(self) -> bool:
        return self.max_evaluated <= CLASSICAL_BOUND + self.tolerance


def certify_bound(
    dims: Sequence[int] = (1, 2, 4),
    restarts: int = 20,
    iterations: int = 500,
    rng: np.random.Generator | None = None,
    tolerance: float = 1e-6,
    workers: int = 1,
    baseline_only: bool = False,
) -> CampaignResult:
    """Evaluate the baselines and run the search for each ancilla dimension.

    Raises ``BoundViolation`` if any evaluated strategy exceeds the classical
    bound by more than ``tolerance``.
    """
    rng = np.random.default_rng() if rng is None else rng
    baselines = {
        "random_guess": win_probability(random_guess_strategy()).value,
        "z_measurement": win_probability(z_measurement_strategy()).value,
    }
    runs = []
    if not baseline_only:
        runs = [optimize_win_probability(d, restarts, iterations, rng, workers=workers) for d in dims]
    result = CampaignResult(baselines, runs, tolerance)
    worst = max([*baselines.values(), *(r.max_evaluated for r in runs)])
    if worst > CLASSICAL_BOUND + tolerance:
        raise BoundViolation(f"strategy reached p_win={worst:.12f} > {CLASSICAL_BOUND} + {tolerance}")
    return result


def write_campaign_csv(result: CampaignResult, path: str | os.PathLike, header: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["ancilla_dim", "restart", "iteration", "p_win"])
        for run in result.runs:
            for restart, it, value in run.history:
                writer.writerow([run.ancilla_dim, restart, it, f"{value:.12f}"])
        for name, value in result.baselines.items():
            fh.write(f"# baseline {name}: p_win={value:.12f}\n")
        for run in result.runs:
            fh.write(f"# ancilla_dim={run.ancilla_dim}: best p_win={run.best.value:.12f}\n")
        if result.runs:
            fh.write(f"# summary: best={result.best:.12f} max_evaluated={result.max_evaluated:.12f} "
                     f"bound={CLASSICAL_BOUND} within_bound={result.within_bound}\n")

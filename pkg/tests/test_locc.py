import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ndbell.errors import BoundViolation, ValidationError
from ndbell.locc import (
    CLASSICAL_BOUND, KrausStrategy, LocalStrategy, Z_GUESS_MAP, certify_bound, greedy_guess_map,
    haar_unitary, kraus_operators, monte_carlo_win_probability, optimize_win_probability, random_guess_strategy,
    random_local_strategy, random_strategy, term_tensor, win_probability, win_probability_density,
    write_campaign_csv,
)
from ndbell import locc
from ndbell.qstate import BELL_VECTORS, BellLabel, CNOT

P = BellLabel.PHI_PLUS


def _z_local():
    return LocalStrategy(2, np.array([1, 0]), CNOT)


def test_identity_kraus():
    k = kraus_operators(LocalStrategy.identity())
    assert k.shape == (1, 2, 2)
    np.testing.assert_allclose(k[0], np.eye(2))


def test_cnot_kraus_is_z_measurement():
    k = kraus_operators(_z_local())
    np.testing.assert_allclose(k[0], [[1, 0], [0, 0]])
    np.testing.assert_allclose(k[1], [[0, 0], [0, 1]])


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_completeness_for_random_unitaries(d, rng):
    for _ in range(100):
        k = kraus_operators(random_local_strategy(d, rng))
        np.testing.assert_allclose(np.einsum("lki,lkj->ij", k.conj(), k), np.eye(2), atol=1e-8)


def test_local_strategy_validation():
    with pytest.raises(ValidationError):
        LocalStrategy(2, np.array([1, 1]), np.eye(4))
    with pytest.raises(ValidationError):
        LocalStrategy(2, np.array([1, 0]), np.ones((4, 4)))
    with pytest.raises(ValidationError):
        LocalStrategy(2, np.array([1, 0]), np.eye(2))
    with pytest.raises(ValidationError):
        KrausStrategy(_z_local(), _z_local(), np.zeros((2, 3)))
    with pytest.raises(ValidationError):
        KrausStrategy(_z_local(), _z_local(), 7)


def test_baselines_exact():
    assert abs(win_probability(random_guess_strategy()).value - 0.25) < 1e-12
    z = KrausStrategy(_z_local(), _z_local(), Z_GUESS_MAP)
    wp = win_probability(z)
    assert abs(wp.value - 0.25) < 1e-12
    np.testing.assert_allclose(wp.per_target, 0.25, atol=1e-12)
    assert wp.value == pytest.approx(wp.per_target.mean())


def test_z_measurement_constant_phi_guess():
    s = KrausStrategy(_z_local(), _z_local(), int(P))
    assert win_probability(s).value == pytest.approx(1 / 8, abs=1e-12)


def test_guess_map_forms_agree():
    table = {(0, 0): P, (0, 1): BellLabel.PSI_PLUS, (1, 0): BellLabel.PSI_MINUS, (1, 1): BellLabel.PHI_MINUS}
    a = KrausStrategy(_z_local(), _z_local(), lambda i, j: table[i, j])
    b = KrausStrategy(_z_local(), _z_local(), Z_GUESS_MAP)
    assert np.array_equal(a.guess_map, b.guess_map)


def test_term_tensor_by_explicit_kron(rng):
    s = random_strategy(2, rng)
    ka, kb = s.kraus()
    t = term_tensor(ka, kb)
    for p in range(4):
        for i in range(2):
            for j in range(2):
                v = BELL_VECTORS[p]
                assert t[p, i, j] == pytest.approx(abs(v.conj() @ np.kron(ka[i], kb[j]) @ v) ** 2)


def test_greedy_map_dominates(rng):
    for _ in range(100):
        d = int(rng.choice([1, 2, 4]))
        s = random_strategy(d, rng)
        fixed = KrausStrategy(s.alice, s.bob, rng.integers(0, 4, size=(d, d)))
        assert win_probability(s).value >= win_probability(fixed).value - 1e-15
        assert np.array_equal(s.guess_map, greedy_guess_map(*s.kraus()))


def test_random_strategies_respect_bound(rng):
    best = 0.0
    for k in range(1000):
        best = max(best, win_probability(random_strategy((1, 2, 4)[k % 3], rng)).value)
    assert best <= CLASSICAL_BOUND + 1e-9


def test_random_strategy_dims(rng):
    with pytest.raises(ValidationError):
        random_strategy(3, rng)


def test_entangled_ancilla_rejected():
    # two ancilla qubits in a Bell state, i.e. pre-shared entanglement
    with pytest.raises(ValidationError, match="entangled"):
        KrausStrategy.from_shared_ancilla(CNOT, CNOT, BELL_VECTORS[0], (2, 2), Z_GUESS_MAP)


def test_product_ancilla_accepted(rng):
    za, zb = np.array([0.6, 0.8j]), np.array([1, 0])
    s = KrausStrategy.from_shared_ancilla(CNOT, CNOT, np.kron(za, zb), (2, 2), Z_GUESS_MAP)
    direct = KrausStrategy(LocalStrategy(2, za, CNOT), LocalStrategy(2, zb, CNOT), Z_GUESS_MAP)
    assert win_probability(s).value == pytest.approx(win_probability(direct).value, abs=1e-12)


def test_density_route_matches_kraus(rng):
    for d in (1, 2, 4):
        for _ in range(5):
            s = random_strategy(d, rng)
            rho = np.outer(np.kron(s.alice.ancilla_init, s.bob.ancilla_init),
                           np.kron(s.alice.ancilla_init, s.bob.ancilla_init).conj())
            dens = win_probability_density(s.alice.unitary, s.bob.unitary, rho, (d, d), s.guess_map)
            assert dens == pytest.approx(win_probability(s).value, abs=1e-12)


def test_mixed_ancilla_is_convex_combination(rng):
    for _ in range(20):
        ua, ub = haar_unitary(4, rng), haar_unitary(4, rng)
        g = rng.integers(0, 4, size=(2, 2))
        z1 = [locc.random_unit_vector(2, rng) for _ in range(2)]
        z2 = [locc.random_unit_vector(2, rng) for _ in range(2)]
        w = rng.random()
        pure = []
        rho = np.zeros((4, 4), dtype=complex)
        for weight, (za, zb) in ((w, z1), (1 - w, z2)):
            s = KrausStrategy(LocalStrategy(2, za, ua), LocalStrategy(2, zb, ub), g)
            pure.append(win_probability(s).value)
            v = np.kron(za, zb)
            rho += weight * np.outer(v, v.conj())
        mixed = win_probability_density(ua, ub, rho, (2, 2), g)
        assert mixed == pytest.approx(w * pure[0] + (1 - w) * pure[1], abs=1e-12)
        assert mixed <= max(pure) + 1e-12


def test_trace_inequality_on_psd_pairs(rng):
    def psd():
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        return g @ g.conj().T

    for _ in range(1000):
        a, b = psd(), psd()
        assert np.real(np.trace(a @ b)) <= np.real(np.trace(a)) * np.real(np.trace(b)) + 1e-9


def test_monte_carlo_examples(rng):
    z = KrausStrategy(_z_local(), _z_local(), Z_GUESS_MAP)
    for s in (z, random_guess_strategy()):
        est = monte_carlo_win_probability(s, 100_000, rng)
        se = np.sqrt(0.25 * 0.75 / est.shots)
        assert abs(est.value - 0.25) <= 4 * se


def test_monte_carlo_random_strategy(rng):
    s = random_strategy(4, rng)
    p = win_probability(s).value
    est = monte_carlo_win_probability(s, 50_000, rng)
    assert abs(est.value - p) <= 4 * np.sqrt(p * (1 - p) / est.shots)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([1, 2, 4]))
def test_win_probability_in_range(seed, d):
    wp = win_probability(random_strategy(d, np.random.default_rng(seed), greedy=False))
    assert 0 <= wp.value <= CLASSICAL_BOUND + 1e-9
    assert wp.value == pytest.approx(wp.per_target.mean())


def test_optimizer_small_runs(rng):
    for d in (1, 2, 4):
        res = optimize_win_probability(d, restarts=2, iterations=60, rng=rng)
        assert res.best.value <= CLASSICAL_BOUND + 1e-6
        assert res.max_evaluated <= CLASSICAL_BOUND + 1e-6
        assert len(res.history) == 2 * 61
        assert res.best.value == pytest.approx(win_probability(res.strategy).value)
    with pytest.raises(ValueError):
        optimize_win_probability(2, 0, 10, rng)


def test_optimizer_reaches_bound_for_qubit_ancilla():
    res = optimize_win_probability(2, restarts=4, iterations=500, rng=np.random.default_rng(21))
    assert 0.249 <= res.best.value <= CLASSICAL_BOUND + 1e-6


def test_optimizer_deterministic():
    a = optimize_win_probability(2, 2, 30, np.random.default_rng(3))
    b = optimize_win_probability(2, 2, 30, np.random.default_rng(3))
    assert a.history == b.history


def test_certify_baseline_only_and_violation(monkeypatch, tmp_path):
    res = certify_bound(baseline_only=True)
    assert res.baselines == {"random_guess": pytest.approx(0.25, abs=1e-12), "z_measurement": pytest.approx(0.25, abs=1e-12)}
    assert res.runs == []

    def fake(d, restarts, iterations, rng, workers=1):
        out = optimize_win_probability(d, 1, 1, rng)
        out.max_evaluated = 0.3
        return out

    monkeypatch.setattr(locc, "optimize_win_probability", fake)
    with pytest.raises(BoundViolation):
        certify_bound(dims=(1,), restarts=1, iterations=1, rng=np.random.default_rng(0))


def test_campaign_csv(tmp_path):
    res = certify_bound(dims=(1, 2), restarts=1, iterations=3, rng=np.random.default_rng(0))
    path = tmp_path / "campaign.csv"
    write_campaign_csv(res, path, header="bound campaign")
    lines = path.read_text().splitlines()
    assert lines[1] == "ancilla_dim,restart,iteration,p_win"
    assert sum(1 for l in lines if not l.startswith("#")) == 1 + 2 * 4
    assert lines[-1].startswith("# summary: best=")

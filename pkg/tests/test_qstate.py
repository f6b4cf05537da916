import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ndbell.errors import QubitIndexError, SizeError, ValidationError
from ndbell.qstate import (
    CNOT, H, BellLabel, Gate, PureState, apply_gate, apply_gates, apply_matrix, basis_state,
    bell_measure, bell_pair, bell_probabilities, fidelity, measure, measure_array,
    product_of_bell_pairs, project, zero_state,
)

from oracles import full_operator, random_state

S = 1 / np.sqrt(2)


# -- states -----------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 6, 12])
def test_zero_state(n):
    amps = zero_state(n).amplitudes
    assert amps.shape == (2**n,)
    assert amps[0] == 1 and np.count_nonzero(amps) == 1


@pytest.mark.parametrize("n", [0, -1, 13])
def test_zero_state_size_error(n):
    with pytest.raises(SizeError):
        zero_state(n)


def test_bell_pair_conventions():
    np.testing.assert_allclose(bell_pair(BellLabel.PHI_PLUS).amplitudes, [S, 0, 0, S])
    np.testing.assert_allclose(bell_pair(BellLabel.PHI_MINUS).amplitudes, [S, 0, 0, -S])
    np.testing.assert_allclose(bell_pair(BellLabel.PSI_PLUS).amplitudes, [0, S, S, 0])
    np.testing.assert_allclose(bell_pair(BellLabel.PSI_MINUS).amplitudes, [0, S, -S, 0])
    for label in BellLabel:
        first = bell_pair(label).amplitudes[np.flatnonzero(bell_pair(label).amplitudes)[0]]
        assert first.imag == 0 and first.real > 0


def test_bell_labels_order_and_parse():
    assert [l.display for l in BellLabel] == ["PhiPlus", "PhiMinus", "PsiPlus", "PsiMinus"]
    for label in BellLabel:
        assert BellLabel.parse(label.display) is label
        assert BellLabel.parse(label.name.lower()) is label
        assert BellLabel.parse(label.symbol) is label
        assert BellLabel.from_bits(label.parity, label.phase) is label
    with pytest.raises(ValueError):
        BellLabel.parse("chi+")


def test_fidelity_examples():
    phi = bell_pair(BellLabel.PHI_PLUS)
    assert fidelity(phi, basis_state("00")) == pytest.approx(0.5)
    assert fidelity(phi, phi) == pytest.approx(1.0)
    assert fidelity(phi, bell_pair(BellLabel.PSI_MINUS)) == pytest.approx(0.0, abs=1e-15)
    assert fidelity(phi, bell_pair(BellLabel.PHI_MINUS)) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        fidelity(phi, zero_state(3))


def test_bell_basis_orthonormal():
    m = np.array([bell_pair(l).amplitudes for l in BellLabel])
    np.testing.assert_allclose(m @ m.conj().T, np.eye(4), atol=1e-15)


def test_tensor_product_matches_kron():
    a, b = bell_pair(BellLabel.PSI_PLUS), basis_state("1")
    np.testing.assert_allclose((a @ b).amplitudes, np.kron(a.amplitudes, b.amplitudes))


# -- gates ------------------------------------------------------------------

def test_gate_examples():
    plus = apply_gate(zero_state(1), Gate.h(0))
    np.testing.assert_allclose(plus.amplitudes, [S, S])
    state = PureState.from_amplitudes([S, 0, S, 0])
    np.testing.assert_allclose(apply_gate(state, Gate.cnot(0, 1)).amplitudes, bell_pair(BellLabel.PHI_PLUS).amplitudes)
    flipped = apply_gate(bell_pair(BellLabel.PHI_PLUS), Gate.x(1))
    assert fidelity(flipped, bell_pair(BellLabel.PSI_PLUS)) == pytest.approx(1.0)


def test_gate_validation():
    with pytest.raises(QubitIndexError):
        Gate.cnot(1, 1)
    with pytest.raises(QubitIndexError):
        apply_gate(zero_state(2), Gate.h(2))
    with pytest.raises(QubitIndexError):
        apply_gate(zero_state(2), Gate.h(-1))
    with pytest.raises(ValidationError):
        Gate.u(np.array([[1, 1], [0, 1]]), 0)
    with pytest.raises(ValidationError):
        Gate.u(np.eye(4), 0)


def test_apply_matrix_against_dense_operator(rng):
    n = 4
    for qubits in [(0,), (3,), (2, 0), (1, 3), (3, 1, 2)]:
        k = len(qubits)
        g = rng.standard_normal((2**k, 2**k)) + 1j * rng.standard_normal((2**k, 2**k))
        psi = random_state(n, rng)
        expected = full_operator(g, qubits, n) @ psi
        np.testing.assert_allclose(apply_matrix(psi, g, qubits), expected, atol=1e-12)


def test_apply_matrix_batched(rng):
    batch = np.stack([random_state(3, rng) for _ in range(5)])
    out = apply_matrix(batch, CNOT, (2, 0))
    for row, psi in zip(out, batch):
        np.testing.assert_allclose(row, apply_matrix(psi, CNOT, (2, 0)))


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(2, 6),
    kinds=st.lists(st.sampled_from("HXYZC"), min_size=1, max_size=12),
)
def test_norm_preserved_by_gate_sequences(seed, n, kinds):
    rng = np.random.default_rng(seed)
    state = PureState.from_amplitudes(random_state(n, rng))
    gates = []
    for k in kinds:
        if k == "C":
            c, t = rng.choice(n, 2, replace=False)
            gates.append(Gate.cnot(int(c), int(t)))
        else:
            gates.append({"H": Gate.h, "X": Gate.x, "Y": Gate.y, "Z": Gate.z}[k](int(rng.integers(n))))
    assert abs(apply_gates(state, gates).norm() - 1) < 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), q=st.integers(0, 3))
def test_self_inverse_gates(seed, q):
    rng = np.random.default_rng(seed)
    psi = PureState.from_amplitudes(random_state(4, rng))
    for g in (Gate.h(q), Gate.x(q), Gate.y(q), Gate.z(q), Gate.cnot(q, (q + 1) % 4)):
        back = apply_gates(psi, [g, g])
        np.testing.assert_allclose(back.amplitudes, psi.amplitudes, atol=1e-12)


# -- measurement ------------------------------------------------------------

def test_measure_phi_plus(rng):
    phi = bell_pair(BellLabel.PHI_PLUS)
    seen = {measure(phi, [0, 1], rng)[0] for _ in range(200)}
    assert seen == {"00", "11"}


def test_measure_eigenstate(rng):
    bits, post = measure(basis_state("1"), [0], rng)
    assert bits == "1" and fidelity(post, basis_state("1")) == pytest.approx(1)


def test_measure_errors(rng):
    with pytest.raises(ValueError):
        measure(zero_state(2), [], rng)
    with pytest.raises(QubitIndexError):
        measure(zero_state(2), [0, 0], rng)
    with pytest.raises(QubitIndexError):
        measure(zero_state(2), [5], rng)


def test_measure_ancillas_of_protocol_output(rng):
    state = product_of_bell_pairs([BellLabel.PSI_PLUS, BellLabel.PSI_PLUS, BellLabel.PSI_MINUS])
    # pairs sit on (0,1), (2,3), (4,5): the first four qubits read a1 b1 a2 b2
    seen = {measure(state, [0, 1, 2, 3], rng)[0] for _ in range(400)}
    assert seen == {"0101", "0110", "1001", "1010"}


def test_collapse_is_consistent(rng):
    for _ in range(50):
        psi = PureState.from_amplitudes(random_state(4, rng))
        bits, post = measure(psi, [3, 1], rng)
        assert abs(post.norm() - 1) < 1e-12
        p, _ = project(post, [3, 1], bits)
        assert p == pytest.approx(1.0)


def test_born_rule_frequencies(rng):
    psi = random_state(3, np.random.default_rng(7))
    n = 100_000
    bits, _ = measure_array(np.broadcast_to(psi, (n, 8)).copy(), [0, 1, 2], rng)
    idx = bits.astype(int) @ np.array([4, 2, 1])
    freq = np.bincount(idx, minlength=8) / n
    p = np.abs(psi) ** 2
    sigma = np.sqrt(p * (1 - p) / n)
    assert np.all(np.abs(freq - p) <= 4 * sigma)


def test_scalar_born_rule_on_subset(rng):
    psi = PureState.from_amplitudes(random_state(3, np.random.default_rng(3)))
    n = 20_000
    counts = {"0": 0, "1": 0}
    for _ in range(n):
        counts[measure(psi, [1], rng)[0]] += 1
    p1 = float(np.sum(np.abs(psi.amplitudes.reshape(2, 2, 2)[:, 1, :]) ** 2))
    assert abs(counts["1"] / n - p1) <= 4 * np.sqrt(p1 * (1 - p1) / n)


# -- Bell measurement ------------------------------------------------------

def test_bell_measure_examples(rng):
    for label in BellLabel:
        got, post = bell_measure(bell_pair(label), (0, 1), rng)
        assert got is label
    seen = {bell_measure(basis_state("00"), (0, 1), rng)[0] for _ in range(200)}
    assert seen == {BellLabel.PHI_PLUS, BellLabel.PHI_MINUS}
    np.testing.assert_allclose(bell_probabilities(basis_state("00"), (0, 1)), [0.5, 0.5, 0, 0], atol=1e-15)


def test_bell_probabilities_on_embedded_pair():
    state = product_of_bell_pairs([BellLabel.PSI_MINUS, BellLabel.PHI_MINUS])
    np.testing.assert_allclose(bell_probabilities(state, (2, 3)), [0, 1, 0, 0], atol=1e-12)
    np.testing.assert_allclose(bell_probabilities(state, (0, 1)), [0, 0, 0, 1], atol=1e-12)


def test_hadamard_matrix():
    np.testing.assert_allclose(H @ H, np.eye(2), atol=1e-15)

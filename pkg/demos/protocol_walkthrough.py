"""
Walk through one nondestructive Bell discrimination
===================================================

Alice and Bob share a target Bell pair plus two phi+ ancilla pairs.  Each
applies three local gates, they read their ancillas and swap the bits, and
the two parities name the target without disturbing it.

Run with ``python demos/protocol_walkthrough.py``.
"""
import numpy as np

from ndbell import BellLabel
from ndbell.protocol import DEFAULT_WIRES, discrimination_layers, enumerate_branches, expected_ancilla_state
from ndbell.session import run_session

# %%
# The six gates.  None of them touches both parties.
w = DEFAULT_WIRES
owners = {**{q: "Alice" for q in w.alice}, **{q: "Bob" for q in w.bob}}
for g in discrimination_layers():
    print(f"{str(g):<14} acts on {owners[g.qubits[0]]}'s qubits {g.qubits}")

# %%
# After the gates each ancilla pair is phi+ or psi+, and which one depends on
# the target's phase and parity bits.
for target in BellLabel:
    first, second = expected_ancilla_state(target)
    print(f"{target.display:<9} -> ancillas ({first.display}, {second.display})")

# %%
# Exact branches: every readout occurs with probability 1/4, always names the
# target and leaves it untouched.
for target in BellLabel:
    rows = [(b.ancilla_bits, b.probability, b.guess.display, b.verify_distribution[int(target)])
            for b in enumerate_branches(target)]
    print(target.display, [f"{bits} p={p:.2f} guess={g} kept={k:.0f}" for bits, p, g, k in rows])

# %%
# The same thing as a two-party session, with the referee's log.
res = run_session(BellLabel.PSI_MINUS, rng=np.random.default_rng(1))
print("\n".join(res.transcript))
print("record:", res.record.as_row())

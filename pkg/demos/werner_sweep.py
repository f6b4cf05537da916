"""
Success rate with Werner ancillas
=================================

Replacing the phi+ ancillas by Werner pairs with weight ``lam`` on white
noise gives success ``(1 - 3 lam/4)**2``.  The quantum advantage over the
classical 1/4 disappears at ``lam = 2/3``.  Here the Monte Carlo sweep and
the event-table expansion are set side by side.

Run with ``python demos/werner_sweep.py``; about fifteen seconds.
"""
import numpy as np

from ndbell import HARDWARE_NOISE
from ndbell.werner import WernerParams, analytic_success, event_table, mixture_success, sweep_lambda

# %%
# Which ancilla components let the protocol succeed on phi+?
for row in event_table():
    a, b = row.ancilla_basis
    if row.p_f or row.p_d:
        print(f"({a.display}, {b.display}): p_f={row.p_f} p_d={row.p_d}")

# %%
# Weighting the table by the mixture reproduces the closed form.
for lam in (0.0, 0.25, 2 / 3, 1.0):
    print(f"lam={lam:.3f}  table={mixture_success(WernerParams.symmetric(lam)):.6f}  formula={analytic_success(lam):.6f}")

# %%
# Monte Carlo, noiseless and with the calibrated hardware noise.
grid = np.round(np.linspace(0, 1, 11), 2)
ideal = sweep_lambda(grid, 50_000, np.random.default_rng(3))
noisy = sweep_lambda(grid, 20_000, np.random.default_rng(4), noise=HARDWARE_NOISE)
print(" lam  ideal    noisy    formula")
for a, b in zip(ideal, noisy):
    print(f"{a.lam:4.1f}  {a.p_succ:.4f}  {b.p_succ:.4f}  {a.analytic:.4f}")

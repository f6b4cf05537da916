"""
No unentangled strategy beats 1/4
=================================

Without pre-shared entanglement, any pair of local instruments followed by
a joint guess wins the nondestructive game with probability at most 1/4.
We evaluate the two obvious strategies, sample random ones and then let the
optimizer push as hard as it can.

Run with ``python demos/locc_bound.py``; takes under a minute.
"""
import numpy as np

from ndbell.locc import (
    monte_carlo_win_probability, optimize_win_probability, random_guess_strategy, random_strategy,
    win_probability, z_measurement_strategy,
)

rng = np.random.default_rng(7)

# %%
# Baselines: guess blindly, or measure Z on both sides.
for name, s in (("random guess", random_guess_strategy()), ("Z measurement", z_measurement_strategy())):
    wp = win_probability(s)
    mc = monte_carlo_win_probability(s, 50_000, rng)
    print(f"{name:<14} exact={wp.value:.6f} per target={np.round(wp.per_target, 4)} MC={mc.value:.4f}+-{mc.stderr:.4f}")

# %%
# Random local strategies with the best guess per outcome pair.
values = [win_probability(random_strategy(d, rng)).value for d in (1, 2, 4) for _ in range(300)]
print(f"random strategies: mean={np.mean(values):.4f} max={np.max(values):.6f}")

# %%
# Local search from several restarts.  It climbs to 1/4 and stops there.
for d in (1, 2, 4):
    res = optimize_win_probability(d, restarts=5, iterations=400, rng=rng)
    print(f"ancilla dim {d}: best={res.best.value:.8f} after {res.evaluations} evaluations")

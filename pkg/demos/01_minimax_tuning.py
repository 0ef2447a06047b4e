"""
Minimax tuning of Huber regression
==================================

How much does the aspect ratio m = n/p cost a robust regression, and where
does the worst-case variance blow up?
"""

# %%
# Classical scalar quantities: the capping level, least Fisher information
# and Huber's minimax variance for a few contamination fractions.
import numpy as np

from huber_minimax import classical_minimax

for eps in (0.0, 0.01, 0.05, 0.1, 0.2):
    c = classical_minimax(eps)
    print(f"eps={eps:<5} kappa*={c.kappa_star:8.4f}  i*={c.i_star:.5f}  v*={c.v_star:.5f}")

# %%
# In high dimensions the variance picks up an extra factor.  With m = 2 the
# worst case is finite only while m i*(eps) > 1.
from huber_minimax.lfse import breakdown_epsilon, minimax

print("breakdown at m=2:", breakdown_epsilon(2.0))
for eps in (0.05, 0.1, 0.15, 0.175, 0.1875, 0.2):
    s = minimax(2.0, eps)
    lam = "-" if s.lambda_star is None else f"{s.lambda_star:.4f}"
    print(f"eps={eps:<7} V*={s.V_star:10.4f}  lambda*={lam}")

# %%
# The breakdown point climbs back toward the classical answer as m grows.
for m in (1.5, 2, 5, 10, 100, 1000):
    print(f"m={m:<6} eps*={breakdown_epsilon(m):.5f}")

# %%
# A coarse text rendering of the phase diagram: '#' marks cells where no
# tuning keeps the variance bounded.
from huber_minimax.lfse import phase_grid

eps = np.linspace(0.01, 0.5, 50)
inv_m = np.linspace(0.05, 0.95, 19)
g = phase_grid("Vstar", eps, inv_m, curve_points=64)
for x, row in zip(inv_m[::-1], g.bounded[::-1]):
    print(f"1/m={x:4.2f} " + "".join("." if b else "#" for b in row))

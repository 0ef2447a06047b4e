"""
State evolution and the least-favorable map
===========================================

State evolution predicts the error of Huber regression from a
one-dimensional variance map.  Sending the outliers to infinity gives a
straight line that sits above every proper map.
"""

# %%
import numpy as np

from huber_minimax import ContaminationModel, FloatingKappa, SEConfig, T_map, fixed_point
from huber_minimax.lfse import LFSEParams, lfse_fixed_point, lfse_T, minimax

m, eps = 5.0, 0.05
kappa = minimax(m, eps).kappa_underline_star
lp = LFSEParams(m, eps, kappa)
print(f"minimax floating threshold kappa = {kappa:.5f}")

# %%
# Proper maps for several outlier amplitudes against the least-favorable line.
taus = np.linspace(0, 10, 6)
print("tau^2  " + "  ".join(f"mu={mu:<5}" for mu in (2, 5, 7.5, 10)) + "  lfse")
for t in taus:
    vals = [T_map(t, SEConfig(m, FloatingKappa(kappa), ContaminationModel.two_point(eps, mu)))
            for mu in (2, 5, 7.5, 10)]
    print(f"{t:5.1f}  " + "  ".join(f"{v:8.4f}" for v in vals) + f"  {lfse_T(t, lp):8.4f}")

# %%
# Fixed points climb toward the least-favorable one as mu grows.
bar = lfse_fixed_point(lp)
for mu in (2, 10, 100, 1e4, 1e6):
    fp = fixed_point(SEConfig(m, FloatingKappa(kappa), ContaminationModel.two_point(eps, mu)))
    print(f"mu={mu:<8g} m tau^2 = {m * fp.tau_sq_inf:.6f}   (bound {m * bar:.6f})")

# %%
# Past the breakdown point the predicted variance grows without limit in mu.
from huber_minimax import FixedLambda

for mu in (10, 100, 1e3, 1e6):
    fp = fixed_point(SEConfig(2.0, FixedLambda(1.0), ContaminationModel.two_point(0.25, mu)))
    print(f"eps=0.25 mu={mu:<8g} avar = {fp.avar:.4g}")

# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Forward normalized flow: convergence, blow-up and the separatrix

# %%
import numpy as np

from rsf import ModelParams, integrate, jensen_slice_value, slice_metric
from rsf.analysis import blowup_profile, trace_separatrix

p = ModelParams(1)

# %% [markdown]
# ## Two outcomes
#
# Large fibers flow to the round metric.  Small fibers on the slice make the
# scalar curvature blow up in finite time.

# %%
for pt in [(0.9, 1.0, 1.1), (0.3, 0.3, 0.3)]:
    tr = integrate("normalized", slice_metric(*pt, p), "forward", p)
    print(pt, "->", tr.terminal.summary(), f"({len(tr)} samples)")

# %% [markdown]
# ## Shape of the singularity
#
# Near blow-up the fibers look like a small round 3-sphere: `x S` tends to 6
# and the Ricci eigenvalues of `(S/6) g` approach `(2, 2, 2, 0)`.

# %%
tr = integrate("normalized", slice_metric(0.2, 0.25, 0.3, p), "forward", p)
prof = blowup_profile(tr, p)
print("x*S           :", prof.xS_limit)
print("6 r_a / S     :", np.round(prof.rescaled_ricci, 6))
print("x/z, y/z      :", prof.ratio_limits)

# %% [markdown]
# ## Locating the separatrix
#
# Bisection along the diagonal finds the squashed Einstein point itself; off
# the diagonal it finds a point on its stable manifold, whose flow passes
# right by that point.

# %%
res = trace_separatrix((0.3, 0.3, 0.3), (1.1, 1.1, 1.1), p)
print("diagonal:", res.point[0], "expected", jensen_slice_value(p))

res = trace_separatrix((0.25, 0.3, 0.35), (1.0, 1.05, 1.1), p)
print("off-axis:", res.point, "closest distance", res.jensen_distance,
      "at t =", res.witness_time)

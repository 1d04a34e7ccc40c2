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
# # Curvature of the invariant metrics and the two Einstein points
#
# A metric in the family is four positive numbers `(x, y, z, s)`: three
# fiber eigenvalues and one base eigenvalue.  We look at its Ricci
# eigenvalues, the scalar curvature and the fixed points of the normalized flow.

# %%
import numpy as np

from rsf import (ModelParams, fixed_points, linearization, ricci_eigenvalues,
                 scalar_curvature, slice_field, traceless_ricci_norm_sq)

p = ModelParams(1)  # the 7-sphere

# %% [markdown]
# ## Round and squashed metrics
#
# The round metric has all eigenvalues equal.  Stretching the base by a
# factor 5 gives the second Einstein metric.

# %%
for m in [(1, 1, 1, 1), (1, 1, 1, 5), (0.25, 2, 2, 1)]:
    r = ricci_eigenvalues(m, p)
    print(m, r.as_array(), "S =", scalar_curvature(m, p),
          "|Ric0|^2 =", traceless_ricci_norm_sq(m, p))

# %% [markdown]
# ## Fixed points on the volume-one slice
#
# The slice field vanishes at both Einstein points.  The Jacobian is
# circulant there, so the spectrum is `a + 2b` along `(1,1,1)` and `a - b`
# twice on the orthogonal plane.

# %%
for fp in fixed_points(p):
    lin = linearization(fp.slice_point, p)
    print(fp.name.value, fp.slice_point)
    print("  field norm:", np.linalg.norm(slice_field(*fp.slice_point, p)))
    print("  predicted :", [ev for ev, _, _ in fp.eigenvalues])
    print("  numerical :", lin.eigenvalues)

# %% [markdown]
# The squashed point has one positive eigenvalue: it is a saddle, and its
# stable manifold separates metrics that converge to the round one from
# metrics that blow up.

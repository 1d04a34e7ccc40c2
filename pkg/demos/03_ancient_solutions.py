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
# # Which flows extend to all negative times?
#
# After sorting the fibers, a metric gives an ancient solution exactly when
# two fibers agree and do not exceed the base, `x <= y = z <= s`.  We
# compare that rule with backward integration.

# %%
from rsf import ModelParams, integrate
from rsf.analysis import classify_ancient, verify_ancient_numerically, ys_limit_candidates
from rsf.io import Axis, GridSpec, portrait_columns, portrait_rows

p = ModelParams(1)

# %%
for m in [(0.1, 1, 1, 3), (0.1, 1, 1, 1), (0.3, 0.3, 0.3, 0.5), (0.5, 0.8, 1.2, 1), (0.5, 2, 2, 1)]:
    v = classify_ancient(m, p)
    rep = verify_ancient_numerically(m, p)
    print(m, v.reason.value, "->", rep.backward_terminal.summary())

# %% [markdown]
# ## Collapse ratio
#
# Going backward, the base blows up and `y/s` settles on one of two values.

# %%
print("candidates:", ys_limit_candidates(p))
tr = integrate("normalized", (0.1, 1, 1, 3), "backward", p)
print("last y/s samples:", tr.diagnostics["y_over_s"][-3:])

# %% [markdown]
# ## A small portrait
#
# Each row is a grid point of the ancient family with its forward and
# backward outcome.

# %%
grid = GridSpec("ancient", (Axis("s", 0.5, 3.0, 3, "log"), Axis("y_over_s", 0.4, 1.6, 3, "log")))
cols = portrait_columns(grid)
for row in portrait_rows(grid, p, workers=1):
    d = dict(zip(cols, row))
    print(f"s={d['axis_s']:.3f} y/s={d['axis_y_over_s']:.3f}  {d['forward']:>16}  {d['backward']}")

# %% [markdown]
# # Local time and the last zero
#
# The drift of `|B|` is the local time at zero.  Two estimators should agree:
# the Tanaka residual and an occupation count near zero.  The last visit to
# zero before `T` follows the arcsine law.

# %%
import math

import numpy as np

from sigmag import GeneratorSpec, honest_time, local_time, make_grid, map_ensemble
from sigmag.generators import brownian

grid = make_grid(1.0, 4000)
B = brownian(grid, seed=1, member=range(2000))
tanaka, occupation = local_time(B, eps=math.sqrt(grid.dt))
print("E|B_1|              :", math.sqrt(2 / math.pi))
print("Tanaka estimate     :", float(tanaka.post[:, -1].mean()))
print("occupation estimate :", float(occupation.post[:, -1].mean()))

# %%
tol = 2 * math.sqrt(grid.dt)
g = np.concatenate(map_ensemble(GeneratorSpec("abs_bm"), grid, 1, 4000,
                                lambda d: honest_time(d, tol)))
edges = np.linspace(0, 1, 11)
emp = np.histogram(g, edges)[0] / g.size
arcsine = np.diff(2 / np.pi * np.arcsin(np.sqrt(edges)))
for lo, e, a in zip(edges[:-1], emp, arcsine):
    print(f"[{lo:.1f}, {lo + 0.1:.1f})  empirical {e:.3f}  arcsine {a:.3f}")

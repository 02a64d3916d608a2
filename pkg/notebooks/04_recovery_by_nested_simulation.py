# %% [markdown]
# # Recovering a process from its last zero
#
# Take `M` a Brownian motion started at 1 and absorbed at 0, and
# `X = (k - M)^+`.  Its value at `T` should equal `k` times the chance that
# `M`, restarted from `M_T`, hits 0 before `k`.  Inner simulations estimate that
# chance per outer path; gambler's ruin gives it in closed form.

# %%
import numpy as np

from sigmag import recovery_check, supremum_identity_check

rep = recovery_check(k=2.0, start=1.0, T=1.0, n_outer=50, n_inner=1000, seed=3)
print("mean |X_T - estimate| :", round(rep.mean_abs_error, 4))
print("mean 3 * stderr       :", round(rep.mean_bound, 4))
order = np.argsort(rep.target)[::10]
for i in order:
    print(f"X_T {rep.target[i]:.3f}  estimate {rep.estimate[i]:.3f} +- {rep.stderr[i]:.3f}")

# %% [markdown]
# Started from `m`, the chance of reaching `k` before 0 is `m / k`.

# %%
sup = supremum_identity_check(k=2.0, start=1.0, t=0.0, n_inner=20_000, seed=3)
print("P(reach 2 from 1) :", float(sup.estimate[0]), "+-", float(sup.stderr[0]), "oracle 0.5")

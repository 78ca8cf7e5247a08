# %% [markdown]
# # Functional M-position
#
# A linear map T puts f(T x) in isotropic position with the integral of g0.
# Afterwards f and its dual are covered by g0 and cover g0 cheaply.

# %%
from fcover.experiments import mposition, mposition_equivalence
from fcover.parser import parse_expr

for text in ("gauss(4)", "ind_box(-1,1)", "expnorm(1,1)"):
    rep = mposition(parse_expr(text))
    nums = " ".join(f"{v:.3f}" for v in rep.covering_numbers)
    print(f"{text:<14} T={rep.T_f[0, 0]:.4f} N: {nums} santalo={rep.santalo:.4f}")

# %% [markdown]
# Volume and covering positions imply each other.

# %%
eq = mposition_equivalence(parse_expr("gauss(0.25)"))
print(eq.covering_constant, eq.volume_constant, eq.implied_covering_constant)
print(eq.volume_from_covering_ok, eq.covering_from_volume_ok)

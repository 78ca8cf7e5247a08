# %% [markdown]
# # Covering one function by translates of another
#
# N(f, g) is the least total mass of a measure mu with mu * g >= f.  On a grid
# this is a covering LP; its dual is the separation problem.

# %%
import math

from fcover.covering import GridConfig, build_instance, covering_number, verify_cover
from fcover.function_space import GridSpec
from fcover.parser import parse_expr

g0 = parse_expr("gauss(1)")
cfg = GridConfig(GridSpec((-6.0,), (6.0,), (241,)), GridSpec((-8.0,), (8.0,), (321,)))
res = covering_number(build_instance(g0, g0, None, cfg))
print(res.status, res.value_primal, res.value_dual, res.gap)

# %% [markdown]
# A gaussian covers itself with a single atom at the origin.

# %%
top = res.mu.weights.argmax()
print("heaviest atom", cfg.atoms.nodes()[top], "weight", res.mu.weights[top])
print("cover slack", verify_cover(res.mu, g0, g0, cfg.constraints))

# %% [markdown]
# The integral sandwich brackets every value.

# %%
print(f"{res.lower_bound:.4f} <= {res.value_primal:.4f} <= {res.upper_bound:.4f}")

# %% [markdown]
# Intervals: [0, 2] needs two copies of [0, 1].

# %%
cfg = GridConfig.auto(parse_expr("ind_box(0,2)"), parse_expr("ind_box(0,1)"), 0.01)
box = covering_number(build_instance(parse_expr("ind_box(0,2)"), parse_expr("ind_box(0,1)"), None, cfg))
print("N([0,2], [0,1]) =", box.value_primal)

# %% [markdown]
# Covering a box by a gaussian costs 1 / g0(1).

# %%
cfg = GridConfig.auto(parse_expr("ind_box(-1,1)"), g0, 0.05)
r = covering_number(build_instance(parse_expr("ind_box(-1,1)"), g0, None, cfg))
print(r.value_primal, math.sqrt(math.e))

# %% [markdown]
# # Log-Legendre duals, level sets and the Santalo product
#
# f*(y) = inf_x exp(-<x, y>) / f(x), computed on the grid by a discrete
# Legendre transform of the potential -log f.

# %%
import math

import numpy as np

from fcover.function_space import GridSpec, evaluate
from fcover.parser import parse_expr
from fcover.transforms import default_dual_grid, level_set_body, log_dual, polar_inclusions, santalo_product

sf = evaluate(parse_expr("gauss(1)"), GridSpec.from_step((-8,), (8,), 0.01))
dual = default_dual_grid(sf)
fd = log_dual(sf, dual)
y = dual.nodes()[:, 0]
inner = np.abs(y) <= 3
print("gaussian self-duality error", np.max(np.abs(fd.values[inner] - np.exp(-y[inner] ** 2 / 2))))

# %% [markdown]
# The dual of an indicator is an exponential of a norm.

# %%
box = evaluate(parse_expr("ind_box(-1,1)"), GridSpec.from_step((-2,), (2,), 0.01))
bd = log_dual(box, default_dual_grid(box))
print("box dual at y=1:", bd.values[bd.grid.nearest_index((1.0,))], "expected", math.exp(-1))

# %% [markdown]
# The Santalo product int f int f* is at most (2 pi)^n, with equality for g0.

# %%
print("gaussian", santalo_product(sf, dual), 2 * math.pi)
print("box     ", santalo_product(box, default_dual_grid(box)))

# %%
print("level body of g0 has length", level_set_body(sf).volume)
rep = polar_inclusions(sf, dual)
print("polar inclusions", rep.inner_ok, rep.outer_ok)

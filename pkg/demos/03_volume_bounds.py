# %% [markdown]
# # Integral bounds on covering numbers
#
# Lower: int f / int g.  Upper: an integral of f sup-convolved with the
# reflected kernel, divided by an L^p norm of g.

# %%
from fcover.covering import GridConfig, build_instance, covering_number, volume_bounds
from fcover.function_space import GridSpec
from fcover.parser import parse_expr

cfg = GridConfig(GridSpec.from_step((-10,), (10,), 0.05), GridSpec.from_step((-14,), (14,), 0.05))
for ftext in ("gauss(1)", "gauss(0.25)", "expnorm(1,1)"):
    f, g = parse_expr(ftext), parse_expr("gauss(1)")
    rep = volume_bounds(f, g, (1.5, 2.0, 3.0), cfg=cfg)
    n = covering_number(build_instance(f, g, None, cfg), bounds=False).value_primal
    ups = ", ".join(f"p={p:g}: {v:.3f}" for p, v in rep.upper_p.items())
    print(f"{ftext:<13} N={n:.4f}  lower={rep.lower_ratio:.4f}  upper {ups}")

# %% [markdown]
# For even functions the square-integral variant applies.

# %%
rep = volume_bounds(parse_expr("gauss(0.25)"), parse_expr("gauss(1)"), (2.0,), cfg=cfg)
print("even variant", rep.even_variant)

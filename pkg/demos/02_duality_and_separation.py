# %% [markdown]
# # Separation and the duality gap
#
# The separation number is the dual LP: the largest mass of a measure rho
# on the constraint nodes with rho * g_- <= h.  Refining the grid and
# shrinking the kernel towards g shows no gap opening.

# %%
from fcover.covering import GridConfig, separation_number
from fcover.experiments import duality_gap_study
from fcover.function_space import GridSpec, Reflect
from fcover.parser import parse_expr

f, g = parse_expr("ind_box(0,2)"), parse_expr("ind_box(0,1)")
cfg = GridConfig(GridSpec.from_step((0,), (2,), 0.05), GridSpec.from_step((-1,), (2,), 0.05))

sep = separation_number(f, Reflect(g), None, cfg)
print("separation", sep.value_dual)

# %%
st = duality_gap_study(f, g, cfg=cfg, levels=3)
print("step      N        M        gap")
for step, n, m, gap, _ in st.rows:
    print(f"{step:<8g}  {n:.6f} {m:.6f} {gap:.1e}")

# %% [markdown]
# Kernels g_k = g (1 + bump / k) decrease to g; N(f, g_k) climbs back.

# %%
for k, v in zip(st.k_values, st.k_covering):
    print(f"k={k:<3d} N={v:.6f}")
print("extrapolated", st.k_limit, "relative error", st.limit_rel_error)

# %% [markdown]
# # Duality of covering numbers
#
# N(f, g) and N(g*, f*) agree up to a constant per dimension.

# %%
from fcover.experiments import konig_milman, konig_milman_swapped
from fcover.parser import parse_expr

pairs = [("gauss(1)", "gauss(2)"), ("ind_box(-1,1)", "gauss(1)"), ("expnorm(1,1)", "ind_box(-0.5,0.5)")]
for ft, gt in pairs:
    rep = konig_milman(parse_expr(ft), parse_expr(gt))
    print(f"{ft:<14} {gt:<18} N={rep.N_fg:.4f} N*={rep.N_dual:.4f} ratio={rep.ratio_per_dim:.4f}")

# %% [markdown]
# Swapping the roles inverts the ratio up to grid error.

# %%
rep = konig_milman(parse_expr("gauss(1)"), parse_expr("gauss(2)"))
sw = konig_milman_swapped(rep)
print(rep.ratio_per_dim * sw.ratio_per_dim)

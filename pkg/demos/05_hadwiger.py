# %% [markdown]
# # Covering f by its own rescalings
#
# f_lam(x) = f(x / lam)^lam shrinks f towards the origin.  For even f the
# covering number stays below 2^n as lam -> 1.

# %%
from fcover.experiments import hadwiger_scan
from fcover.parser import parse_expr

lams = (0.6, 0.7, 0.8, 0.9, 0.95)
for text in ("gauss(1)", "expnorm(1,1)", "ind_box(-1,1)"):
    scan = hadwiger_scan(parse_expr(text), lams)
    print(text)
    for lam, v, lo, up in zip(scan.lambdas, scan.values, scan.lower, scan.upper):
        print(f"  lam={lam:<5g} {lo:.4f} <= N={v:.4f} <= {up:.4f}")
    print(f"  limit ~ {scan.extrapolated_limit:.4f}, bound {scan.bound:g}")

# %% [markdown]
# Indicators jump at lam = 1: N(1_K, 1_lamK) is 2 for every lam < 1 but 1 at
# lam = 1, so the extrapolated limit is 2, not 1.

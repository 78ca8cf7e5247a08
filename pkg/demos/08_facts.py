# %% [markdown]
# # Elementary identities and inequalities, checked on random members

# %%
from collections import Counter

from fcover.facts import QuadraticWeight, additivity_h, run_suite
from fcover.function_space import ExpNorm
from fcover.parser import parse_expr

checks = run_suite(seed=0, trials=24)
tally = Counter((c.name, c.ok) for c in checks)
for (name, ok), k in sorted(tally.items()):
    print(f"{'ok ' if ok else 'BAD'} {k:3d}  {name}")

# %% [markdown]
# The value is concave in the weight h.  Splitting h = h1 + h2 never costs
# more, and usually costs less.

# %%
c = additivity_h(parse_expr("ind_box(-1,1)"), parse_expr("gauss(1)"), ExpNorm(2.0, 0.3), QuadraticWeight(), 0.1)
print(f"N(h1 + h2) = {c.lhs:.4f}  >=  N(h1) + N(h2) = {c.rhs:.4f}")

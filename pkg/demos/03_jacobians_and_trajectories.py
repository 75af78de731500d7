# %% [markdown]
# # Jacobians of the parameterization, and trajectory checks
#
# For a backward-flat output the deepest blocks of the parameterization's
# Jacobian are rank deficient while the top blocks have full rank; the
# associated system's forward output shows the opposite pattern.  The two
# matrices are mirror images of each other.

# %%
from importlib import resources

import dflat
from dflat.exprcore import parse_expr as P
from dflat.jacrank import jacobian_columns

s = dflat.load_system(resources.files("dflat") / "systems" / "example1.json").with_extension()
a = dflat.build_associated(s)

p = dflat.verify_flat_output(s, dflat.FlatOutputCandidate((P("u1"), P("x3 + x2*x4 + u2*(x1 + u1)"))))
p_hat = dflat.verify_flat_output(a, dflat.FlatOutputCandidate((P("z4"), P("z3 + z2*z4"))))

for q, mode in ((p, "backward"), (p_hat, "forward")):
    print("columns:", [str(c) for c in jacobian_columns(q)])
    print(dflat.build_extended_jacobian(q))
    r = dflat.check_rank_conditions(q, mode)
    print("ranks", r.ranks, f"{mode} pattern:", r.holds)
    print()

print("mirror correspondence:", dflat.check_mirror_correspondence(p, p_hat))

# %% [markdown]
# ## Exact simulation
# Random rational runs of the original system, read backwards, must be
# runs of the associated system.

# %%
tr = dflat.simulate(s, (1, 2, 3, 4), [(1, 1)] * 4, 4)
for k, x in enumerate(tr.x):
    print(k, [str(c) for c in x])

print(dflat.check_correspondence(s, N=10, seeds=100, seed=1))
print(dflat.check_parameterization_roundtrip(s, p, N=10, seeds=20, seed=1))

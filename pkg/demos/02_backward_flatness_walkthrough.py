# %% [markdown]
# # Testing a system for backward flatness
#
# The system below has two inputs and four states:
#
#     x1+ = x4
#     x2+ = u2
#     x3+ = x3 + x2*x4 + x1*u2
#     x4+ = u1
#
# We first try the forward test, then build the time-mirrored
# *associated system* and run the forward test on that instead.

# %%
from importlib import resources

import dflat
from dflat.exprcore import parse_expr as P

path = resources.files("dflat") / "systems" / "example1.json"
s = dflat.load_system(path).with_extension()
print("extension g =", [str(g) for g in s.g])

# %% [markdown]
# ## Forward test
# The distribution sequence stalls at dimension 3 < n + m = 6.

# %%
rec = dflat.forward_flatness_test(s)
print(rec.verdict, rec.dims)
for k, E in enumerate(rec.E):
    print(f"E_{k} =", E)

# %% [markdown]
# ## The associated system
# Inverting `(x, u) -> (f, g)` and renaming gives a system whose
# trajectories are those of the original run backwards in time.

# %%
a = dflat.build_associated(s)
for z, fz in zip(a.states, a.f):
    print(f"{z}+ = {fz}")
print("eta =", [str(e) for e in a.g])

rec_a = dflat.forward_flatness_test(a)
print(rec_a.verdict, rec_a.dims)
for k, E in enumerate(rec_a.E):
    print(f"E_{k} =", E)

# %% [markdown]
# So the original system is backward-flat.  A flat output of the associated
# system comes out of polynomial first integrals of the state parts of the
# sequence; pushing it through `f` gives an output of the original system.

# %%
v = dflat.backward_flatness_test(s, derive=True, max_degree=2)
print("associated output:", v.associated_output.to_strings())
print("original output:  ", v.derived_output.to_strings())
p = v.parameterization
print("R1 =", p.R1, " R2 =", p.R2)
for x, Fx in zip(s.states, p.F_x):
    print(f"  {x} = {Fx}")
for u, Fu in zip(s.inputs, p.F_u):
    print(f"  {u} = {Fu}")

# %% [markdown]
# The backward shifts of the output, written in the system's coordinates:

# %%
y1, y2 = v.derived_output.components
for k in (0, -1, -2, -3):
    print(f"y1@{k} = {dflat.shift_expr(y1, k, s)}")
for k in (0, -1, -2):
    print(f"y2@{k} = {dflat.shift_expr(y2, k, s)}")

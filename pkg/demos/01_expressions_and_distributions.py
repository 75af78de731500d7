# %% [markdown]
# # Expressions, vector fields and distributions
#
# Everything in `dflat` is exact.  Expressions are rational functions over
# the rationals in shift-indexed variables (`x1`, `x1@-2`, `u2@1`), kept in a
# canonical form so that equality is structural.

# %%
from fractions import Fraction

from dflat.exprcore import ExprMatrix, Var, generic_rank, nullspace, parse_expr as P

e = P("(x1^2 - x2^2)/(x1 - x2)")
print(e)                          # cancelled on construction
print(e == P("x1 + x2"))
print(e.diff(Var("x1")))
print(P("x1/(x2 + 1)").evaluate({Var("x1"): 3, Var("x2"): Fraction(1, 2)}))

# %% [markdown]
# Ranks are *generic*: they are computed over the field of rational
# functions, so they hold at every point outside a thin set.

# %%
M = ExprMatrix([[P("x1"), P("x2")], [P("x1^2"), P("x1*x2")]])
print(generic_rank(M))
for v in nullspace(M):
    print([str(c) for c in v])

# %% [markdown]
# ## Distributions
#
# A distribution is stored through the reduced echelon form of its basis,
# which depends only on the span.  Two spans are equal exactly when their
# normal forms agree.

# %%
from dflat.geomtest import Distribution, VectorField, lie_bracket

chart = (Var("x"), Var("y"), Var("w"))
a = VectorField(chart, (P("1"), P("0"), P("0")))
b = VectorField(chart, (P("0"), P("1"), P("x")))
print(lie_bracket(a, b))

D = Distribution.span(chart, [a, b])
print(D, "involutive:", D.is_involutive())
print(Distribution.span(chart, [a, b, lie_bracket(a, b)]).dim)

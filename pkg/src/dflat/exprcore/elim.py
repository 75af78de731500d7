"""Triangular elimination for systems of rational equations.

Repeatedly pick an equation whose numerator is linear in some unsolved
unknown (with a coefficient that is not identically zero), solve for it,
and substitute everywhere.  No resultants or Groebner bases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .expr import RationalExpr, Var


class EliminationStuck(ValueError):
    """No remaining equation is linear in an unsolved unknown."""

    def __init__(self, message, solved=None, residual=(), unsolved=()):
        super().__init__(message)
        self.solved = dict(solved or {})
        self.residual = tuple(residual)
        self.unsolved = tuple(unsolved)


class InconsistentEquations(ValueError):
    """Some equation reduced to a nonzero expression free of all unknowns."""

    def __init__(self, message, residual=()):
        super().__init__(message)
        self.residual = tuple(residual)


@dataclass
class Elimination:
    solved: dict = field(default_factory=dict)
    residual: list = field(default_factory=list)


def _candidates(eq: RationalExpr, unknowns: set):
    for v in eq.variables:
        if v not in unknowns:
            continue
        split = eq.linear_split(v)
        if split is None:
            continue
        a, b = split
        if a.is_zero():
            continue
        yield v, a, b


def triangular_solve(
    equations: Iterable[RationalExpr],
    unknowns: Sequence[Var],
    targets: Optional[Sequence[Var]] = None,
) -> Elimination:
    """Solve ``eq == 0`` for ``targets`` (default: all unknowns).

    On success every target maps to an expression free of all unknowns.
    Raises :class:`EliminationStuck` when the targets cannot be isolated and
    :class:`InconsistentEquations` when an equation free of unknowns is
    nonzero.
    """
    unknown_set = set(unknowns)
    targets = list(unknowns if targets is None else targets)
    eqs = [e for e in equations if not e.is_zero()]
    solved: dict = {}

    def done():
        return all(t in solved and solved[t].free_of(unknown_set) for t in targets)

    while eqs and not done():
        pending = unknown_set - set(solved)
        best = None
        for idx, eq in enumerate(eqs):
            for v, a, b in _candidates(eq, pending):
                sol = -b / a
                n_unknown = sum(1 for w in sol.variables if w in unknown_set)
                key = (n_unknown, not a.is_constant(), sol.size(), idx, v)
                if best is None or key < best[0]:
                    best = (key, idx, v, sol)
        if best is None:
            break
        _, idx, v, sol = best
        eqs.pop(idx)
        binding = {v: sol}
        try:
            solved = {w: e.substitute(binding) for w, e in solved.items()}
            substituted = [e.substitute(binding) for e in eqs]
        except ZeroDivisionError:
            raise EliminationStuck(
                f"solving for {v} made an earlier pivot vanish", solved=solved, residual=eqs
            ) from None
        solved[v] = sol
        reduced = []
        for e in substituted:
            if e.is_zero():
                continue
            if e.free_of(unknown_set):
                raise InconsistentEquations(f"equation reduces to {e} != 0", [e])
            reduced.append(e)
        eqs = reduced

    for e in eqs:
        if e.free_of(unknown_set) and not e.is_zero():
            raise InconsistentEquations(f"equation reduces to {e} != 0", [e])
    if not done():
        unsolved = [t for t in targets if t not in solved or not solved[t].free_of(unknown_set)]
        raise EliminationStuck(
            "cannot isolate " + ", ".join(str(t) for t in unsolved),
            solved=solved,
            residual=eqs,
            unsolved=unsolved,
        )
    return Elimination(solved=solved, residual=eqs)

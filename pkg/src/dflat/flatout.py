"""Flat outputs: shift operators, derivation by polynomial first integrals,
and verification by shift elimination.

Expressions on a system live in the coordinates
``(..., zeta@-2, zeta@-1, x, u, u@1, u@2, ...)``.  The forward shift maps
``x -> f(x, u)``, ``zeta@-1 -> g(x, u)`` and raises every other shift; the
backward shift maps ``x -> psi_x(x, zeta@-1)``, ``u -> psi_u(x, zeta@-1)``
and lowers the rest.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .exprcore import (
    ExprMatrix,
    EliminationStuck,
    InconsistentEquations,
    RationalExpr,
    Var,
    generic_rank,
    triangular_solve,
)
from .geomtest import Distribution, SequenceRecord
from .sysmodel import InversionError, SystemModel


class UnsupportedVariable(ValueError):
    """A variable that is neither a state, an input nor an extension output."""


class VerificationFailed(ValueError):
    """The candidate could not be confirmed as a flat output.

    ``refuted`` is True when the shifted outputs satisfy a nontrivial
    relation (the candidate is certainly not flat); otherwise the
    elimination got stuck and the result is inconclusive for this window.
    """

    def __init__(self, message, refuted=False, residual=()):
        super().__init__(message)
        self.refuted = refuted
        self.residual = tuple(residual)


class DerivationFailed(ValueError):
    pass


class ShiftAlgebra:
    """Forward/backward shift operators on expressions of one system."""

    def __init__(self, s: SystemModel, need_inverse: bool = True):
        if need_inverse:
            s = s.with_extension()
        self.s = s
        self._states = {x.name: i for i, x in enumerate(s.states)}
        self._inputs = {u.name: i for i, u in enumerate(s.inputs)}
        self._zeta = {z.name: i for i, z in enumerate(s.zeta)}
        self._canon: dict = {}
        self._step: dict = {}

    def kind(self, v: Var) -> str:
        if v.name in self._states:
            return "state"
        if v.name in self._inputs:
            return "input"
        if v.name in self._zeta:
            return "zeta"
        raise UnsupportedVariable(f"{v} is not a state, input or extension variable of {self.s.name}")

    def is_canonical(self, v: Var) -> bool:
        k = self.kind(v)
        return (k == "state" and v.shift == 0) or (k == "input" and v.shift >= 0) or (k == "zeta" and v.shift <= -1)

    def _back_map(self):
        s = self.s
        if s.inverse is None:
            raise InversionError(f"backward shift on {s.name} needs the inverse of the extended map")
        m = dict(zip(s.inverse.xplus, s.states))
        m.update((z, z.shifted(-1)) for z in s.inverse.zeta)
        return m

    def _step_var(self, v: Var, k: int) -> RationalExpr:
        """One shift (k = +1 or -1) of a canonical coordinate."""
        key = (v, k)
        if key in self._step:
            return self._step[key]
        s = self.s
        kind = self.kind(v)
        if k == 1:
            if kind == "state":
                out = s.f[self._states[v.name]]
            elif kind == "zeta" and v.shift == -1:
                if s.g is None:
                    raise InversionError(f"{s.name} has no extension g")
                out = s.g[self._zeta[v.name]]
            else:
                out = RationalExpr.var(v.shifted(1))
        else:
            if kind == "state":
                out = s.inverse.psi_x[self._states[v.name]].rename(self._back_map()) if s.inverse else None
            elif kind == "input" and v.shift == 0:
                out = s.inverse.psi_u[self._inputs[v.name]].rename(self._back_map()) if s.inverse else None
            else:
                out = RationalExpr.var(v.shifted(-1))
            if out is None:
                self._back_map()
        self._step[key] = out
        return out

    def canonical(self, v: Var) -> RationalExpr:
        """Variable ``v`` rewritten in canonical coordinates."""
        if v in self._canon:
            return self._canon[v]
        if self.is_canonical(v):
            out = RationalExpr.var(v)
        else:
            kind = self.kind(v)
            if kind == "zeta" or (kind == "state" and v.shift > 0):
                out = self.step(self.canonical(v.shifted(-1)), 1)
            else:
                out = self.step(self.canonical(v.shifted(1)), -1)
        self._canon[v] = out
        return out

    def canonicalize(self, e: RationalExpr) -> RationalExpr:
        if all(self.is_canonical(v) for v in e.variables):
            return e
        return e.substitute({v: self.canonical(v) for v in e.variables})

    def step(self, e: RationalExpr, k: int) -> RationalExpr:
        """One forward (k=1) or backward (k=-1) shift of a canonical expression."""
        return e.substitute({v: self._step_var(v, k) for v in e.variables})

    def shift(self, e: RationalExpr, k: int) -> RationalExpr:
        e = self.canonicalize(e)
        d = 1 if k > 0 else -1
        for _ in range(abs(k)):
            e = self.step(e, d)
        return e


def shift_expr(e: RationalExpr, k: int, s: SystemModel) -> RationalExpr:
    """The ``k``-fold shift of ``e`` (backward for negative ``k``)."""
    return ShiftAlgebra(s, need_inverse=k < 0 or _needs_inverse(e, s)).shift(e, k)


def _needs_inverse(e: RationalExpr, s: SystemModel) -> bool:
    states = {x.name for x in s.states}
    inputs = {u.name for u in s.inputs}
    return any((v.name in states and v.shift < 0) or (v.name in inputs and v.shift < 0) for v in e.variables)


def shift_outputs(e: RationalExpr, k: int) -> RationalExpr:
    """Shift every variable of ``e`` by ``k`` (flat-output side)."""
    return e.rename({v: v.shifted(k) for v in e.variables})


@dataclass(frozen=True)
class FlatOutputCandidate:
    """``m`` functions of system variables and their shifts."""

    components: tuple
    names: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(RationalExpr.coerce(c) for c in self.components))
        if not self.names:
            object.__setattr__(self, "names", tuple(f"y{j + 1}" for j in range(len(self.components))))
        if len(self.names) != len(self.components):
            raise ValueError("one name per component required")

    @property
    def m(self) -> int:
        return len(self.components)

    def windows(self, s: SystemModel):
        """Observed ``(Q1, Q2)``: deepest zeta backshift and highest input shift."""
        zeta = {z.name for z in s.zeta}
        inputs = {u.name for u in s.inputs}
        q1, q2 = [], []
        for c in self.components:
            q1.append(max([-v.shift for v in c.variables if v.name in zeta] + [0]))
            q2.append(max([v.shift for v in c.variables if v.name in inputs] + [0]))
        return tuple(q1), tuple(q2)

    def to_strings(self) -> list:
        return [str(c) for c in self.components]


def candidate_from_dict(d: dict, s: SystemModel) -> FlatOutputCandidate:
    """Decode the candidate file format ``{"outputs": [...], "vars": {"zeta": [...]}}``."""
    from .exprcore import parse_expr
    from .sysmodel import SchemaError

    if not isinstance(d, dict) or "outputs" not in d:
        raise SchemaError("candidate file needs an 'outputs' list")
    outs = d["outputs"]
    if not isinstance(outs, list) or not all(isinstance(o, str) for o in outs):
        raise SchemaError("'outputs' must be a list of expression strings")
    zeta_names = (d.get("vars") or {}).get("zeta")
    rename = {}
    if zeta_names:
        if len(zeta_names) != s.m:
            raise SchemaError("'vars.zeta' needs one name per input")
        rename = {nm: z.name for nm, z in zip(zeta_names, s.zeta)}
    comps = []
    for i, text in enumerate(outs):
        try:
            e = parse_expr(text)
        except ValueError as exc:
            raise SchemaError(f"'outputs'[{i}]: {exc}") from None
        if rename:
            e = e.rename({v: Var(rename[v.name], v.shift) for v in e.variables if v.name in rename})
        comps.append(e)
    if len(comps) != s.m:
        raise SchemaError(f"expected {s.m} outputs, got {len(comps)}")
    cand = FlatOutputCandidate(tuple(comps))
    alg = ShiftAlgebra(s, need_inverse=False)
    for c in cand.components:
        for v in c.variables:
            try:
                alg.kind(v)
            except UnsupportedVariable as exc:
                raise SchemaError(str(exc)) from None
    return cand


@dataclass(frozen=True)
class Parameterization:
    """``x = F_x(y)``, ``u = F_u(y)``, ``zeta = F_g(y) = g(F_x, F_u)``.

    ``R1[j]``/``R2[j]`` are the deepest backward and highest forward shifts
    of output ``j`` used (``F_x`` counted one step higher than ``F_u``).
    """

    system: SystemModel
    candidate: FlatOutputCandidate
    F_x: tuple
    F_u: tuple
    F_g: tuple
    R1: tuple
    R2: tuple

    @property
    def names(self) -> tuple:
        return self.candidate.names

    @property
    def m(self) -> int:
        return len(self.names)

    def y(self, j: int, shift: int) -> Var:
        return Var(self.names[j], shift)

    def to_dict(self) -> dict:
        return {
            "outputs": self.candidate.to_strings(),
            "output_names": list(self.names),
            "F_x": [str(e) for e in self.F_x],
            "F_u": [str(e) for e in self.F_u],
            "F_g": [str(e) for e in self.F_g],
            "R1": list(self.R1),
            "R2": list(self.R2),
        }


def _windows_from(exprs_x, exprs_u, names):
    R1, R2 = [], []
    for nm in names:
        lo, hi = 0, 0
        for e in exprs_x:
            for v in e.variables:
                if v.name == nm:
                    lo = min(lo, v.shift)
                    hi = max(hi, v.shift + 1)
        for e in exprs_u:
            for v in e.variables:
                if v.name == nm:
                    lo = min(lo, v.shift)
                    hi = max(hi, v.shift)
        R1.append(-lo)
        R2.append(hi)
    return tuple(R1), tuple(R2)


def verify_flat_output(
    s: SystemModel,
    cand: FlatOutputCandidate,
    max_back: Optional[int] = None,
    max_fwd: Optional[int] = None,
) -> Parameterization:
    """Solve ``y@t = shift(cand, t)``, ``-max_back <= t <= max_fwd``, for ``(x, u)``.

    The returned parameterization is certified: substituting the shifted
    candidate back gives ``(x, u)`` identically, and
    ``shift(F_x, 1) == f(F_x, F_u)``.
    """
    if cand.m != s.m:
        raise ValueError(f"candidate has {cand.m} components, system has {s.m} inputs")
    max_back = s.n if max_back is None else max_back
    max_fwd = s.n if max_fwd is None else max_fwd
    s = s.with_extension()
    clash = {v.name for v in s.coords + s.zeta} & set(cand.names)
    if clash:
        raise ValueError(f"output names clash with system variables: {sorted(clash)}")
    alg = ShiftAlgebra(s)

    shifted = {}
    eqs = []
    for j, c in enumerate(cand.components):
        c = alg.canonicalize(c)
        cur = c
        for t in range(0, max_fwd + 1):
            if t:
                cur = alg.step(cur, 1)
            shifted[(j, t)] = cur
        cur = c
        for t in range(1, max_back + 1):
            cur = alg.step(cur, -1)
            shifted[(j, -t)] = cur
    for (j, t), e in sorted(shifted.items(), key=lambda kv: (kv[0][1] < 0, abs(kv[0][1]), kv[0][0])):
        eqs.append(RationalExpr.var(Var(cand.names[j], t)) - e)
    unknowns = sorted({v for e in shifted.values() for v in e.variables})
    targets = list(s.coords)
    unknowns = sorted(set(unknowns) | set(targets))
    try:
        sol = triangular_solve(eqs, unknowns, targets).solved
    except InconsistentEquations as exc:
        raise VerificationFailed(
            f"shifted outputs are dependent: {exc}", refuted=True, residual=exc.residual
        ) from None
    except EliminationStuck as exc:
        raise VerificationFailed(
            f"elimination stuck in window [-{max_back}, {max_fwd}]: {exc}", residual=exc.residual
        ) from None

    F_x = tuple(sol[x] for x in s.states)
    F_u = tuple(sol[u] for u in s.inputs)
    subs = dict(zip(s.states, F_x))
    subs.update(zip(s.inputs, F_u))
    F_g = tuple(g.substitute(subs) for g in s.g)

    # round trip: y@t -> shift(cand, t) must give back (x, u)
    back = {}
    for e in F_x + F_u:
        for v in e.variables:
            if v not in back:
                j = cand.names.index(v.name)
                back[v] = shifted[(j, v.shift)] if (j, v.shift) in shifted else alg.shift(cand.components[j], v.shift)
    for x, e in zip(s.coords, F_x + F_u):
        if e.substitute(back) != RationalExpr.var(x):
            raise VerificationFailed(f"round trip does not reproduce {x}")
    for fx, fi in zip(F_x, s.f):
        if shift_outputs(fx, 1) != fi.substitute(subs):
            raise VerificationFailed("parameterization is inconsistent with the dynamics")
    R1, R2 = _windows_from(F_x, F_u, cand.names)
    return Parameterization(s, cand, F_x, F_u, F_g, R1, R2)


def check_parameterization(p: Parameterization) -> bool:
    """Re-check the round-trip and dynamics identities of ``p``."""
    s, cand = p.system, p.candidate
    alg = ShiftAlgebra(s)
    back = {}
    for e in p.F_x + p.F_u:
        for v in e.variables:
            back[v] = alg.shift(cand.components[cand.names.index(v.name)], v.shift)
    if any(e.substitute(back) != RationalExpr.var(x) for x, e in zip(s.coords, p.F_x + p.F_u)):
        return False
    subs = dict(zip(s.states, p.F_x))
    subs.update(zip(s.inputs, p.F_u))
    return all(shift_outputs(fx, 1) == fi.substitute(subs) for fx, fi in zip(p.F_x, s.f))


def _monomials(variables: Sequence[Var], max_degree: int) -> list:
    out = []
    for d in range(1, max_degree + 1):
        for combo in itertools.combinations_with_replacement(sorted(variables), d):
            m = RationalExpr.const(1)
            for v in combo:
                m = m * RationalExpr.var(v)
            out.append(m)
    return out


def _monic(e: RationalExpr) -> RationalExpr:
    c, _ = next(iter(e.terms()))
    return e / c


def first_integrals(D: Distribution, candidate_vars: Sequence[Var], max_degree: int) -> list:
    """Polynomials ``phi`` of degree <= max_degree in ``candidate_vars`` with
    ``v(phi) = 0`` for every basis field ``v`` of ``D``.

    Returns a basis of that space (constants excluded), each element monic,
    ordered by degree then text.
    """
    monos = _monomials(candidate_vars, max_degree)
    if not monos:
        return []
    rows: dict = {}
    for v in D.basis:
        images = [v.apply(m) for m in monos]
        dens = []
        for e in images:
            d = e.denominator
            if not d.is_constant() and d not in dens:
                dens.append(d)
        L = RationalExpr.const(1)
        for d in dens:
            L = L * d
        for col, e in enumerate(images):
            if e.is_zero():
                continue
            p = e * L
            if not p.is_polynomial():
                raise ArithmeticError("common denominator did not clear")
            for c, mono in p.terms():
                key = (id(v), tuple(sorted(mono.items())))
                rows.setdefault(key, [0] * len(monos))[col] += c
    if rows:
        A = DomainMatrix([[QQ(int(c.numerator), int(c.denominator)) for c in r] for r in rows.values()], (len(rows), len(monos)), QQ)
        null = A.nullspace().to_Matrix().tolist()
    else:
        null = [[1 if i == j else 0 for j in range(len(monos))] for i in range(len(monos))]
    out = []
    for vec in null:
        phi = RationalExpr.const(0)
        for c, m in zip(vec, monos):
            if c:
                phi = phi + RationalExpr.const(_frac(c)) * m
        if not phi.is_zero():
            out.append(_monic(phi))
    out.sort(key=lambda e: (e.total_degree(), str(e)))
    return out


def _frac(c):
    from fractions import Fraction

    return Fraction(int(c.p), int(c.q)) if hasattr(c, "p") else Fraction(c)


def _state_shifts(alg: ShiftAlgebra, phi: RationalExpr) -> list:
    """``phi`` and its forward shifts while they depend on states only."""
    s = alg.s
    inputs = set(s.inputs)
    out = []
    cur = phi
    for _ in range(s.n + 1):
        if not cur.free_of(inputs) or not all(v in s.states for v in cur.variables):
            break
        out.append(cur)
        cur = alg.step(cur, 1)
    return out


def derive_forward_flat_output(
    s: SystemModel,
    rec: SequenceRecord,
    max_degree: int = 3,
    max_attempts: int = 25,
):
    """Search for a state-dependent forward-flat output.

    Candidate components are polynomial first integrals of the state parts
    of ``E_k``, deepest ``k`` first; a function is taken when it is
    independent of everything picked so far and of those picks' forward
    shifts that are still state-only.  Every complete candidate is certified
    by :func:`verify_flat_output`.  Returns ``(candidate, parameterization)``.
    """
    if not rec.forward_flat:
        raise DerivationFailed("system is not forward-flat")
    s = s.with_extension()
    alg = ShiftAlgebra(s)
    levels = []
    for k in range(rec.k_bar - 2, -1, -1):
        part = rec.E[k].restrict(s.states)
        levels.append(first_integrals(part, s.states, max_degree))

    def rank(funcs):
        return generic_rank(ExprMatrix.jacobian(funcs, s.states)) if funcs else 0

    attempts = 0
    last_error = None

    def search(level, picks, closure):
        nonlocal attempts, last_error
        if len(picks) == s.m:
            attempts += 1
            cand = FlatOutputCandidate(tuple(picks))
            try:
                return cand, verify_flat_output(s, cand, max_back=0)
            except VerificationFailed as exc:
                last_error = exc
                return None
        if level == len(levels) or attempts >= max_attempts:
            return None
        base = rank(closure)
        options = [phi for phi in levels[level] if rank(closure + [phi]) > base]
        for phi in options:
            found = search(level, picks + [phi], closure + _state_shifts(alg, phi))
            if found or attempts >= max_attempts:
                return found
        return search(level + 1, picks, closure)

    found = search(0, [], [])
    if found is None:
        detail = f" (last failure: {last_error})" if last_error else ""
        raise DerivationFailed(f"no certified flat output with polynomial degree <= {max_degree}{detail}")
    return found

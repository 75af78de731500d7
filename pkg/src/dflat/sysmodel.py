"""Discrete-time systems ``x+ = f(x, u)`` with an extension ``zeta = g(x, u)``.

The extended map ``(x, u) -> (x+, zeta)`` is a local diffeomorphism once
``g`` is chosen; its inverse ``(x+, zeta) -> (x, u)`` defines the
associated (time-mirrored) system ``z+ = psi_x(z, v)``, ``eta = psi_u(z, v)``.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .exprcore import (
    EliminationStuck,
    ExprMatrix,
    InconsistentEquations,
    RationalExpr,
    Var,
    generic_rank,
    parse_expr,
    triangular_solve,
)


class InvalidSystem(ValueError):
    """Base class for invalid system definitions."""


class SchemaError(InvalidSystem):
    pass


class RankError(InvalidSystem):
    """A rank condition of the system class is violated.

    ``condition`` is one of ``"input-rank"``, ``"submersivity"`` or
    ``"extension"``.
    """

    def __init__(self, condition: str, rank: int, required: int, message: str = ""):
        self.condition = condition
        self.rank = rank
        self.required = required
        super().__init__(message or f"{condition} violated: rank {rank} < {required}")


class InversionError(ValueError):
    """The extended map could not be inverted by triangular elimination."""


@dataclass(frozen=True)
class InverseMap:
    """``x = psi_x(x+, zeta)``, ``u = psi_u(x+, zeta)``."""

    xplus: tuple
    zeta: tuple
    psi_x: tuple
    psi_u: tuple


@dataclass(frozen=True)
class SystemModel:
    name: str
    states: tuple
    inputs: tuple
    f: tuple
    g: Optional[tuple] = None
    inverse: Optional[InverseMap] = None
    zeta: tuple = ()

    def __post_init__(self):
        if not self.zeta:
            object.__setattr__(self, "zeta", tuple(Var(f"zeta{j + 1}") for j in range(len(self.inputs))))

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def m(self) -> int:
        return len(self.inputs)

    @property
    def coords(self) -> tuple:
        return self.states + self.inputs

    @property
    def xplus(self) -> tuple:
        if self.inverse is not None:
            return self.inverse.xplus
        return tuple(x.shifted(1) for x in self.states)

    def jacobian(self) -> ExprMatrix:
        """``d f / d(x, u)``, an n x (n+m) matrix."""
        return ExprMatrix.jacobian(self.f, self.coords)

    def extended_jacobian(self) -> ExprMatrix:
        if self.g is None:
            raise ValueError("system has no extension g")
        return ExprMatrix.jacobian(self.f + self.g, self.coords)

    def with_extension(self) -> "SystemModel":
        """This system with ``g`` chosen and the inverse computed if missing."""
        s = self
        if s.g is None:
            s = replace(s, g=choose_extension(s))
        if s.inverse is None:
            s = replace(s, inverse=invert_extended_map(s))
        return s

    def transition(self, state, inp) -> tuple:
        point = dict(zip(self.states, state))
        point.update(zip(self.inputs, inp))
        return tuple(e.evaluate(point) for e in self.f)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "states": [str(v) for v in self.states],
            "inputs": [str(v) for v in self.inputs],
            "f": [str(e) for e in self.f],
        }
        if self.g is not None:
            d["g"] = [str(e) for e in self.g]
            d["zeta"] = [str(v) for v in self.zeta]
        if self.inverse is not None:
            d["inverse"] = {
                "psi_x": [str(e) for e in self.inverse.psi_x],
                "psi_u": [str(e) for e in self.inverse.psi_u],
                "xplus": [str(v) for v in self.inverse.xplus],
                "zeta": [str(v) for v in self.inverse.zeta],
            }
        return d


def _names(raw, key) -> tuple:
    if not isinstance(raw, list) or not all(isinstance(s, str) for s in raw):
        raise SchemaError(f"'{key}' must be a list of strings")
    try:
        out = tuple(Var.parse(s) for s in raw)
    except ValueError as exc:
        raise SchemaError(f"'{key}': {exc}") from None
    return out


def _exprs(raw, key, vocab) -> tuple:
    if not isinstance(raw, list) or not all(isinstance(s, str) for s in raw):
        raise SchemaError(f"'{key}' must be a list of expression strings")
    out = []
    for i, text in enumerate(raw):
        try:
            out.append(parse_expr(text, vocab))
        except ValueError as exc:
            raise SchemaError(f"'{key}'[{i}]: {exc}") from None
    return tuple(out)


def system_from_dict(d: dict, validate: bool = True) -> SystemModel:
    if not isinstance(d, dict):
        raise SchemaError("system file must contain a JSON object")
    for key in ("states", "inputs", "f"):
        if key not in d:
            raise SchemaError(f"missing key '{key}'")
    unknown = set(d) - {"name", "states", "inputs", "f", "g", "inverse", "zeta"}
    if unknown:
        raise SchemaError("unknown keys: " + ", ".join(sorted(unknown)))
    states = _names(d["states"], "states")
    inputs = _names(d["inputs"], "inputs")
    if any(v.shift for v in states + inputs):
        raise SchemaError("state and input names must not carry a shift")
    if len(set(states + inputs)) != len(states) + len(inputs):
        raise SchemaError("state and input names must be distinct")
    if not states or not inputs:
        raise SchemaError("need at least one state and one input")
    vocab = set(states + inputs)
    f = _exprs(d["f"], "f", vocab)
    if len(f) != len(states):
        raise SchemaError(f"'f' has {len(f)} entries, expected {len(states)}")
    g = None
    if d.get("g") is not None:
        g = _exprs(d["g"], "g", vocab)
        if len(g) != len(inputs):
            raise SchemaError(f"'g' has {len(g)} entries, expected {len(inputs)}")
    zeta = ()
    if d.get("zeta") is not None:
        zeta = _names(d["zeta"], "zeta")
    inverse = None
    if d.get("inverse") is not None:
        inv = d["inverse"]
        if g is None:
            raise SchemaError("'inverse' requires the extension 'g' it inverts")
        if not isinstance(inv, dict):
            raise SchemaError("'inverse' must be an object")
        for key in ("psi_x", "psi_u", "xplus", "zeta"):
            if key not in inv:
                raise SchemaError(f"'inverse' is missing '{key}'")
        xplus = _names(inv["xplus"], "inverse.xplus")
        inv_zeta = _names(inv["zeta"], "inverse.zeta")
        if len(xplus) != len(states) or len(inv_zeta) != len(inputs):
            raise SchemaError("'inverse' name lists have the wrong length")
        if zeta and tuple(zeta) != inv_zeta:
            raise SchemaError("'zeta' and 'inverse.zeta' disagree")
        zeta = inv_zeta
        ivocab = set(xplus + inv_zeta)
        psi_x = _exprs(inv["psi_x"], "inverse.psi_x", ivocab)
        psi_u = _exprs(inv["psi_u"], "inverse.psi_u", ivocab)
        if len(psi_x) != len(states) or len(psi_u) != len(inputs):
            raise SchemaError("'inverse' expression lists have the wrong length")
        # store the inverse over the canonical x@1 names
        canon = {xp: x.shifted(1) for xp, x in zip(xplus, states)}
        inverse = InverseMap(
            tuple(x.shifted(1) for x in states),
            inv_zeta,
            tuple(e.rename(canon) for e in psi_x),
            tuple(e.rename(canon) for e in psi_u),
        )
    if zeta and len(zeta) != len(inputs):
        raise SchemaError("'zeta' must have one name per input")
    name = d.get("name", "system")
    if not isinstance(name, str):
        raise SchemaError("'name' must be a string")
    s = SystemModel(name=name, states=states, inputs=inputs, f=f, g=g, inverse=inverse, zeta=tuple(zeta))
    if set(s.zeta) & vocab:
        raise SchemaError("extension names clash with state or input names")
    if validate:
        validate_system(s)
    return s


def load_system(source, validate: bool = True) -> SystemModel:
    """Load a system from a path, JSON text, or an already-decoded dict."""
    if isinstance(source, dict):
        return system_from_dict(source, validate)
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    d = json.loads(text)
    return system_from_dict(d, validate)


def validate_system(s: SystemModel) -> None:
    """Check the rank conditions; raises :class:`RankError`."""
    coords = set(s.coords)
    for e in s.f + (s.g or ()):
        if any(v not in coords for v in e.variables):
            raise SchemaError("f and g may depend on shift-0 states and inputs only")
    r_u = generic_rank(ExprMatrix.jacobian(s.f, s.inputs))
    if r_u < s.m:
        raise RankError(
            "input-rank", r_u, s.m, f"inputs are not independent: rank d_u f = {r_u} < m = {s.m}"
        )
    r = generic_rank(s.jacobian())
    if r < s.n:
        raise RankError("submersivity", r, s.n, f"submersivity violated: rank d_(x,u) f = {r} < n = {s.n}")
    if s.g is not None:
        r_ext = generic_rank(s.extended_jacobian())
        if r_ext < s.n + s.m:
            raise RankError(
                "extension",
                r_ext,
                s.n + s.m,
                f"extended map is singular: rank d(f,g) = {r_ext} < n+m = {s.n + s.m}",
            )
    if s.inverse is not None:
        check_inverse(s, s.inverse)


def choose_extension(s: SystemModel, seed: int = 0) -> tuple:
    """Pick ``g`` among the coordinate functions, states first.

    A coordinate is taken whenever it raises the rank of the stacked
    Jacobian.  Falls back to random rational combinations of coordinates.
    """
    if s.g is not None:
        return s.g
    rows = list(s.jacobian().rows)
    rank = generic_rank(ExprMatrix(rows, s.n + s.m))
    chosen = []
    for j, c in enumerate(s.coords):
        if len(chosen) == s.m:
            break
        unit = [RationalExpr.const(1 if i == j else 0) for i in range(s.n + s.m)]
        r = generic_rank(ExprMatrix(rows + [unit], s.n + s.m))
        if r > rank:
            rows.append(unit)
            rank = r
            chosen.append(RationalExpr.var(c))
    if len(chosen) == s.m:
        return tuple(chosen)
    rng = random.Random(seed)
    for _ in range(20):
        cand = list(chosen)
        trial_rows = list(rows)
        while len(cand) < s.m:
            coeffs = [Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for _ in s.coords]
            trial_rows.append([RationalExpr.const(c) for c in coeffs])
            cand.append(sum((c * RationalExpr.var(v) for c, v in zip(coeffs, s.coords)), RationalExpr.const(0)))
        if generic_rank(ExprMatrix(trial_rows, s.n + s.m)) == s.n + s.m:
            return tuple(cand)
    raise RankError("extension", rank, s.n + s.m, "no extension g makes (f, g) nonsingular")


def _default_xplus(s: SystemModel) -> tuple:
    return tuple(x.shifted(1) for x in s.states)


def check_inverse(s: SystemModel, inv: InverseMap) -> None:
    """Verify both composition identities; raises :class:`InversionError`."""
    if s.g is None:
        raise ValueError("system has no extension g")
    fwd = dict(zip(inv.xplus, s.f))
    fwd.update(zip(inv.zeta, s.g))
    for x, e in zip(s.coords, inv.psi_x + inv.psi_u):
        if e.substitute(fwd) != RationalExpr.var(x):
            raise InversionError(f"psi(f, g) does not return {x}")
    back = dict(zip(s.states, inv.psi_x))
    back.update(zip(s.inputs, inv.psi_u))
    for y, e in zip(inv.xplus + inv.zeta, s.f + s.g):
        if e.substitute(back) != RationalExpr.var(y):
            raise InversionError(f"(f, g)(psi) does not return {y}")


def invert_extended_map(s: SystemModel, xplus: Optional[Sequence[Var]] = None) -> InverseMap:
    """Invert ``(x, u) -> (f, g)`` by triangular elimination; result verified."""
    if s.inverse is not None:
        check_inverse(s, s.inverse)
        return s.inverse
    g = s.g if s.g is not None else choose_extension(s)
    if s.g is None:
        s = replace(s, g=g)
    xplus = tuple(xplus) if xplus is not None else _default_xplus(s)
    eqs = [RationalExpr.var(xp) - fx for xp, fx in zip(xplus, s.f)]
    eqs += [RationalExpr.var(z) - gz for z, gz in zip(s.zeta, g)]
    try:
        sol = triangular_solve(eqs, s.coords).solved
    except (EliminationStuck, InconsistentEquations) as exc:
        raise InversionError(f"extended map not invertible by elimination: {exc}") from None
    inv = InverseMap(
        xplus=xplus,
        zeta=s.zeta,
        psi_x=tuple(sol[x] for x in s.states),
        psi_u=tuple(sol[u] for u in s.inputs),
    )
    check_inverse(s, inv)
    return inv


def _fresh(prefix: str, k: int) -> tuple:
    return tuple(Var(f"{prefix}{i + 1}") for i in range(k))


def build_associated(
    s: SystemModel,
    states: Optional[Sequence] = None,
    inputs: Optional[Sequence] = None,
    extension: Optional[Sequence] = None,
    name: Optional[str] = None,
) -> SystemModel:
    """The associated system ``z+ = psi_x(z, v)``, ``eta = psi_u(z, v)``.

    Default names are ``z1..zn``, ``v1..vm`` and ``eta1..etam``.  Its inverse
    is ``(f, g)`` renamed, so applying this twice with the original names
    returns the original system.
    """
    s = s.with_extension()
    inv = s.inverse
    z = tuple(Var(v) if isinstance(v, str) else v for v in states) if states else _fresh("z", s.n)
    v = tuple(Var(w) if isinstance(w, str) else w for w in inputs) if inputs else _fresh("v", s.m)
    eta = (
        tuple(w.name if isinstance(w, Var) else w for w in extension)
        if extension
        else tuple(f"eta{j + 1}" for j in range(s.m))
    )
    to_zv = {xp: zi for xp, zi in zip(inv.xplus, z)}
    to_zv.update({zt: vi for zt, vi in zip(inv.zeta, v)})
    f_new = tuple(e.rename(to_zv) for e in inv.psi_x)
    g_new = tuple(e.rename(to_zv) for e in inv.psi_u)
    zplus = tuple(zi.shifted(1) for zi in z)
    eta_vars = tuple(Var(nm) for nm in eta)
    back = {x: zp for x, zp in zip(s.states, zplus)}
    back.update({u: e for u, e in zip(s.inputs, eta_vars)})
    new_inv = InverseMap(
        xplus=zplus,
        zeta=eta_vars,
        psi_x=tuple(e.rename(back) for e in s.f),
        psi_u=tuple(e.rename(back) for e in s.g),
    )
    assoc = SystemModel(
        name=name or f"{s.name}-associated",
        states=z,
        inputs=v,
        f=f_new,
        g=g_new,
        inverse=new_inv,
        zeta=eta_vars,
    )
    validate_system(assoc)
    return assoc


def rename_system(s: SystemModel, states=None, inputs=None, zeta=None) -> SystemModel:
    """Rename states, inputs and extension names consistently."""
    mapping = {}
    new_states = tuple(Var(x) if isinstance(x, str) else x for x in states) if states else s.states
    new_inputs = tuple(Var(x) if isinstance(x, str) else x for x in inputs) if inputs else s.inputs
    new_zeta = tuple(Var(x) if isinstance(x, str) else x for x in zeta) if zeta else s.zeta
    mapping.update(zip(s.states, new_states))
    mapping.update(zip(s.inputs, new_inputs))
    f = tuple(e.rename(mapping) for e in s.f)
    g = None if s.g is None else tuple(e.rename(mapping) for e in s.g)
    inverse = None
    if s.inverse is not None:
        imap = {xp: x.shifted(1) for xp, x in zip(s.inverse.xplus, new_states)}
        imap.update(zip(s.inverse.zeta, new_zeta))
        inverse = InverseMap(
            xplus=tuple(x.shifted(1) for x in new_states),
            zeta=new_zeta,
            psi_x=tuple(e.rename(imap) for e in s.inverse.psi_x),
            psi_u=tuple(e.rename(imap) for e in s.inverse.psi_u),
        )
    return SystemModel(s.name, new_states, new_inputs, f, g, inverse, new_zeta)

"""Exact rational functions over QQ in shift-indexed variables.

A :class:`RationalExpr` is stored as a reduced numerator/denominator pair of
sparse polynomials living in a ring whose generators are exactly the
variables that occur.  The denominator is normalized to have leading
coefficient 1 under graded-lex order, so two expressions are equal iff their
stored data are equal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, total_ordering
from typing import Iterable, Mapping, Union

import sympy
from sympy import QQ
from sympy.polys.rings import PolyRing

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

Number = Union[int, Fraction]


@total_ordering
@dataclass(frozen=True)
class Var:
    """A system variable ``name`` shifted ``shift`` steps in time."""

    name: str
    shift: int = 0

    def __post_init__(self):
        if not isinstance(self.name, str) or not _IDENT.match(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")
        if not isinstance(self.shift, int) or isinstance(self.shift, bool):
            raise TypeError("shift must be an int")

    def __lt__(self, other):
        if not isinstance(other, Var):
            return NotImplemented
        return (self.name, self.shift) < (other.name, other.shift)

    def __str__(self):
        return self.name if self.shift == 0 else f"{self.name}@{self.shift}"

    def __repr__(self):
        return f"Var({str(self)!r})"

    def shifted(self, k: int) -> "Var":
        return Var(self.name, self.shift + k)

    def at(self, shift: int) -> "Var":
        return Var(self.name, shift)

    @property
    def symbol(self) -> sympy.Symbol:
        return _symbol(self)

    @classmethod
    def parse(cls, text: str) -> "Var":
        """Parse ``name`` or ``name@k``."""
        name, sep, shift = text.strip().partition("@")
        return cls(name.strip(), int(shift) if sep else 0)


@lru_cache(maxsize=None)
def _symbol(v: Var) -> sympy.Symbol:
    return sympy.Symbol(str(v))


@lru_cache(maxsize=4096)
def _ring(gens: tuple) -> PolyRing:
    return PolyRing(tuple(v.symbol for v in gens), QQ, "grlex")


def _to_fraction(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


def _coerce_number(c) -> Fraction:
    if isinstance(c, bool):
        raise TypeError("bool is not a number")
    if isinstance(c, (int, Fraction)):
        return Fraction(c)
    if hasattr(c, "numerator") and hasattr(c, "denominator"):
        return Fraction(int(c.numerator), int(c.denominator))
    raise TypeError(f"cannot convert {type(c).__name__} to a rational number")


class RationalExpr:
    """Immutable reduced quotient of two polynomials over QQ.

    Build instances with :meth:`const`, :meth:`var` or arithmetic; the raw
    constructor expects already-reduced data and is internal.
    """

    __slots__ = ("_gens", "_num", "_den", "_hash")

    def __init__(self, gens: tuple, num, den):
        self._gens = gens
        self._num = num
        self._den = den
        self._hash = None

    # -- construction -------------------------------------------------

    @classmethod
    def const(cls, c: Number) -> "RationalExpr":
        c = _coerce_number(c)
        R = _ring(())
        return cls((), R(QQ(c.numerator, c.denominator)), R.one)

    @classmethod
    def var(cls, v: Var) -> "RationalExpr":
        R = _ring((v,))
        return cls((v,), R.gens[0], R.one)

    @classmethod
    def coerce(cls, other) -> "RationalExpr":
        if isinstance(other, RationalExpr):
            return other
        if isinstance(other, Var):
            return cls.var(other)
        return cls.const(other)

    @classmethod
    def _build(cls, gens: tuple, num, den) -> "RationalExpr":
        if den.is_zero:
            raise ZeroDivisionError("denominator is identically zero")
        if num.is_zero:
            return ZERO
        num, den = num.cancel(den)
        lc = den.LC
        if lc != 1:
            num = num.quo_ground(lc)
            den = den.quo_ground(lc)
        # drop generators that no longer occur
        used = [i for i, (a, b) in enumerate(zip(num.degrees(), den.degrees())) if a > 0 or b > 0]
        if len(used) != len(gens):
            new_gens = tuple(gens[i] for i in used)
            R = _ring(new_gens)
            num = num.set_ring(R)
            den = den.set_ring(R)
            gens = new_gens
        return cls(gens, num, den)

    # -- inspection -----------------------------------------------------

    @property
    def variables(self) -> tuple:
        """Sorted tuple of the variables that occur."""
        return self._gens

    def free_of(self, vs: Iterable[Var]) -> bool:
        vs = set(vs)
        return not any(g in vs for g in self._gens)

    def is_zero(self) -> bool:
        return self._num.is_zero

    def is_constant(self) -> bool:
        return not self._gens

    def is_polynomial(self) -> bool:
        return self._den == 1

    def constant_value(self) -> Fraction:
        if self._gens:
            raise ValueError(f"{self} is not constant")
        return _to_fraction(self._num.LC) if not self._num.is_zero else Fraction(0)

    @property
    def numerator(self) -> "RationalExpr":
        return RationalExpr._build(self._gens, self._num, _ring(self._gens).one)

    @property
    def denominator(self) -> "RationalExpr":
        return RationalExpr._build(self._gens, self._den, _ring(self._gens).one)

    def total_degree(self) -> int:
        """Max total degree of numerator and denominator."""
        def deg(p):
            return max((sum(m) for m in p.monoms()), default=0)
        return max(deg(self._num), deg(self._den))

    def size(self) -> int:
        """Number of terms, a rough complexity measure."""
        return len(self._num) + len(self._den)

    def terms(self):
        """Numerator terms as ``(coefficient, {Var: exponent})`` in grlex order."""
        for monom, c in self._num.terms():
            yield _to_fraction(c), {g: e for g, e in zip(self._gens, monom) if e}

    def linear_split(self, v: Var):
        """Return ``(a, b)`` with numerator == a*v + b, or None if not linear in v.

        ``a`` and ``b`` are polynomials free of ``v``.
        """
        if v not in self._gens:
            return None
        R = _ring(self._gens)
        i = self._gens.index(v)
        x = R.gens[i]
        if self._num.degree(x) != 1:
            return None
        a = self._num.coeff_wrt(x, 1)
        b = self._num.coeff_wrt(x, 0)
        one = R.one
        return RationalExpr._build(self._gens, a, one), RationalExpr._build(self._gens, b, one)

    # -- arithmetic ----------------------------------------------------------

    def _unify(self, other: "RationalExpr"):
        if self._gens == other._gens:
            return self._gens, self._num, self._den, other._num, other._den
        gens = tuple(sorted(set(self._gens) | set(other._gens)))
        R = _ring(gens)
        return (
            gens,
            self._num.set_ring(R),
            self._den.set_ring(R),
            other._num.set_ring(R),
            other._den.set_ring(R),
        )

    def __add__(self, other):
        try:
            other = RationalExpr.coerce(other)
        except TypeError:
            return NotImplemented
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        gens, a, b, c, d = self._unify(other)
        if b == d:
            return RationalExpr._build(gens, a + c, b)
        return RationalExpr._build(gens, a * d + c * b, b * d)

    __radd__ = __add__

    def __neg__(self):
        return RationalExpr(self._gens, -self._num, self._den)

    def __pos__(self):
        return self

    def __sub__(self, other):
        try:
            other = RationalExpr.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return RationalExpr.coerce(other) - self

    def __mul__(self, other):
        try:
            other = RationalExpr.coerce(other)
        except TypeError:
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return ZERO
        gens, a, b, c, d = self._unify(other)
        return RationalExpr._build(gens, a * c, b * d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            other = RationalExpr.coerce(other)
        except TypeError:
            return NotImplemented
        if other.is_zero():
            raise ZeroDivisionError("division by an identically zero expression")
        gens, a, b, c, d = self._unify(other)
        return RationalExpr._build(gens, a * d, b * c)

    def __rtruediv__(self, other):
        return RationalExpr.coerce(other) / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return (ONE / self) ** (-k)
        return RationalExpr(self._gens, self._num**k, self._den**k) if k else ONE

    # -- equality ------------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, RationalExpr):
            try:
                other = RationalExpr.coerce(other)
            except TypeError:
                return NotImplemented
        return self._gens == other._gens and self._num == other._num and self._den == other._den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._gens, frozenset(self._num.items()), frozenset(self._den.items())))
        return self._hash

    # -- calculus and substitution -------------------------------------

    def diff(self, v: Var) -> "RationalExpr":
        if v not in self._gens:
            return ZERO
        x = _ring(self._gens).gens[self._gens.index(v)]
        n, d = self._num, self._den
        if d == 1:
            return RationalExpr._build(self._gens, n.diff(x), d)
        return RationalExpr._build(self._gens, n.diff(x) * d - n * d.diff(x), d * d)

    def substitute(self, bindings: Mapping[Var, object]) -> "RationalExpr":
        """Simultaneous substitution of variables by expressions or numbers."""
        hit = [g for g in self._gens if g in bindings]
        if not hit:
            return self
        images = {g: RationalExpr.coerce(bindings[g]) for g in hit}
        num = _poly_substitute(self._gens, self._num, images)
        den = _poly_substitute(self._gens, self._den, images)
        if den.is_zero():
            raise ZeroDivisionError(f"substitution makes the denominator of {self} vanish")
        return num / den

    def rename(self, mapping: Mapping[Var, Var]) -> "RationalExpr":
        """Substitute variables by variables."""
        return self.substitute({k: RationalExpr.var(v) for k, v in mapping.items()})

    def evaluate(self, point: Mapping[Var, Number]) -> Fraction:
        """Exact value at a rational point; every variable must be bound."""
        vals = []
        for g in self._gens:
            try:
                vals.append(_coerce_number(point[g]))
            except KeyError:
                raise KeyError(f"no value for variable {g}") from None
        den = _poly_eval(self._den, vals)
        if den == 0:
            raise ZeroDivisionError(f"denominator of {self} vanishes at the given point")
        return _poly_eval(self._num, vals) / den

    # -- printing ---------------------------------------------------------------

    def __str__(self):
        num = _poly_str(self._gens, self._num)
        if self._den == 1:
            return num
        den = _poly_str(self._gens, self._den)
        if len(self._num) > 1:
            num = f"({num})"
        if len(self._den) > 1 or not _is_monomial_with_unit(self._den):
            den = f"({den})"
        return f"{num}/{den}"

    def __repr__(self):
        return f"RationalExpr({str(self)!r})"

    def to_sympy(self):
        """The expression as a sympy object (for display only)."""
        return self._num.as_expr() / self._den.as_expr()


def _is_monomial_with_unit(p) -> bool:
    # a power of one generator: safe to print after '/' without parentheses
    if len(p) != 1 or p.LC != 1:
        return False
    (monom,) = p.monoms()
    return sum(1 for e in monom if e) == 1


def _poly_eval(p, vals) -> Fraction:
    total = Fraction(0)
    for monom, c in p.terms():
        t = _to_fraction(c)
        for x, e in zip(vals, monom):
            if e:
                t *= x**e
        total += t
    return total


def _poly_substitute(gens, p, images) -> RationalExpr:
    # Clear the images' denominators up front so the sum stays polynomial:
    # p(a/b) = sum c * prod a^e b^(D-e) / prod b^D with D the degree in g.
    keep = [g for g in gens if g not in images]
    union = set(keep)
    for img in images.values():
        union.update(img._gens)
    U = tuple(sorted(union))
    R = _ring(U)
    degs = p.degrees()
    cache: dict = {}

    def factor(i, g, e):
        key = (i, e)
        if key not in cache:
            if g in images:
                img = images[g]
                a = img._num.set_ring(R)
                b = img._den.set_ring(R)
                cache[key] = a**e * b ** (degs[i] - e)
            else:
                cache[key] = R.gens[U.index(g)] ** e
        return cache[key]

    num = R.zero
    for monom, c in p.terms():
        t = R(c)
        for i, (g, e) in enumerate(zip(gens, monom)):
            if e or g in images:
                t = t * factor(i, g, e)
        num += t
    den = R.one
    for i, g in enumerate(gens):
        if g in images and degs[i]:
            den = den * images[g]._den.set_ring(R) ** degs[i]
    return RationalExpr._build(U, num, den)


def _format_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _poly_str(gens, p) -> str:
    if p.is_zero:
        return "0"
    parts = []
    for monom, c in p.terms():
        c = _to_fraction(c)
        factors = []
        for g, e in zip(gens, monom):
            if e == 1:
                factors.append(str(g))
            elif e > 1:
                factors.append(f"{g}^{e}")
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if not factors:
            body = _format_coeff(a)
        elif a == 1:
            body = "*".join(factors)
        else:
            body = _format_coeff(a) + "*" + "*".join(factors)
        parts.append((sign, body))
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


ZERO = RationalExpr((), _ring(()).zero, _ring(()).one)
ONE = RationalExpr((), _ring(()).one, _ring(()).one)


def const(c: Number) -> RationalExpr:
    return RationalExpr.const(c)


def var(v) -> RationalExpr:
    """Expression for a variable given as :class:`Var` or ``"name@k"`` text."""
    return RationalExpr.var(v if isinstance(v, Var) else Var.parse(v))


def diff(e: RationalExpr, v: Var) -> RationalExpr:
    return e.diff(v)


def substitute(e: RationalExpr, bindings: Mapping[Var, object]) -> RationalExpr:
    return e.substitute(bindings)


def is_zero(e: RationalExpr) -> bool:
    return RationalExpr.coerce(e).is_zero()


def variables_of(exprs: Iterable[RationalExpr]) -> set:
    out = set()
    for e in exprs:
        out.update(e.variables)
    return out

"""Vector fields, distributions, and the geometric forward-flatness test.

Distributions are kept in a normal form: the reduced row echelon form of
their basis (one row per vector field, columns in chart order).  Because
that form depends only on the span, a pushforward is well defined exactly
when the echelon basis of ``f_*(D)``, written in ``(x+, zeta)``, does not
involve ``zeta``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .exprcore import ONE, ZERO, ExprMatrix, RationalExpr, Var, generic_rank, nullspace, row_space_basis
from .sysmodel import SystemModel

log = logging.getLogger(__name__)


class ChartMismatch(ValueError):
    pass


class NotProjectable(ValueError):
    """The pushforward of a distribution depends on the fiber coordinates."""


@dataclass(frozen=True)
class VectorField:
    chart: tuple
    coeffs: tuple

    def __post_init__(self):
        if len(self.chart) != len(self.coeffs):
            raise ValueError("one coefficient per chart coordinate required")

    @classmethod
    def coordinate(cls, chart: Sequence[Var], v: Var) -> "VectorField":
        """The field ``d/dv``."""
        chart = tuple(chart)
        return cls(chart, tuple(ONE if c == v else ZERO for c in chart))

    def apply(self, phi: RationalExpr) -> RationalExpr:
        """Directional derivative ``v(phi)``."""
        acc = ZERO
        for c, a in zip(self.chart, self.coeffs):
            if not a.is_zero():
                d = phi.diff(c)
                if not d.is_zero():
                    acc = acc + a * d
        return acc

    def is_zero(self) -> bool:
        return all(a.is_zero() for a in self.coeffs)

    def __str__(self):
        parts = []
        for c, a in zip(self.chart, self.coeffs):
            if a.is_zero():
                continue
            if a == ONE:
                parts.append(f"d/d{c}")
            else:
                parts.append(f"({a})*d/d{c}")
        return " + ".join(parts) if parts else "0"


def lie_bracket(a: VectorField, b: VectorField) -> VectorField:
    """``[a, b]^i = a(b^i) - b(a^i)``."""
    if a.chart != b.chart:
        raise ChartMismatch("vector fields live on different charts")
    return VectorField(a.chart, tuple(a.apply(bi) - b.apply(ai) for ai, bi in zip(a.coeffs, b.coeffs)))


@dataclass(frozen=True)
class Distribution:
    """Span of vector fields on ``chart``, stored in echelon normal form."""

    chart: tuple
    rows: tuple = ()

    @classmethod
    def span(cls, chart: Sequence[Var], vectors) -> "Distribution":
        chart = tuple(chart)
        vecs = []
        for v in vectors:
            coeffs = v.coeffs if isinstance(v, VectorField) else tuple(v)
            if isinstance(v, VectorField) and v.chart != chart:
                raise ChartMismatch("vector field chart differs from distribution chart")
            vecs.append(tuple(RationalExpr.coerce(c) for c in coeffs))
        return cls(chart, tuple(tuple(r) for r in row_space_basis(vecs, len(chart))))

    @classmethod
    def coordinate_span(cls, chart: Sequence[Var], coords: Sequence[Var]) -> "Distribution":
        chart = tuple(chart)
        return cls.span(chart, [VectorField.coordinate(chart, c) for c in coords])

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def basis(self) -> tuple:
        return tuple(VectorField(self.chart, r) for r in self.rows)

    def contains(self, v) -> bool:
        coeffs = v.coeffs if isinstance(v, VectorField) else tuple(v)
        if all(c.is_zero() for c in coeffs):
            return True
        if not self.rows:
            return False
        return generic_rank(ExprMatrix(self.rows + (tuple(coeffs),), len(self.chart))) == self.dim

    def issubset(self, other: "Distribution") -> bool:
        if self.chart != other.chart:
            raise ChartMismatch("distributions live on different charts")
        return all(other.contains(r) for r in self.rows)

    def __le__(self, other):
        return self.issubset(other)

    def plus(self, other: "Distribution") -> "Distribution":
        if self.chart != other.chart:
            raise ChartMismatch("distributions live on different charts")
        return Distribution.span(self.chart, self.rows + other.rows)

    def is_involutive(self) -> bool:
        b = self.basis
        for i in range(len(b)):
            for j in range(i + 1, len(b)):
                if not self.contains(lie_bracket(b[i], b[j])):
                    return False
        return True

    def restrict(self, coords: Sequence[Var]) -> "Distribution":
        """Components along ``coords`` of the fields whose other components vanish.

        For a distribution that contains every ``d/dc`` with ``c`` outside
        ``coords`` this is its part tangent to ``coords``.
        """
        idx = [self.chart.index(c) for c in coords]
        keep = [tuple(r[i] for i in idx) for r in self.rows if any(not r[i].is_zero() for i in idx)]
        return Distribution.span(tuple(coords), keep)

    def to_strings(self) -> list:
        return [str(v) for v in self.basis]

    def __str__(self):
        return "span{" + ", ".join(self.to_strings()) + "}"


def kernel_distribution(s: SystemModel) -> Distribution:
    """``ker f_*``: fields ``v`` on ``(x, u)`` with ``(df) v = 0``."""
    return Distribution.span(s.coords, nullspace(s.jacobian()))


def pushforward_distribution(s: SystemModel, D: Distribution) -> Distribution:
    """``f_*(D)`` as a distribution on the ``x+`` chart.

    Raises :class:`NotProjectable` when the echelon basis of the image,
    expressed in ``(x+, zeta)``, depends on ``zeta``.
    """
    if D.chart != s.coords:
        raise ChartMismatch("distribution must live on the (x, u) chart")
    s = s.with_extension()
    inv = s.inverse
    J = s.jacobian()
    to_plus = dict(zip(s.states, inv.psi_x))
    to_plus.update(zip(s.inputs, inv.psi_u))
    images = []
    for r in D.rows:
        w = J.matvec(r)
        images.append(tuple(e.substitute(to_plus) for e in w))
    out = Distribution.span(inv.xplus, images)
    zeta = set(inv.zeta)
    for r in out.rows:
        for e in r:
            if not e.free_of(zeta):
                raise NotProjectable(f"pushforward depends on {', '.join(str(z) for z in zeta)}: {e}")
    return out


def _annihilator(rows, ncols) -> list:
    """Covectors vanishing on every row."""
    if not rows:
        return [tuple(ONE if i == j else ZERO for j in range(ncols)) for i in range(ncols)]
    return nullspace(ExprMatrix(rows, ncols))


def _dot(a, b) -> RationalExpr:
    acc = ZERO
    for x, y in zip(a, b):
        if not x.is_zero() and not y.is_zero():
            acc = acc + x * y
    return acc


def largest_projectable_subdistribution(
    s: SystemModel, E: Distribution, V: Optional[Distribution] = None
) -> Distribution:
    """Largest ``D`` inside ``E`` reached by the iteration

    ``D^{j+1} = {v in D^j : [w, v] in D^j + V for all w in V}``

    with ``V = ker f_*``, certified projectable by a direct pushforward.
    """
    if V is None:
        V = kernel_distribution(s)
    D = E
    ncols = len(E.chart)
    while D.dim:
        basis = D.basis
        ann = _annihilator(D.rows + V.rows, ncols)
        if not ann:
            break
        # [w, sum c_i e_i] = sum c_i [w, e_i] mod D, so the condition is linear in c
        conditions = []
        for w in V.basis:
            brackets = [lie_bracket(w, e).coeffs for e in basis]
            for lam in ann:
                conditions.append([_dot(lam, b) for b in brackets])
        if not conditions:
            break
        coeffs = nullspace(ExprMatrix(conditions, len(basis)))
        if len(coeffs) == D.dim:
            break
        fields = []
        for c in coeffs:
            v = [ZERO] * ncols
            for ci, e in zip(c, basis):
                if ci.is_zero():
                    continue
                v = [a + ci * b for a, b in zip(v, e.coeffs)]
            fields.append(v)
        D = Distribution.span(E.chart, fields)
    # a-posteriori certificate
    pushforward_distribution(s, D)
    return D


def lift_and_extend(delta: Distribution, s: SystemModel) -> Distribution:
    """``pi_*^{-1}(delta)``: rename ``x+`` to ``x`` and add all ``d/du``."""
    s_ext = s.with_extension()
    rename = dict(zip(s_ext.xplus, s.states))
    if delta.chart != tuple(s_ext.xplus):
        raise ChartMismatch("expected a distribution on the x+ chart")
    rows = [tuple(e.rename(rename) for e in r) + (ZERO,) * s.m for r in delta.rows]
    rows += [VectorField.coordinate(s.coords, u).coeffs for u in s.inputs]
    return Distribution.span(s.coords, rows)


@dataclass
class SequenceRecord:
    """Outcome of the distribution sequence.

    ``E[k]``, ``D[k]`` and ``Delta[k]`` (``Delta[0]`` is None) are the
    computed distributions; ``k_bar`` is the stop index.  When some ``E_k``
    already has full dimension the sequence is cut there and ``E_{k+1}``
    (necessarily equal) is not listed, so ``k_bar = k + 1``.
    """

    system: SystemModel
    E: list = field(default_factory=list)
    D: list = field(default_factory=list)
    Delta: list = field(default_factory=list)
    k_bar: int = 0
    forward_flat: bool = False
    warnings: list = field(default_factory=list)

    @property
    def dims(self) -> tuple:
        return tuple(e.dim for e in self.E)

    @property
    def verdict(self) -> str:
        return "forward-flat" if self.forward_flat else "not-forward-flat"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "dims": list(self.dims),
            "k_bar": self.k_bar,
            "E": [e.to_strings() for e in self.E],
            "D": [d.to_strings() for d in self.D],
            "warnings": list(self.warnings),
        }


class SequenceError(RuntimeError):
    """An invariant of the distribution sequence failed."""


def forward_flatness_test(s: SystemModel) -> SequenceRecord:
    s = s.with_extension()
    full = s.n + s.m
    V = kernel_distribution(s)
    E = Distribution.coordinate_span(s.coords, s.inputs)
    rec = SequenceRecord(system=s, E=[E], Delta=[None])
    k = 0
    while True:
        k += 1
        if k > s.n + 2:
            raise SequenceError(f"no stop after {k - 1} steps; expected at most n+2 = {s.n + 2}")
        D = largest_projectable_subdistribution(s, E, V)
        delta = pushforward_distribution(s, D)
        E_next = lift_and_extend(delta, s)
        rec.D.append(D)
        if not E.issubset(E_next):
            raise SequenceError(f"E_{k - 1} is not contained in E_{k}")
        if E_next.dim < E.dim:
            raise SequenceError(f"dimension dropped from {E.dim} to {E_next.dim} at step {k}")
        if E_next.dim == E.dim:
            rec.E.append(E_next)
            rec.Delta.append(delta)
            rec.k_bar = k
            break
        rec.E.append(E_next)
        rec.Delta.append(delta)
        E = E_next
        if E.dim == full:
            rec.k_bar = k + 1
            break
    for i, Ek in enumerate(rec.E):
        if not Ek.is_involutive():
            msg = f"E_{i} is not involutive"
            log.warning(msg)
            rec.warnings.append(msg)
    last = rec.E[rec.k_bar - 1]
    rec.forward_flat = last.dim == full
    return rec

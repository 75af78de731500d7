"""Linear algebra over the field of rational functions.

All decisions (pivots, ranks) use exact zero tests, so a rank computed here
is the generic rank: the rank at all points outside a proper algebraic set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .expr import ONE, ZERO, RationalExpr, Var


class ExprMatrix:
    """Rectangular matrix of :class:`RationalExpr` entries (immutable)."""

    __slots__ = ("rows", "nrows", "ncols")

    def __init__(self, rows: Iterable[Iterable], ncols: Optional[int] = None):
        rows = tuple(tuple(RationalExpr.coerce(e) for e in r) for r in rows)
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged matrix")
        self.rows = rows
        self.nrows = len(rows)
        self.ncols = ncols

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "ExprMatrix":
        return cls([[ZERO] * ncols for _ in range(nrows)], ncols)

    @classmethod
    def identity(cls, n: int) -> "ExprMatrix":
        return cls([[ONE if i == j else ZERO for j in range(n)] for i in range(n)], n)

    @classmethod
    def jacobian(cls, exprs: Sequence[RationalExpr], wrt: Sequence[Var]) -> "ExprMatrix":
        return cls([[e.diff(v) for v in wrt] for e in exprs], len(wrt))

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        return isinstance(other, ExprMatrix) and self.shape == other.shape and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return f"ExprMatrix({self.nrows}x{self.ncols})"

    def __str__(self):
        return "\n".join("[" + ", ".join(str(e) for e in r) + "]" for r in self.rows)

    def column(self, j: int) -> tuple:
        return tuple(r[j] for r in self.rows)

    def columns(self, idx: Sequence[int]) -> "ExprMatrix":
        return ExprMatrix([[r[j] for j in idx] for r in self.rows], len(idx))

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "ExprMatrix":
        return ExprMatrix([[self.rows[i][j] for j in col_idx] for i in row_idx], len(col_idx))

    def transpose(self) -> "ExprMatrix":
        return ExprMatrix([self.column(j) for j in range(self.ncols)], self.nrows)

    def matvec(self, v: Sequence[RationalExpr]) -> tuple:
        if len(v) != self.ncols:
            raise ValueError("shape mismatch")
        out = []
        for r in self.rows:
            acc = ZERO
            for a, b in zip(r, v):
                if not a.is_zero() and not b.is_zero():
                    acc = acc + a * b
            out.append(acc)
        return tuple(out)

    def __matmul__(self, other: "ExprMatrix") -> "ExprMatrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        cols = [other.column(j) for j in range(other.ncols)]
        return ExprMatrix([[sum_products(r, c) for c in cols] for r in self.rows], other.ncols)

    def map(self, fn) -> "ExprMatrix":
        return ExprMatrix([[fn(e) for e in r] for r in self.rows], self.ncols)

    def is_zero(self) -> bool:
        return all(e.is_zero() for r in self.rows for e in r)

    def evaluate(self, point) -> list:
        return [[e.evaluate(point) for e in r] for r in self.rows]


def sum_products(a, b) -> RationalExpr:
    acc = ZERO
    for x, y in zip(a, b):
        if not x.is_zero() and not y.is_zero():
            acc = acc + x * y
    return acc


def _pivot_row(rows, col, start):
    # prefer constant pivots, then the smallest entry, to limit expression growth
    best = None
    for i in range(start, len(rows)):
        e = rows[i][col]
        if e.is_zero():
            continue
        key = (not e.is_constant(), e.size(), i)
        if best is None or key < best[0]:
            best = (key, i)
    return None if best is None else best[1]


def rref(M, track: bool = False):
    """Reduced row echelon form.

    Returns ``(R, pivots)``; with ``track=True`` returns ``(R, pivots, T)``
    where ``T`` is the row transform, ``T @ M == R``.  Pivot columns are the
    first admissible column scanning left to right, so ``R`` depends only on
    the row space of ``M``.
    """
    if not isinstance(M, ExprMatrix):
        M = ExprMatrix(M)
    rows = [list(r) for r in M.rows]
    ncols = M.ncols
    T = [list(r) for r in ExprMatrix.identity(M.nrows).rows] if track else None
    pivots = []
    r = 0
    for c in range(ncols):
        if r == len(rows):
            break
        p = _pivot_row(rows, c, r)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        if track:
            T[r], T[p] = T[p], T[r]
        inv = ONE / rows[r][c]
        if inv != ONE:
            rows[r] = [e * inv if not e.is_zero() else e for e in rows[r]]
            if track:
                T[r] = [e * inv if not e.is_zero() else e for e in T[r]]
        for i in range(len(rows)):
            if i == r:
                continue
            fac = rows[i][c]
            if fac.is_zero():
                continue
            rows[i] = [a - fac * b if not b.is_zero() else a for a, b in zip(rows[i], rows[r])]
            if track:
                T[i] = [a - fac * b if not b.is_zero() else a for a, b in zip(T[i], T[r])]
        pivots.append(c)
        r += 1
    R = ExprMatrix(rows, ncols)
    if track:
        return R, pivots, ExprMatrix(T, M.nrows)
    return R, pivots


def generic_rank(M) -> int:
    """Rank over the rational function field."""
    if not isinstance(M, ExprMatrix):
        M = ExprMatrix(M)
    if M.nrows == 0 or M.ncols == 0:
        return 0
    # eliminate along the shorter side
    if M.nrows > M.ncols:
        M = M.transpose()
    rows = [list(r) for r in M.rows]
    rank = 0
    for c in range(M.ncols):
        p = _pivot_row(rows, c, rank)
        if p is None:
            continue
        rows[rank], rows[p] = rows[p], rows[rank]
        piv = rows[rank][c]
        for i in range(rank + 1, len(rows)):
            fac = rows[i][c]
            if fac.is_zero():
                continue
            q = fac / piv
            rows[i] = [a - q * b if not b.is_zero() else a for a, b in zip(rows[i], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def nullspace(M) -> list:
    """Basis of ``{v : M v = 0}``; one vector per free column, in column order."""
    if not isinstance(M, ExprMatrix):
        M = ExprMatrix(M)
    R, pivots = rref(M)
    free = [j for j in range(M.ncols) if j not in pivots]
    basis = []
    for fj in free:
        v = [ZERO] * M.ncols
        v[fj] = ONE
        for i, pj in enumerate(pivots):
            v[pj] = -R[i, fj]
        basis.append(tuple(v))
    return basis


class InconsistentSystem(ValueError):
    """``M x = rhs`` has no solution; ``certificate`` is a row ``y`` with
    ``y M = 0`` and ``y rhs != 0``."""

    def __init__(self, certificate, column: int = 0):
        self.certificate = tuple(certificate)
        self.column = column
        super().__init__(f"linear system is inconsistent (rhs column {column})")


@dataclass(frozen=True)
class LinearSolution:
    """Particular solution (one column per rhs column) plus nullspace basis."""

    particular: ExprMatrix
    nullspace: tuple


def solve_linear(M, rhs) -> LinearSolution:
    """Solve ``M X = rhs`` over the function field."""
    if not isinstance(M, ExprMatrix):
        M = ExprMatrix(M)
    if not isinstance(rhs, ExprMatrix):
        rhs = ExprMatrix(rhs)
    if rhs.nrows != M.nrows:
        raise ValueError("shape mismatch between matrix and right-hand side")
    R, pivots, T = rref(M, track=True)
    B = T @ rhs
    rank = len(pivots)
    for i in range(rank, M.nrows):
        for j in range(rhs.ncols):
            if not B[i, j].is_zero():
                raise InconsistentSystem(T.rows[i], j)
    X = [[ZERO] * rhs.ncols for _ in range(M.ncols)]
    for i, pj in enumerate(pivots):
        for j in range(rhs.ncols):
            X[pj][j] = B[i, j]
    return LinearSolution(ExprMatrix(X, rhs.ncols), tuple(nullspace(M)))


def row_space_basis(vectors: Sequence[Sequence[RationalExpr]], ncols: int) -> list:
    """Canonical (RREF) basis of the span of ``vectors``."""
    if not vectors:
        return []
    R, pivots = rref(ExprMatrix(vectors, ncols))
    return [R.rows[i] for i in range(len(pivots))]


def in_span(v: Sequence[RationalExpr], vectors: Sequence[Sequence[RationalExpr]]) -> bool:
    v = [RationalExpr.coerce(e) for e in v]
    if all(e.is_zero() for e in v):
        return True
    if not vectors:
        return False
    n = len(v)
    return generic_rank(ExprMatrix(list(vectors) + [v], n)) == generic_rank(ExprMatrix(vectors, n))

"""The extended Jacobian of a flat parameterization and its rank conditions.

Rows are ``(F_x, F_u, F_g)``.  Columns are the output shifts
``y_j@s`` for ``-R1_j <= s <= R2_j``, grouped by *level* ``s + R1_j`` and
then by component, so that for every output the deepest shift comes first.
For a forward parameterization (``R1 = 0``) this is plain ascending shift
order.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .exprcore import ExprMatrix, RationalExpr, Var, generic_rank
from .flatout import FlatOutputCandidate, Parameterization


def jacobian_columns(p: Parameterization) -> list:
    cols = []
    for j in range(p.m):
        for s in range(-p.R1[j], p.R2[j] + 1):
            cols.append((s + p.R1[j], j, p.y(j, s)))
    cols.sort(key=lambda c: (c[0], c[1]))
    return [c[2] for c in cols]


def build_extended_jacobian(p: Parameterization) -> ExprMatrix:
    """``d(F_x, F_u, F_g) / d(y-shifts)``, see :func:`jacobian_columns` for column order."""
    return ExprMatrix.jacobian(p.F_x + p.F_u + p.F_g, jacobian_columns(p))


@dataclass(frozen=True)
class RankReport:
    mode: str
    rank_x_deepest: int  # rank d_{y[-R1]} F_x
    rank_g_deepest: int  # rank d_{y[-R1]} F_g
    rank_x_top: int  # rank d_{y[R2-1]} F_x
    rank_u_top: int  # rank d_{y[R2]} F_u
    m: int
    ranks_equal: bool
    zero_block: bool
    forward_pattern: bool
    backward_pattern: bool
    holds: bool

    @property
    def ranks(self) -> tuple:
        return (self.rank_x_deepest, self.rank_g_deepest, self.rank_x_top, self.rank_u_top)

    def to_dict(self) -> dict:
        return asdict(self)


def _block(rows, cols) -> ExprMatrix:
    return ExprMatrix.jacobian(rows, cols)


def check_rank_conditions(p: Parameterization, mode: str = "general") -> RankReport:
    """Generic ranks of the four designated blocks and the rank patterns.

    The top blocks ``d_{y[R2-1]} F_x`` and ``d_{y[R2]} F_u`` always have
    equal rank for a flat system.  A forward parameterization (``R1 = 0``)
    has full rank ``m`` in the deepest blocks and rank below ``m`` at the
    top; a backward one (``R2 = 0``) has the reverse pattern.

    ``mode`` picks the predicate reported as ``holds``: ``"forward"`` and
    ``"backward"`` test the respective pattern (which includes the
    zero shape of ``R1`` or ``R2``), ``"general"`` only the rank equality.
    """
    if mode not in ("forward", "backward", "general"):
        raise ValueError(f"unknown mode {mode!r}")
    m = p.m
    deepest = [p.y(j, -p.R1[j]) for j in range(m)]
    top_minus = [p.y(j, p.R2[j] - 1) for j in range(m)]
    top = [p.y(j, p.R2[j]) for j in range(m)]
    r_xd = generic_rank(_block(p.F_x, deepest))
    r_gd = generic_rank(_block(p.F_g, deepest))
    r_xt = generic_rank(_block(p.F_x, top_minus))
    r_ut = generic_rank(_block(p.F_u, top))
    zero = _block(p.F_x, top).is_zero()
    equal = r_xt == r_ut
    fwd = all(r == 0 for r in p.R1) and r_xd == r_gd == m and r_xt == r_ut < m
    bwd = all(r == 0 for r in p.R2) and r_xd == r_gd < m and r_xt == r_ut == m
    holds = {"forward": fwd, "backward": bwd, "general": equal}[mode]
    return RankReport(mode, r_xd, r_gd, r_xt, r_ut, m, equal, zero, fwd, bwd, holds)


def _relabel(e: RationalExpr, names, offset: int) -> RationalExpr:
    """``y_j@s -> yhat_j@(-s + offset)``."""
    return e.rename({v: Var(names[v.name], -v.shift + offset) for v in e.variables})


def mirror_parameterization(p: Parameterization, associated, names=None) -> Parameterization:
    """The parameterization of the associated system read off from ``p``.

    With ``yhat@s = y@-s``: ``z = F_x`` shifted back once and mirrored,
    ``v = F_g`` mirrored and ``eta = F_u`` mirrored.  The windows swap:
    ``R1_hat = R2`` and ``R2_hat = R1``.
    """
    names = tuple(names or p.names)
    nm = dict(zip(p.names, names))
    F_z = tuple(_relabel(e, nm, -1) for e in p.F_x)
    F_v = tuple(_relabel(e, nm, 0) for e in p.F_g)
    F_eta = tuple(_relabel(e, nm, 0) for e in p.F_u)
    cand = FlatOutputCandidate(tuple(RationalExpr.var(Var(n)) for n in names), names)
    return Parameterization(associated, cand, F_z, F_v, F_eta, tuple(p.R2), tuple(p.R1))


def check_mirror_correspondence(p: Parameterization, p_hat: Parameterization) -> bool:
    """Entrywise check that the associated Jacobian is the mirrored one.

    Column ``y_j@s`` of the ``F_x`` rows maps to ``yhat_j@(-s-1)``; for the
    ``F_u``/``F_g`` rows it maps to ``yhat_j@(-s)`` with the two blocks
    swapped.  Entries are relabeled the same way and compared exactly, and
    every column of the associated Jacobian outside the image must vanish
    in the corresponding rows.
    """
    if p.m != p_hat.m or len(p.F_x) != len(p_hat.F_x):
        return False
    nm = dict(zip(p.names, p_hat.names))
    M = build_extended_jacobian(p)
    M_hat = build_extended_jacobian(p_hat)
    cols = jacobian_columns(p)
    cols_hat = {v: i for i, v in enumerate(jacobian_columns(p_hat))}
    n, m = len(p.F_x), p.m
    # (row range in p, row offset in p_hat, column shift offset)
    blocks = [(range(0, n), 0, -1), (range(n, n + m), n + m, 0), (range(n + m, n + 2 * m), n, 0)]
    for rows, base, off in blocks:
        hit = set()
        for c, v in enumerate(cols):
            target = Var(nm[v.name], -v.shift + off)
            for k, i in enumerate(rows):
                e = M[i, c]
                if target not in cols_hat:
                    if not e.is_zero():
                        return False
                    continue
                hit.add(cols_hat[target])
                if _relabel(e, nm, off) != M_hat[base + k, cols_hat[target]]:
                    return False
        for c in set(range(M_hat.ncols)) - hit:
            if any(not M_hat[base + k, c].is_zero() for k in range(len(rows))):
                return False
    return True

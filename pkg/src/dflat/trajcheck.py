"""Exact rational trajectory checks.

These complement the symbolic certificates: they draw random rational data,
run the system or a parameterization forward, and test the identities at
points.  Every value is a :class:`fractions.Fraction`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .exprcore import RationalExpr, Var
from .flatout import FlatOutputCandidate, Parameterization, ShiftAlgebra
from .sysmodel import SystemModel, build_associated


class SimulationError(ArithmeticError):
    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


@dataclass
class Trajectory:
    """``x[k]`` for ``k = 0..N``; ``u[k]`` and ``zeta[k]`` for ``k = 0..N-1``."""

    N: int
    x: list
    u: list
    zeta: list = field(default_factory=list)


@dataclass
class CheckResult:
    ok: bool
    seeds: int
    N: int
    seed: int
    first_failure: Optional[dict] = None

    def __bool__(self):
        return self.ok

    def to_dict(self) -> dict:
        return {"ok": self.ok, "seeds": self.seeds, "N": self.N, "seed": self.seed, "first_failure": self.first_failure}


def random_rational(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-9, 9), rng.randint(1, 9))


def simulate(s: SystemModel, x0: Sequence, u_seq: Sequence[Sequence], N: int) -> Trajectory:
    if len(u_seq) < N:
        raise ValueError(f"need {N} input vectors, got {len(u_seq)}")
    x = [tuple(Fraction(c) for c in x0)]
    u, zeta = [], []
    for k in range(N):
        uk = tuple(Fraction(c) for c in u_seq[k])
        point = dict(zip(s.states, x[-1]))
        point.update(zip(s.inputs, uk))
        try:
            nxt = tuple(e.evaluate(point) for e in s.f)
            zk = tuple(e.evaluate(point) for e in s.g) if s.g is not None else ()
        except ZeroDivisionError:
            raise SimulationError(f"denominator vanishes at step {k}", k) from None
        u.append(uk)
        zeta.append(zk)
        x.append(nxt)
    return Trajectory(N, x, u, zeta)


def _random_run(s, N, rng, retries=20):
    for _ in range(retries):
        x0 = [random_rational(rng) for _ in s.states]
        us = [[random_rational(rng) for _ in s.inputs] for _ in range(N)]
        try:
            return simulate(s, x0, us, N)
        except SimulationError:
            continue
    raise SimulationError(f"no admissible random run after {retries} draws", -1)


def _eval(exprs, point):
    return tuple(e.evaluate(point) for e in exprs)


def check_correspondence(
    s: SystemModel,
    N: int = 10,
    seeds: int = 100,
    seed: int = 0,
    associated: Optional[SystemModel] = None,
) -> CheckResult:
    """Mirror random runs of ``s`` and test them on the associated system.

    With ``k = ceil(N/2)``: ``z(j) = x(2k+1-j)``, ``v(j) = zeta(2k-j)``,
    ``eta(j) = u(2k-j)``; the associated equations are checked for every
    ``j`` whose data lies inside the run.
    """
    s = s.with_extension()
    a = associated if associated is not None else build_associated(s)
    rng = random.Random(seed)
    k = -(-N // 2)
    for trial in range(seeds):
        tr = _random_run(s, N, rng)
        for j in range(2 * k - N + 1, 2 * k + 1):
            z, z_next = tr.x[2 * k + 1 - j], tr.x[2 * k - j]
            v, eta = tr.zeta[2 * k - j], tr.u[2 * k - j]
            point = dict(zip(a.states, z))
            point.update(zip(a.inputs, v))
            try:
                ok = _eval(a.f, point) == z_next and _eval(a.g, point) == eta
            except ZeroDivisionError:
                ok = False
            if not ok:
                return CheckResult(False, seeds, N, seed, {"trial": trial, "step": j})
    return CheckResult(True, seeds, N, seed)


def check_parameterization_roundtrip(
    s: SystemModel,
    p: Parameterization,
    cand: Optional[FlatOutputCandidate] = None,
    N: int = 10,
    seeds: int = 50,
    seed: int = 0,
    retries: int = 20,
) -> CheckResult:
    """Random output sequences through ``F_x``, ``F_u`` and back.

    The reconstructed ``(x, u)`` must satisfy the dynamics at every step,
    and evaluating ``cand`` (with its shifts) on it must return the drawn
    outputs wherever the needed window is inside the run.
    """
    s = s.with_extension()
    cand = cand if cand is not None else p.candidate
    alg = ShiftAlgebra(s)
    shifts = [v.shift for e in p.F_x + p.F_u for v in e.variables] or [0]
    lo, hi = max(0, -min(shifts)), max(0, max(shifts))
    rng = random.Random(seed)
    # the candidate written in canonical coordinates, then as an expression of
    # (x(k), u(k..k+q), zeta(k-1..k-p)), which we can read off the run
    comps = [alg.canonicalize(c) for c in cand.components]
    for trial in range(seeds):
        for _ in range(retries):
            ys = {(j, t): random_rational(rng) for j in range(p.m) for t in range(-lo, N + hi + 1)}
            try:
                xs, us = [], []
                for k in range(N + 1):
                    point = {
                        Var(nm, sh): ys[(j, k + sh)] for j, nm in enumerate(p.names) for sh in range(-lo, hi + 1)
                    }
                    xs.append(_eval(p.F_x, point))
                    us.append(_eval(p.F_u, point))
                break
            except ZeroDivisionError:
                continue
        else:
            return CheckResult(False, seeds, N, seed, {"trial": trial, "reason": "no admissible draw"})
        for k in range(N):
            point = dict(zip(s.states, xs[k]))
            point.update(zip(s.inputs, us[k]))
            try:
                if _eval(s.f, point) != xs[k + 1]:
                    return CheckResult(False, seeds, N, seed, {"trial": trial, "step": k, "reason": "dynamics"})
            except ZeroDivisionError:
                return CheckResult(False, seeds, N, seed, {"trial": trial, "step": k, "reason": "dynamics"})
        zetas = []
        for k in range(N + 1):
            point = dict(zip(s.states, xs[k]))
            point.update(zip(s.inputs, us[k]))
            try:
                zetas.append(_eval(s.g, point))
            except ZeroDivisionError:
                zetas.append(None)
        for j, c in enumerate(comps):
            for k in range(N + 1):
                point = {}
                ok = True
                for v in c.variables:
                    kind = alg.kind(v)
                    t = k + v.shift
                    if not 0 <= t <= N:
                        ok = False
                        break
                    idx = {"state": s.states, "input": s.inputs, "zeta": s.zeta}[kind].index(Var(v.name))
                    src = {"state": xs, "input": us, "zeta": zetas}[kind][t]
                    if src is None:
                        ok = False
                        break
                    point[v] = src[idx]
                if not ok:
                    continue
                try:
                    val = c.evaluate(point)
                except ZeroDivisionError:
                    continue
                if val != ys[(j, k)]:
                    return CheckResult(False, seeds, N, seed, {"trial": trial, "step": k, "reason": "output"})
    return CheckResult(True, seeds, N, seed)

from dataclasses import replace
from fractions import Fraction

import pytest

from dflat.exprcore import parse_expr
from dflat.sysmodel import load_system
from dflat.trajcheck import (
    SimulationError,
    check_correspondence,
    check_parameterization_roundtrip,
    simulate,
)

P = parse_expr


def test_simulate_example(ex1):
    tr = simulate(ex1, (1, 2, 3, 4), [(1, 1)] * 5, 5)
    # two steps by hand: x+ = (x4, u2, x3 + x2*x4 + x1*u2, u1)
    assert tr.x[1] == (4, 1, 12, 1)
    assert tr.x[2] == (1, 1, 17, 1)
    assert tr.zeta[0] == (1, 2)
    assert len(tr.x) == 6 and len(tr.u) == 5


def test_simulate_trivial(integrator):
    tr = simulate(integrator, (0,), [(1,)] * 3, 3)
    assert [x[0] for x in tr.x] == [0, 1, 1, 1]


def test_equilibrium():
    s = load_system('{"states": ["x1", "x2"], "inputs": ["u1"], "f": ["x2", "2*x1 + u1"]}')
    tr = simulate(s, (0, 0), [(0,)] * 4, 4)
    assert all(x == (0, 0) for x in tr.x)


def test_pole_reported_with_step():
    s = load_system('{"states": ["x"], "inputs": ["u"], "f": ["1/(x - 1) + u"]}')
    with pytest.raises(SimulationError) as info:
        simulate(s, (Fraction(3),), [(Fraction(1, 2),), (0,)], 2)  # x(1) = 1
    assert info.value.step == 1


def test_correspondence(ex1, integrator):
    assert check_correspondence(ex1, N=10, seeds=100, seed=1)
    assert check_correspondence(integrator, N=10, seeds=20)


def test_correspondence_negative(ex1, ex1_assoc):
    bad = replace(ex1_assoc, f=(ex1_assoc.f[0], -ex1_assoc.f[1]) + ex1_assoc.f[2:])
    res = check_correspondence(ex1, N=10, seeds=10, associated=bad)
    assert not res and res.first_failure is not None


def test_roundtrip(ex1, ex1_param, integrator, integrator_param):
    assert check_parameterization_roundtrip(ex1, ex1_param, N=10, seeds=50)
    assert check_parameterization_roundtrip(integrator, integrator_param, N=10, seeds=20)


def test_roundtrip_off_by_one(ex1, ex1_param):
    fu = ex1_param.F_u[0]
    bad = replace(ex1_param, F_u=(fu.rename({v: v.shifted(1) for v in fu.variables}),) + ex1_param.F_u[1:])
    assert not check_parameterization_roundtrip(ex1, bad, N=10, seeds=5)


def test_deterministic(ex1):
    a = check_correspondence(ex1, N=6, seeds=5, seed=3, associated=None)
    b = check_correspondence(ex1, N=6, seeds=5, seed=3)
    assert a.to_dict() == b.to_dict()

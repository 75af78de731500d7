import json

import pytest

from dflat.exprcore import Var, parse_expr
from dflat.sysmodel import (
    InvalidSystem,
    RankError,
    SchemaError,
    build_associated,
    check_inverse,
    choose_extension,
    invert_extended_map,
    load_system,
    rename_system,
    system_from_dict,
)

P = parse_expr


def test_known_inverse(ex1):
    inv = ex1.inverse
    assert ex1.g == (P("x1"), P("x2"))
    assert inv.psi_x == (P("zeta1"), P("zeta2"), P("x3@1 - x1@1*zeta2 - x2@1*zeta1"), P("x1@1"))
    assert inv.psi_u == (P("x4@1"), P("x2@1"))


def test_associated_system(ex1_assoc):
    a = ex1_assoc
    assert a.states == tuple(Var(f"z{i}") for i in range(1, 5))
    assert a.inputs == (Var("v1"), Var("v2"))
    assert a.f == (P("v1"), P("v2"), P("z3 - z1*v2 - z2*v1"), P("z1"))
    assert a.g == (P("z4"), P("z2"))
    assert a.zeta == (Var("eta1"), Var("eta2"))


def test_double_association_returns_original(ex1, ex1_assoc):
    back = build_associated(ex1_assoc, states=ex1.states, inputs=ex1.inputs, extension=ex1.zeta, name=ex1.name)
    assert back.f == ex1.f
    assert back.g == ex1.g
    assert back.inverse == ex1.inverse


def test_dict_round_trip(ex1_assoc):
    d = json.loads(json.dumps(ex1_assoc.to_dict()))
    again = system_from_dict(d)
    assert again.f == ex1_assoc.f and again.g == ex1_assoc.g
    assert again.inverse == ex1_assoc.inverse


def test_load_from_text():
    s = load_system('{"states": ["x"], "inputs": ["u"], "f": ["x + u"]}')
    assert s.n == 1 and s.m == 1 and s.name == "system"


@pytest.mark.parametrize(
    "doc, exc, fragment",
    [
        ({"states": ["x1"], "inputs": ["u1"]}, SchemaError, "missing key 'f'"),
        ({"states": ["x1"], "inputs": ["u1"], "f": ["x1"]}, RankError, "rank"),
        ({"states": ["x1", "x2"], "inputs": ["u1"], "f": ["u1", "u1"]}, RankError, "submersivity"),
        ({"states": ["x1"], "inputs": ["u1"], "f": ["y + u1"]}, SchemaError, "unknown variable"),
        ({"states": ["x1"], "inputs": ["u1"], "f": ["u1"], "extra": 1}, SchemaError, "unknown keys"),
        ({"states": ["x1"], "inputs": ["u1"], "f": ["u1"], "g": ["u1"]}, RankError, "extended"),
        ({"states": ["x1"], "inputs": ["x1"], "f": ["x1"]}, SchemaError, "distinct"),
    ],
)
def test_invalid_systems(doc, exc, fragment):
    with pytest.raises(exc) as info:
        system_from_dict(doc)
    assert fragment in str(info.value)
    assert isinstance(info.value, InvalidSystem)


def test_rank_error_fields():
    with pytest.raises(RankError) as info:
        system_from_dict({"states": ["x1", "x2"], "inputs": ["u1"], "f": ["u1", "u1"]})
    assert (info.value.condition, info.value.rank, info.value.required) == ("submersivity", 1, 2)


def test_choose_extension_completes_rank(ex1, uncontrollable):
    from dflat.exprcore import ExprMatrix, generic_rank

    for s in (ex1, uncontrollable):
        g = choose_extension(s)
        assert generic_rank(ExprMatrix.jacobian(s.f + g, s.coords)) == s.n + s.m


def test_explicit_inverse_is_checked(ex1):
    from dataclasses import replace

    from dflat.sysmodel import InversionError

    bad = replace(ex1.inverse, psi_u=(P("x4@1"), P("x2@1 + 1")))
    with pytest.raises(InversionError):
        check_inverse(ex1, bad)
    check_inverse(ex1, invert_extended_map(ex1))


def test_rename_system(ex1):
    r = rename_system(ex1, states=["a", "b", "c", "d"])
    assert r.f[2] == P("c + b*d + a*u2")
    assert r.inverse.psi_x[3] == P("a@1")

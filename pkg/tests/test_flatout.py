import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dflat.exprcore import RationalExpr, Var, parse_expr
from dflat.flatout import (
    DerivationFailed,
    FlatOutputCandidate,
    ShiftAlgebra,
    VerificationFailed,
    candidate_from_dict,
    check_parameterization,
    derive_forward_flat_output,
    first_integrals,
    shift_expr,
    verify_flat_output,
)
from dflat.geomtest import Distribution
from dflat.sysmodel import SchemaError

P = parse_expr


class TestShift:
    def test_backward_shifts_of_known_output(self, ex1, ex1_output):
        y1, y2 = ex1_output.components
        assert shift_expr(y2, -1, ex1) == P("x3 + x2*x4")
        assert shift_expr(y2, -2, ex1) == P("x3 - x2*zeta1@-1")
        assert shift_expr(y1, -1, ex1) == P("x4")
        assert shift_expr(y1, -2, ex1) == P("x1")
        assert shift_expr(y1, -3, ex1) == P("zeta1@-1")

    def test_forward(self, ex1):
        assert shift_expr(P("x4"), 1, ex1) == P("u1")
        assert shift_expr(P("x4"), 2, ex1) == P("u1@1")
        assert shift_expr(P("zeta2@-1"), 1, ex1) == P("x2")

    def test_noncanonical_input(self, ex1):
        alg = ShiftAlgebra(ex1)
        assert alg.canonical(Var("x1", 1)) == P("x4")
        assert alg.canonical(Var("u2", -1)) == P("x2")
        assert alg.canonical(Var("zeta1", 0)) == P("x1")

    def test_backward_needs_inverse(self):
        from dflat.sysmodel import load_system

        s = load_system('{"states": ["x"], "inputs": ["u"], "f": ["u"]}')
        assert shift_expr(P("x"), -1, s) == P("zeta1@-1")


def canonical_vars(s, depth=2):
    vs = list(s.states)
    vs += [u.shifted(k) for u in s.inputs for k in range(depth)]
    vs += [z.shifted(-k) for z in s.zeta for k in range(1, depth + 1)]
    return vs


def polys(vs):
    mono = st.lists(st.sampled_from(vs), min_size=0, max_size=3)
    term = st.tuples(st.integers(-4, 4), mono)
    return st.lists(term, min_size=1, max_size=4)


def to_expr(terms):
    e = RationalExpr.const(0)
    for c, factors in terms:
        t = RationalExpr.const(c)
        for v in factors:
            t = t * RationalExpr.var(v)
        e = e + t
    return e


@settings(max_examples=100, deadline=None)
@given(data=st.data())
def test_shift_inverse_identity(ex1, ex1_assoc, data):
    s = data.draw(st.sampled_from([ex1, ex1_assoc]))
    e = to_expr(data.draw(polys(canonical_vars(s))))
    alg = ShiftAlgebra(s)
    assert alg.shift(alg.shift(e, 1), -1) == e
    assert alg.shift(alg.shift(e, -1), 1) == e


class TestFirstIntegrals:
    def test_level_two(self, assoc_record, ex1_assoc):
        part = assoc_record.E[2].restrict(ex1_assoc.states)
        assert first_integrals(part, ex1_assoc.states, 1) == [P("z4")]

    def test_level_one(self, assoc_record, ex1_assoc):
        part = assoc_record.E[1].restrict(ex1_assoc.states)
        fis = first_integrals(part, ex1_assoc.states, 2)
        target = P("z3 + z2*z4")
        assert target in fis
        for phi in fis:
            for v in part.basis:
                assert v.apply(phi).is_zero()

    def test_full_tangent_space(self, ex1):
        D = Distribution.coordinate_span(ex1.states, ex1.states)
        assert first_integrals(D, ex1.states, 3) == []

    def test_empty_distribution(self, ex1):
        D = Distribution.span(ex1.states, [])
        assert len(first_integrals(D, ex1.states[:2], 1)) == 2


class TestVerify:
    def test_ex1_output(self, ex1_param):
        p = ex1_param
        assert p.R1 == (3, 2) and p.R2 == (0, 0)
        assert p.F_x[1] == P("(y2@-1 - y2@-2)/(y1@-1 + y1@-3)")
        assert p.F_u == (P("y1"), P("(y2 - y2@-1)/(y1 + y1@-2)"))
        assert p.F_g == (P("y1@-2"), P("(y2@-1 - y2@-2)/(y1@-1 + y1@-3)"))

    def test_associated_output(self, assoc_param):
        p = assoc_param
        assert p.R1 == (0, 0) and p.R2 == (3, 2)
        assert p.F_x[1] == P("(y2 - y2@1)/(y1 + y1@2)")
        assert p.F_u[1] == P("(y2@1 - y2@2)/(y1@1 + y1@3)")

    def test_trivial(self, integrator_param):
        p = integrator_param
        assert p.F_x == (P("y1"),) and p.F_u == (P("y1@1"),)
        assert (p.R1, p.R2) == ((0,), (1,))

    def test_wrong_candidate(self, ex1):
        with pytest.raises(VerificationFailed) as info:
            verify_flat_output(ex1, FlatOutputCandidate((P("x1"), P("x2"))))
        assert not info.value.refuted

    def test_dependent_candidate_is_refuted(self, ex1):
        with pytest.raises(VerificationFailed) as info:
            verify_flat_output(ex1, FlatOutputCandidate((P("x4"), P("u1@-1"))))
        assert info.value.refuted

    def test_window_too_small(self, ex1, ex1_output):
        with pytest.raises(VerificationFailed):
            verify_flat_output(ex1, ex1_output, max_back=1, max_fwd=0)

    def test_component_count(self, ex1):
        with pytest.raises(ValueError):
            verify_flat_output(ex1, FlatOutputCandidate((P("x1"),)))

    def test_windows(self, ex1):
        cand = FlatOutputCandidate((P("u1@2 + zeta1@-3"), P("x1")))
        assert cand.windows(ex1) == ((3, 0), (2, 0))

    def test_every_parameterization_is_consistent(self, ex1_param, assoc_param, integrator_param):
        for p in (ex1_param, assoc_param, integrator_param):
            assert check_parameterization(p)


class TestDerive:
    def test_associated(self, ex1_assoc, assoc_record):
        cand, p = derive_forward_flat_output(ex1_assoc, assoc_record, max_degree=2)
        assert cand.components == (P("z4"), P("z3 + z2*z4"))
        assert all(r == 0 for r in p.R1)

    def test_degree_one_fails(self, ex1_assoc, assoc_record):
        with pytest.raises(DerivationFailed):
            derive_forward_flat_output(ex1_assoc, assoc_record, max_degree=1)

    def test_trivial(self, integrator):
        from dflat.geomtest import forward_flatness_test

        cand, _ = derive_forward_flat_output(integrator, forward_flatness_test(integrator))
        assert cand.components == (P("x1"),)

    def test_requires_flat(self, ex1, ex1_record):
        with pytest.raises(DerivationFailed):
            derive_forward_flat_output(ex1, ex1_record)


class TestCandidateFile:
    def test_decode_with_zeta_alias(self, ex1):
        cand = candidate_from_dict({"outputs": ["x1", "c@-1"], "vars": {"zeta": ["c", "d"]}}, ex1)
        assert cand.components[1] == P("zeta1@-1")

    @pytest.mark.parametrize("doc", [{}, {"outputs": "x1"}, {"outputs": ["x1"]}, {"outputs": ["x1", "q"]}])
    def test_rejects(self, ex1, doc):
        with pytest.raises(SchemaError):
            candidate_from_dict(doc, ex1)

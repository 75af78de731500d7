import pytest

from dflat.backtest import UnsupportedCandidate, backward_flatness_test, map_output_to_original
from dflat.exprcore import parse_expr
from dflat.flatout import FlatOutputCandidate, verify_flat_output
from dflat.geomtest import forward_flatness_test
from dflat.sysmodel import build_associated, load_system

from .conftest import system_path

P = parse_expr


def test_example_backward_flat(ex1):
    v = backward_flatness_test(ex1)
    assert v.verdict == "backward-flat"
    assert v.forward_record.dims == (2, 3, 5, 6)
    assert v.derived_output is None


def test_example_with_derivation(ex1, ex1_output):
    v = backward_flatness_test(ex1, derive=True, max_degree=2)
    assert v.derived_output.components == ex1_output.components
    assert v.parameterization.R1 == (3, 2)
    assert v.parameterization.R2 == (0, 0)


def test_map_output(ex1, ex1_assoc, assoc_output, ex1_output):
    y = map_output_to_original(assoc_output, ex1, ex1_assoc)
    assert y.components == ex1_output.components


def test_map_output_rejects_inputs(ex1, ex1_assoc):
    with pytest.raises(UnsupportedCandidate):
        map_output_to_original(FlatOutputCandidate((P("z4"), P("v1"))), ex1, ex1_assoc)
    with pytest.raises(UnsupportedCandidate):
        map_output_to_original(FlatOutputCandidate((P("z4"), P("z1@1"))), ex1, ex1_assoc)


def test_trivial(integrator):
    v = backward_flatness_test(integrator, derive=True)
    assert v.backward_flat
    assert v.derived_output.components == (P("u1"),)


def test_negative(uncontrollable):
    v = backward_flatness_test(uncontrollable, derive=True)
    assert v.verdict == "not-backward-flat"
    assert v.derived_output is None


@pytest.mark.parametrize("name", ["example1", "example1_associated", "integrator", "uncontrollable", "chain"])
def test_verdict_equals_forward_verdict_of_associated(name):
    s = load_system(system_path(name))
    v = backward_flatness_test(s)
    assert v.backward_flat == forward_flatness_test(build_associated(s)).forward_flat


@pytest.mark.parametrize("name", ["integrator", "example1_associated", "chain"])
def test_associated_of_forward_flat_is_backward_flat(name):
    s = load_system(system_path(name))
    assert forward_flatness_test(s).forward_flat
    assert backward_flatness_test(build_associated(s)).backward_flat


@pytest.mark.parametrize("name", ["example1", "integrator", "chain"])
def test_derived_output_has_backward_shape(name):
    s = load_system(system_path(name))
    v = backward_flatness_test(s, derive=True)
    p = verify_flat_output(v.parameterization.system, v.derived_output)
    assert all(r == 0 for r in p.R2)

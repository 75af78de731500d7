from importlib import resources

import pytest

from dflat import (
    FlatOutputCandidate,
    build_associated,
    forward_flatness_test,
    load_system,
    verify_flat_output,
)
from dflat.exprcore import parse_expr


def system_path(name):
    return resources.files("dflat") / "systems" / f"{name}.json"


def P(text):
    return parse_expr(text)


@pytest.fixture(scope="session")
def ex1():
    return load_system(system_path("example1")).with_extension()


@pytest.fixture(scope="session")
def ex1_assoc(ex1):
    return build_associated(ex1)


@pytest.fixture(scope="session")
def integrator():
    return load_system(system_path("integrator")).with_extension()


@pytest.fixture(scope="session")
def uncontrollable():
    return load_system(system_path("uncontrollable")).with_extension()


@pytest.fixture(scope="session")
def ex1_record(ex1):
    return forward_flatness_test(ex1)


@pytest.fixture(scope="session")
def assoc_record(ex1_assoc):
    return forward_flatness_test(ex1_assoc)


@pytest.fixture(scope="session")
def ex1_output():
    return FlatOutputCandidate((P("u1"), P("x3 + x2*x4 + u2*(x1 + u1)")))


@pytest.fixture(scope="session")
def assoc_output():
    return FlatOutputCandidate((P("z4"), P("z3 + z2*z4")))


@pytest.fixture(scope="session")
def ex1_param(ex1, ex1_output):
    return verify_flat_output(ex1, ex1_output, max_back=3)


@pytest.fixture(scope="session")
def assoc_param(ex1_assoc, assoc_output):
    return verify_flat_output(ex1_assoc, assoc_output)


@pytest.fixture(scope="session")
def integrator_param(integrator):
    return verify_flat_output(integrator, FlatOutputCandidate((P("x1"),)), max_back=0, max_fwd=1)

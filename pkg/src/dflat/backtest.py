"""Backward flatness through the associated system.

A system is backward-flat exactly when its associated system is
forward-flat; a state-only forward-flat output ``yhat(z)`` of the
associated system becomes the backward-flat output ``yhat(f(x, u))`` of the
original one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .flatout import (
    DerivationFailed,
    FlatOutputCandidate,
    Parameterization,
    VerificationFailed,
    derive_forward_flat_output,
    verify_flat_output,
)
from .geomtest import SequenceRecord, forward_flatness_test
from .sysmodel import InversionError, SystemModel, build_associated


class TestInconclusive(RuntimeError):
    """The test could not be carried out (no verdict either way)."""

    __test__ = False  # keep pytest from collecting it


class UnsupportedCandidate(ValueError):
    pass


@dataclass
class BackwardVerdict:
    verdict: str
    associated: SystemModel
    forward_record: SequenceRecord
    derived_output: Optional[FlatOutputCandidate] = None
    associated_output: Optional[FlatOutputCandidate] = None
    parameterization: Optional[Parameterization] = None
    associated_parameterization: Optional[Parameterization] = None
    derivation_error: Optional[str] = None

    @property
    def backward_flat(self) -> bool:
        return self.verdict == "backward-flat"


def backward_flatness_test(s: SystemModel, derive: bool = False, max_degree: int = 3) -> BackwardVerdict:
    try:
        assoc = build_associated(s)
    except InversionError as exc:
        raise TestInconclusive(f"test inconclusive: extended map not invertible by elimination ({exc})") from None
    rec = forward_flatness_test(assoc)
    out = BackwardVerdict(
        verdict="backward-flat" if rec.forward_flat else "not-backward-flat",
        associated=assoc,
        forward_record=rec,
    )
    if derive and rec.forward_flat:
        try:
            yhat, p_hat = derive_forward_flat_output(assoc, rec, max_degree=max_degree)
            y = map_output_to_original(yhat, s, assoc)
            p = verify_flat_output(s, y, max_back=s.n, max_fwd=0)
        except (DerivationFailed, VerificationFailed) as exc:
            out.derivation_error = str(exc)
        else:
            out.associated_output = yhat
            out.associated_parameterization = p_hat
            out.derived_output = y
            out.parameterization = p
    return out


def map_output_to_original(
    yhat: FlatOutputCandidate, s: SystemModel, associated: Optional[SystemModel] = None
) -> FlatOutputCandidate:
    """Substitute ``z -> f(x, u)`` in a state-only output of the associated system."""
    assoc = associated if associated is not None else build_associated(s)
    states = set(assoc.states)
    for c in yhat.components:
        bad = [v for v in c.variables if v not in states]
        if bad:
            raise UnsupportedCandidate(
                "output of the associated system must depend on its unshifted states only; got "
                + ", ".join(str(v) for v in bad)
            )
    to_f = dict(zip(assoc.states, s.f))
    return FlatOutputCandidate(tuple(c.substitute(to_f) for c in yhat.components), yhat.names)

"""One test per acceptance criterion; tolerances live in nzkit.acceptance."""

import pytest

from nzkit import acceptance as acc

pytestmark = pytest.mark.filterwarnings("ignore:mechanical cutoff")


def _check(result):
    print(f"{result.name}: {'PASS' if result.passed else 'FAIL'} ({result.detail})")
    assert result.passed, result.detail


def test_criterion_1_projector_identities():
    _check(acc._timed(acc.projector_identities))


def test_criterion_2_nz_consistency():
    _check(acc._timed(acc.nz_formal_solution))


def test_criterion_3_lambda_elimination():
    _check(acc._timed(acc.lambda_elimination))


def test_criterion_4_lambda_closed_form():
    _check(acc._timed(acc.lambda_closed_form))


@pytest.mark.xfail(strict=True, reason=(
    "E+(w) = conj(E-(-w)) is false for E_lam(w) = 1/(i(delta + lam w) + kappa/2); "
    "the rates only need E+(w) = E-(-w). See the decisions ledger."))
def test_criterion_5_sideband_rates():
    _check(acc._timed(acc.sideband_checks))


def test_criterion_5_parts_that_hold():
    res = acc.sideband_checks()
    v = res.values
    print(res.detail)
    assert v["gamma_c_rel"] < acc.SIDEBAND_REL_TOL
    assert v["identity_plain_rel"] < acc.SIDEBAND_REL_TOL
    assert v["resolved_rel"] < acc.RESOLVED_REL_TOL
    assert v["resolved_leading_rel"] < acc.RESOLVED_REL_TOL


def test_criterion_6_cooling_end_to_end():
    _check(acc._timed(acc.cooling_end_to_end))


def test_criterion_7_weak_coupling_order():
    _check(acc._timed(acc.weak_coupling_order))


def test_criterion_8_determinism():
    _check(acc._timed(acc.determinism))

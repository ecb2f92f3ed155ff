"""Acceptance criteria 1-7.

Each module-scoped fixture runs one criterion once; gating checks are
asserted individually and stated values known to be wrong are strict
xfails.  The terminal summary (see conftest) prints one line per criterion.
"""

import numpy as np
import pytest

from sepvol import measures, verify, weightfit

CRITERIA = {
    1: lambda: verify.criterion1(),
    2: lambda: verify.criterion2(n=10_000_000),
    3: lambda: verify.criterion3(),
    4: lambda: verify.criterion4(n=2_000_000),
    5: lambda: verify.criterion5(),
    6: lambda: verify.criterion6(),
    7: lambda: verify.criterion7(),
}


def _make_fixture(crit):
    @pytest.fixture(scope="module")
    def fixture(record_checks):
        return record_checks(crit, CRITERIA[crit]())
    return fixture


for _c in CRITERIA:
    globals()[f"criterion{_c}"] = _make_fixture(_c)


def _assert_checks(checks):
    gating = [c for c in checks if c.gating]
    assert gating, "criterion produced no gating checks"
    failed = [c.line() for c in gating if not c.passed]
    assert not failed, "\n".join(failed)


def _assert_known(checks):
    known = [c for c in checks if not c.gating]
    if not known:
        pytest.skip("no stated-value discrepancies for this criterion")
    # strict xfail: a stated value that suddenly reproduces must be looked at
    assert all(c.passed for c in known), "\n".join(c.line() for c in known)


SLOW = {2, 4, 5, 6, 7}


@pytest.mark.parametrize("crit", [pytest.param(c, marks=pytest.mark.slow) if c in SLOW else c for c in CRITERIA])
def test_criterion(crit, request):
    _assert_checks(request.getfixturevalue(f"criterion{crit}"))


@pytest.mark.xfail(strict=True, reason="stated B - D identity carries the opposite sign")
def test_criterion1_stated_identity(criterion1):
    _assert_known(criterion1)


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="stated 4-d closed forms omit the half-ball contribution")
def test_criterion2_stated_4d_values(criterion2):
    _assert_known(criterion2)


@pytest.mark.parametrize("crit", [3] + [pytest.param(c, marks=pytest.mark.slow) for c in (4, 5, 6, 7)])
def test_no_unexplained_known_issues(crit, request):
    assert all(c.gating for c in request.getfixturevalue(f"criterion{crit}"))


@pytest.fixture
def broken_face(monkeypatch):
    real = measures.face_values

    def skewed(metric, P, n=4):
        return real(metric, P, n=n) * (1.0 + np.asarray(P)[0])

    weightfit.basis_integral.cache_clear()
    monkeypatch.setattr(weightfit, "face_values", skewed)
    yield
    weightfit.basis_integral.cache_clear()


def test_broken_face_density_is_caught(broken_face):
    fits = verify.criterion5_fits(pairs=((3, 3),))
    ratio = next(c for c in fits if "b/a" in c.name)
    assert not ratio.passed
    vol, _ = weightfit.hs_targets(4)
    eq11 = weightfit.single_power_e3()
    volume = weightfit.integrate_form(eq11, "hs", "volume", rtol=1e-10)
    assert abs(volume / vol - 1) < 5e-4


if __name__ == "__main__":
    import sys
    from conftest import criterion_line
    ok = True
    for crit, fn in CRITERIA.items():
        checks = fn()
        print(criterion_line(crit, checks))
        ok &= verify.all_passed(checks)
    sys.exit(0 if ok else 1)

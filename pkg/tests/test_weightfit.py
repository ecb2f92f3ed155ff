import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from sepvol import weightfit as wf
from sepvol.weightfit import Term, WeightingForm


def test_elementary_symmetric():
    L = np.array([1.0, 2.0, 3.0, 4.0])
    assert wf.elementary_symmetric(L, 1) == pytest.approx(10)
    assert wf.elementary_symmetric(L, 2) == pytest.approx(35)
    assert wf.elementary_symmetric(L, 4) == pytest.approx(24)


def test_eq11_on_degenerate_points():
    f = wf.single_power_e3()
    assert wf.eval_W(f, [0.5, 0.5, 0, 0]) == 0.0
    assert wf.eval_W(f, [1.0, 0, 0, 0]) == 0.0
    assert wf.eval_W(f, np.full(4, 0.25)) == pytest.approx(6086 * (4 / 64) ** 2.65)


def test_face_restriction_matches_full_form():
    f = wf.two_term(1.3, 2000.0, 3, 3)
    P = np.random.default_rng(0).dirichlet(np.ones(3), 10_000).T
    full = wf.eval_W(f, np.vstack([P, np.zeros(P.shape[1])]))
    assert np.array_equal(wf.eval_W_face(f, P), full)


def test_permutation_invariance_is_exact():
    L = np.random.default_rng(1).dirichlet(np.ones(4), 100).T
    for f in (wf.single_power_e3(), wf.two_term(5.1, 19412.2, 4, 3)):
        ref = wf.eval_W(f, L)
        for p in itertools.permutations(range(4)):
            assert np.array_equal(wf.eval_W(f, L[list(p)]), ref)


def test_form_params_and_constant():
    f = wf.two_term(1.0, 2.0, 3, 4)
    assert f.params["terms"][1]["power"] == "4"
    c = wf.constant_form(2.5)
    assert wf.eval_W(c, np.full(4, 0.25)) == 2.5


def test_hs_self_consistency_of_fit():
    f = wf.fit_two_term_form(3, 3)
    vol, area = wf.hs_targets(4)
    assert wf.integrate_form(f, "hs", "volume", rtol=1e-10) == pytest.approx(vol, rel=1e-8)
    assert wf.integrate_form(f, "hs", "hyperarea", rtol=1e-10) == pytest.approx(area, rel=1e-8)


def test_fit_coefficients_exact_ratio():
    a, b = wf.fit_two_term(4, 3)
    assert b / a == pytest.approx(11377 / 3, rel=1e-9)
    a, b = wf.fit_two_term(3, 3)
    assert b / a == pytest.approx(31119 / 2, rel=1e-9)
    # the stated decimal of a differs from its exact expression in the fifth digit
    assert a == pytest.approx(1.26422, rel=2e-4)


def test_fit_rejects_bad_exponents():
    with pytest.raises(ValueError):
        wf.fit_two_term(0, 3)
    with pytest.raises(ValueError):
        wf.fit_two_term(2, 5)


def test_singular_fit(monkeypatch):
    monkeypatch.setattr(wf, "basis_integral", lambda *a, **k: 1.0)
    with pytest.raises(wf.SingularFitError):
        wf.fit_two_term(2, 2, targets=(1.0, 1.0))


def test_blend_validation():
    f = wf.two_term(1, 1, 3, 3)
    with pytest.raises(ValueError):
        wf.blend([(f, 0.5), (f, 0.4)])
    with pytest.raises(ValueError):
        wf.blend([(f, 0.5), (wf.single_power_e5(), 0.5)])
    b = wf.blend([(f, 0.25), (wf.two_term(2, 2, 3, 3), 0.75)])
    L = np.full(4, 0.25)
    assert wf.eval_W(b, L) == pytest.approx(1.75 * wf.eval_W(f, L))


def test_eq11_predictions_and_reports(tmp_path):
    f = wf.single_power_e3()
    r = wf.predict(f, "bures", "volume")
    assert r.ratio == pytest.approx(0.938275, rel=5e-3)
    reports = [r, wf.predict(f, "kubo-mori", "hyperarea")]
    data = json.loads(wf.reports_to_json(reports))
    assert data["schema"] == "sepvol.predictions/1" and len(data["rows"]) == 2
    text = wf.reports_to_csv(reports)
    assert text.splitlines()[0].startswith("form")
    assert "\r\n" in text


def test_schur_classification():
    res = wf.schur_classify(wf.fit_two_term_form(3, 3), n_draws=5000)
    # positive combinations of powers of e_k are Schur-concave on the simplex
    assert res.classification == "concave-evidence"
    assert not res.convex_witnesses and res.concave_witnesses
    mixed = WeightingForm("custom", 4, terms=(Term(1.0, 2, Fraction(1)), Term(-8.0, 3, Fraction(1))))
    res = wf.schur_classify(mixed, n_draws=5000)
    assert res.classification == "neither"
    w = res.convex_witnesses[0]
    assert w["W(p)"] > w["W(q)"]
    assert wf.schur_classify(wf.constant_form(), n_draws=500).classification == "degenerate-flat"
    assert wf.compare_pair(wf.single_power_e3(), [0.5, 0.5, 0, 0], [1, 0, 0, 0])[2] == 0


def test_flatness_diagnostic():
    d = wf.flatness_diagnostic(wf.single_power_e3(), n_draws=2000)
    assert d["n_points"] > 0 and d["relative_spread"] > 0.1
    assert wf.flatness_diagnostic(wf.constant_form(), n_draws=200)["relative_spread"] == 0.0

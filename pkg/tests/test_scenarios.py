import json
import math

import pytest
import sympy as sp

from sepvol import scenarios
from sepvol.scenarios import ScenarioSpec, enumerate_scenarios, evaluate_levels, evaluate_scenario

PI = math.pi


def test_spec_validation_and_dimension():
    assert ScenarioSpec().dimension == 7
    assert ScenarioSpec(frozenset({"z12", "z34"})).dimension == 5
    assert ScenarioSpec(diag_mode="full-real-9d").dimension == 9
    with pytest.raises(ValueError):
        ScenarioSpec(frozenset({"z15"}))
    with pytest.raises(ValueError):
        ScenarioSpec(constraint="two-pt-minors")
    with pytest.raises(ValueError):
        ScenarioSpec(frozenset({"z12"}), diag_mode="full-real-9d")


def test_diag_integrals():
    assert scenarios.diag_integral(scenarios.Z_ORDER) == pytest.approx(1 / 17920)
    assert scenarios.diag_integral(("z13", "z14", "z34")) == pytest.approx(1 / 192)
    assert scenarios.diag_integral(("z12", "z13", "z14")) == pytest.approx(1 / 192)
    assert scenarios.diag_integral(("z12", "z13", "z14", "z34")) == pytest.approx(1 / 960)
    assert scenarios.diag_integral_exact(("z13", "z14", "z34")) == sp.Rational(1, 192)
    assert scenarios.real9d_diag_norm() == pytest.approx(math.gamma(2.5) ** 4 / math.gamma(10))


@pytest.mark.parametrize("dim,count,trivial", [(3, 15, 15), (4, 20, 12), (5, 15, 3)])
def test_enumeration_counts(dim, count, trivial):
    rows = enumerate_scenarios(dim)
    assert len(rows) == count
    assert sum(lab == "trivial-prob-1" for _, lab, _ in rows) == trivial


def test_enumeration_rejects_bad_dimension():
    with pytest.raises(ValueError):
        enumerate_scenarios(8)


def test_four_dimensional_targets():
    rows = {s.zeroed: t for s, lab, t in enumerate_scenarios(4) if lab == "nontrivial"}
    star = rows[frozenset({"z12", "z23", "z24"})]
    tri = rows[frozenset({"z23", "z24", "z34"})]
    assert sp.simplify(star["total"] - sp.pi**2 / 384) == 0
    assert sp.simplify(tri["total"] - sp.pi / 144) == 0
    assert float(star["probability"]) == pytest.approx((4 + PI**2) / (4 * PI**2) + 4 / (3 * PI))
    assert float(tri["probability"]) == pytest.approx(3 * (4 + PI**2) / (32 * PI) + 0.5)
    stated = scenarios.stated_values(ScenarioSpec(frozenset({"z12", "z23", "z24"})))
    assert float(stated["probability"]) == pytest.approx(0.351321, abs=1e-6)


def test_five_dimensional_totals():
    totals = [float(t["total"]) for _, _, t in enumerate_scenarios(5)]
    assert sum(abs(v - PI**2 / 1440) < 1e-15 for v in totals) == 7
    assert sum(abs(v - PI**3 / 4096) < 1e-15 for v in totals) == 8


def test_trivial_scenario_is_exactly_probability_one():
    res = evaluate_scenario(ScenarioSpec(frozenset({"z14", "z23"})), 200_000, seed=3)
    assert res.probability.value == 1.0 and res.probability.stderr == 0.0
    assert res.separable.value == res.total.value
    assert res.total.agrees(PI**2 / 1440, nsigma=4)


def test_box_region_is_exact():
    # disjoint free edges: every point of the square is feasible
    res = evaluate_scenario(ScenarioSpec(frozenset({"z12", "z13", "z24", "z34"})), 10_000, seed=0)
    assert res.total.value == pytest.approx(1 / 12) and res.total.stderr == 0.0


def test_monotone_under_constraints():
    for spec in (ScenarioSpec(), ScenarioSpec(frozenset({"z23", "z24"})), ScenarioSpec(diag_mode="full-real-9d")):
        lv = evaluate_levels(spec, 100_000, seed=1)
        f = lv["feasible-only"].separable.value
        s = lv["fully-separable"].separable.value
        assert f >= lv["one-2x2-pt-minor"].separable.value >= s
        assert f >= lv["one-3x3-pt-minor"].separable.value >= s


def test_seven_dimensional_bound():
    res = scenarios.upper_bound_run(ScenarioSpec(constraint="one-3x3-pt-minor"), 1_000_000, seed=2)
    assert res.separable.agrees(PI**4 / 172032)
    assert res.probability.agrees(45 * PI**2 / 512)
    with pytest.raises(ValueError):
        scenarios.upper_bound_run(ScenarioSpec(), 1000)


def test_nine_dimensional_methods_agree():
    imp = evaluate_scenario(ScenarioSpec(diag_mode="full-real-9d", constraint="feasible-only"), 1_000_000, 4)
    cad = evaluate_scenario(ScenarioSpec(diag_mode="full-real-9d", constraint="feasible-only"), 1_000_000, 5,
                            method="cad")
    assert abs(imp.total.value - cad.total.value) <= 4 * math.hypot(imp.total.stderr, cad.total.stderr)
    assert cad.total.agrees(PI**4 / 60480)
    with pytest.raises(ValueError):
        evaluate_scenario(ScenarioSpec(diag_mode="full-real-9d"), 1000, method="grid")


def test_cad_sample_points_are_feasible():
    import numpy as np
    z, w = scenarios.cad_sample(np.random.default_rng(0), 5000)
    ok = w > 0
    assert ok.mean() > 0.99
    from sepvol.core import feasible_z
    assert feasible_z(z[ok]).mean() > 0.999


def test_budget_exceeded():
    with pytest.raises(scenarios.BudgetExceeded):
        evaluate_scenario(ScenarioSpec(), 2000, target_stderr=1e-15)


def test_result_serialization_and_catalog(tmp_path):
    res = evaluate_scenario(ScenarioSpec(frozenset({"z23", "z24"})), 20_000, seed=0)
    d = res.to_dict()
    assert d["label"] == "zero(z23,z24)" and "zscores" in d
    path = tmp_path / "catalog.json"
    payload = json.loads(scenarios.export_catalog(path))
    assert payload == json.loads(path.read_text())
    labels = [r["label"] for r in payload["scenarios"]]
    assert "real-9d" in labels and "restricted-7d" in labels


def test_same_seed_reproduces_bitwise():
    a = evaluate_scenario(ScenarioSpec(), 300_000, seed=8)
    b = evaluate_scenario(ScenarioSpec(), 300_000, seed=8, threads=2)
    assert a.to_dict() == b.to_dict()

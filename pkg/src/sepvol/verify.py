"""Acceptance checks shared by ``sepvol verify`` and the test suite.

Each criterion function returns a list of ``Check`` records.  A check
carrying ``known_issue`` compares against a stated value that the
computation shows to be wrong; it is reported but does not gate the run
(the corrected target is checked alongside it).
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
import sympy as sp

from . import measures, scenarios, weightfit
from .core import factor_B, factor_D
from .integrate import QuadratureSpec, quad_simplex

SUITES = ("exact", "mc", "all")


@dataclass
class Check:
    criterion: int
    name: str
    passed: bool
    value: float | None = None
    target: float | None = None
    tolerance: str = ""
    detail: str = ""
    known_issue: str | None = None

    @property
    def gating(self) -> bool:
        return self.known_issue is None

    def line(self) -> str:
        status = "PASS" if self.passed else ("FAIL(known)" if self.known_issue else "FAIL")
        val = "" if self.value is None else f" value={self.value:.9g}"
        tgt = "" if self.target is None else f" target={self.target:.9g}"
        tol = f" tol={self.tolerance}" if self.tolerance else ""
        note = f" [{self.known_issue}]" if self.known_issue else (f" ({self.detail})" if self.detail else "")
        return f"[{status}] criterion {self.criterion}: {self.name}{val}{tgt}{tol}{note}"

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("value", "target"):
            if d[k] is not None:
                d[k] = float(f"{d[k]:.15g}")
        return d


def _rel(value, target, tol, criterion, name, **kw) -> Check:
    ok = abs(value - target) <= tol * abs(target)
    return Check(criterion, name, bool(ok), float(value), float(target), f"{tol:g} rel", **kw)


def _est(est, target, criterion, name, nsigma=3.0, floor=0.005, **kw) -> Check:
    ok = est.agrees(target, nsigma=nsigma, rel_floor=floor)
    return Check(criterion, name, bool(ok), float(est.value), float(target),
                 f"max({nsigma:g} sigma, {floor:g} rel)", detail=f"stderr={est.stderr:.3g}", **kw)


# ---------------------------------------------------------------------------
# criterion 1

def stated_difference(z):
    z = np.asarray(z, dtype=float)
    z12, z13, z14, z23, z24, z34 = (z[..., k] for k in range(6))
    return 2 * (z14 - z23) * (z13 - z24) * (z12 - z34)


def criterion1(n: int = 100_000, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    z = rng.uniform(-1.0, 1.0, (n, 6))
    diff = factor_B(z) - factor_D(z)
    err_stated = float(np.abs(diff - stated_difference(z)).max())
    err_negated = float(np.abs(diff + stated_difference(z)).max())
    elapsed = time.perf_counter() - t0
    return [
        Check(1, "B - D = 2(z14-z23)(z13-z24)(z12-z34) as stated", err_stated < 1e-12, err_stated, 0.0,
              "1e-12 abs", known_issue="with the stated B and D the product carries the opposite sign"),
        Check(1, "B - D = 2(z14-z23)(z13-z24)(z34-z12)", err_negated < 1e-12, err_negated, 0.0, "1e-12 abs"),
        Check(1, "identity runtime", elapsed < 1.0, elapsed, 1.0, "< 1 s"),
    ]


# ---------------------------------------------------------------------------
# criterion 2

def criterion2(n: int = 10_000_000, seed: int = 1, n_small: int | None = None) -> list[Check]:
    n_small = n_small or n
    out: list[Check] = []
    PI = math.pi
    lv = scenarios.evaluate_levels(scenarios.ScenarioSpec(), n, seed)
    out.append(_est(lv["feasible-only"].total, PI**2 / 15120, 2, "7-d restricted total pi^2/15120"))
    out.append(_est(lv["one-3x3-pt-minor"].separable, PI**4 / 172032, 2, "7-d one-3x3-PT-minor bound pi^4/172032"))
    out.append(_est(lv["one-3x3-pt-minor"].probability, 45 * PI**2 / 512, 2, "7-d probability bound 45pi^2/512"))

    four = scenarios.enumerate_scenarios(4)
    stars = [s for s, lab, _ in four if lab == "nontrivial" and scenarios._is_star(s.zeroed)]
    tris = [s for s, lab, _ in four if lab == "nontrivial" and scenarios._is_triangle(s.zeroed)]
    trivial = [s for s, lab, _ in four if lab == "trivial-prob-1"]
    out.append(Check(2, "4-d enumeration 4 + 4 nontrivial, 12 trivial",
                     (len(stars), len(tris), len(trivial)) == (4, 4, 12), detail=f"{len(stars)}/{len(tris)}/{len(trivial)}"))
    for label, spec, stated in (
        ("zeroed {z12,z23,z24}", scenarios.ScenarioSpec(frozenset({"z12", "z23", "z24"})), (4 + PI**2) / (4 * PI**2)),
        ("zeroed {z23,z24,z34}", scenarios.ScenarioSpec(frozenset({"z23", "z24", "z34"})), 3 * (4 + PI**2) / (32 * PI)),
    ):
        res = scenarios.evaluate_scenario(spec, n_small, seed)
        out.append(_est(res.probability, stated, 2, f"4-d {label} probability as stated",
                        known_issue="stated closed form omits the half-ball contribution; see corrected check"))
        out.append(_est(res.probability, res.expected["probability"], 2,
                        f"4-d {label} probability, corrected closed form"))
        out.append(_est(res.total, res.expected["total"], 2, f"4-d {label} total"))

    s5 = scenarios.evaluate_scenario(scenarios.ScenarioSpec(frozenset({"z23", "z24"})), n_small, seed)
    out.append(_est(s5.total, PI**2 / 1440, 2, "5-d zeroed {z23,z24} total pi^2/1440"))
    out.append(_est(s5.separable, 0.00532303, 2, "5-d zeroed {z23,z24} separable 0.00532303"))
    out.append(_est(s5.probability, 0.776643, 2, "5-d zeroed {z23,z24} probability 0.776643"))
    for pair in scenarios.COMPLEMENTARY:
        r = scenarios.evaluate_scenario(scenarios.ScenarioSpec(pair), n_small, seed)
        out.append(Check(2, f"5-d B=D scenario {sorted(pair)} probability 1", r.probability.value == 1.0,
                         r.probability.value, 1.0, "exact"))
        out.append(_est(r.total, PI**2 / 1440, 2, f"5-d B=D scenario {sorted(pair)} total pi^2/1440"))

    counts: dict = {}
    all_one, misses = True, []
    for spec, _, targets in scenarios.enumerate_scenarios(3):
        r = scenarios.evaluate_scenario(spec, n_small, seed)
        all_one &= r.probability.value == 1.0
        key = sp.sstr(targets["total"])
        counts[key] = counts.get(key, 0) + 1
        if not r.total.agrees(float(targets["total"])):
            misses.append(spec.label())
    out.append(Check(2, "3-d all 15 probabilities 1", bool(all_one)))
    out.append(Check(2, "3-d total counts pi^2/128:8, pi/48:4, 1/12:3",
                     counts == {"pi**2/128": 8, "pi/48": 4, "1/12": 3}, detail=str(counts)))
    out.append(Check(2, "3-d totals within max(3 sigma, 0.5%) for all 15", not misses,
                     detail=", ".join(misses) or "all agree"))

    target9 = PI**4 / 60480
    imp = scenarios.evaluate_levels(scenarios.ScenarioSpec(diag_mode="full-real-9d"), n, seed, "implicit")
    cad = scenarios.evaluate_levels(scenarios.ScenarioSpec(diag_mode="full-real-9d"), n, seed + 1, "cad")
    out.append(_est(imp["feasible-only"].total, target9, 2, "9-d feasible volume pi^4/60480 (implicit)"))
    out.append(_est(cad["feasible-only"].total, target9, 2, "9-d feasible volume pi^4/60480 (nested limits)"))
    a, c = imp["feasible-only"].total, cad["feasible-only"].total
    gap = abs(a.value - c.value)
    out.append(Check(2, "9-d implicit and nested-limit volumes agree within 4 combined sigma",
                     gap <= 4 * math.hypot(a.stderr, c.stderr), gap, 4 * math.hypot(a.stderr, c.stderr), "abs"))
    for name, res in (("implicit", imp), ("nested limits", cad)):
        b = res["one-2x2-pt-minor"]
        out.append(_rel(b.separable.value, 0.0014242052589, 0.005, 2, f"9-d one-2x2-PT-minor bound ({name})"))
        out.append(_rel(b.probability.value, 0.88426997055, 0.005, 2, f"9-d probability bound ({name})"))
    return out


# ---------------------------------------------------------------------------
# criterion 3

def criterion3() -> list[Check]:
    from scipy.integrate import quad

    # the six odd-indexed angles carry a flat density on [0, pi]
    haar = math.pi**6 * math.prod(quad(f, 0, hi, epsabs=0, epsrel=1e-13)[0]
                                  for f, hi in measures.HAAR_FACTORS.values())
    spec = QuadratureSpec(3, rtol=1e-10)
    bures = measures.unitary_volume(4) * quad_simplex(
        lambda L: measures.density_values("bures", L), 4, spec, alpha=0.5)
    hs = measures.unitary_volume(4) * quad_simplex(lambda L: measures.density_values("hs", L), 4, spec)
    sep = sp.Integer(1) / (5 * sp.sqrt(3)) ** 7
    prob = sp.Integer(2**2 * 3 * 7**2 * 11 * 13) * sp.sqrt(3) / (5**4 * sp.pi**6)
    return [
        _rel(haar, math.pi**6 / 96, 1e-6, 3, "Haar integral pi^6/96"),
        _rel(bures, math.pi**8 / (2**15 * math.factorial(7)), 1e-6, 3, "Bures total volume pi^8/(2^15 7!)"),
        _rel(hs, float(sep / prob), 1e-6, 3, "HS total volume from the separable volume/probability pair"),
    ]


# ---------------------------------------------------------------------------
# criterion 4

def criterion4(n: int = 2_000_000, seed: int = 4) -> list[Check]:
    out = []
    for metric, target in (("hs", 0.242379), ("bures", 0.0733389)):
        est = measures.separability_mc(metric, 4, n, seed)
        out.append(_est(est, target, 4, f"{metric} 15-d separability probability", nsigma=4, floor=0.01))
    return out


# ---------------------------------------------------------------------------
# criterion 5

EQ11_TARGETS = {("bures", "volume"): 0.938275, ("kubo-mori", "volume"): 0.910768, ("average", "volume"): 0.903281,
                ("wigner-yanase", "volume"): 0.919585, ("bures", "hyperarea"): 0.940364}
EXACT_A = {(3, 3): 325909584 * sp.sqrt(3) / (464375 * sp.pi**6), (4, 3): 8834477652 * sp.sqrt(3) / (3109375 * sp.pi**6)}
EXACT_B = {(3, 3): 5070990172248 * sp.sqrt(3) / (464375 * sp.pi**6),
           (4, 3): 33503284082268 * sp.sqrt(3) / (3109375 * sp.pi**6)}
RATIO = {(3, 3): Fraction(31119, 2), (4, 3): Fraction(11377, 3)}
QUAD_TOL = 1e-4


def criterion5_fits(pairs=((3, 3), (4, 3))) -> list[Check]:
    out = []
    for m1, m2 in pairs:
        a, b = weightfit.fit_two_term(m1, m2)
        out.append(_rel(b / a, float(RATIO[(m1, m2)]), 5e-7, 5, f"fit({m1},{m2}) b/a = {RATIO[(m1, m2)]}"))
        out.append(_rel(a, float(EXACT_A[(m1, m2)]), 5e-7, 5, f"fit({m1},{m2}) a (exact form)"))
        out.append(_rel(b, float(EXACT_B[(m1, m2)]), 5e-7, 5, f"fit({m1},{m2}) b (exact form)"))
    return out


def criterion5(include_fits: bool = True) -> list[Check]:
    out: list[Check] = []
    eq11 = weightfit.single_power_e3()
    vol, area = weightfit.hs_targets(4)
    out.append(_rel(weightfit.integrate_form(eq11, "hs", "volume", rtol=1e-10), vol, 5e-4, 5,
                    "eq11 HS separable volume"))
    out.append(_rel(weightfit.integrate_form(eq11, "hs", "hyperarea", rtol=1e-10), area, 5e-4, 5,
                    "eq11 HS separable hyperarea"))
    for (metric, q), target in EQ11_TARGETS.items():
        out.append(_rel(weightfit.predict(eq11, metric, q).ratio, target, 5e-3, 5, f"eq11 {metric} {q} ratio"))
    km_area = weightfit.integrate_form(eq11, "kubo-mori", "hyperarea")
    km_prob = weightfit.boundary_probability(eq11, "kubo-mori")
    out.append(_rel(km_area, 3.99861e-5, 5e-3, 5, "eq11 KM hyperarea (reported)"))
    out.append(_rel(km_prob, 0.0214689, 5e-3, 5, "eq11 KM boundary probability (reported)"))
    if include_fits:
        out.extend(criterion5_fits())
    forms = {}
    for m1, m2 in ((3, 3), (4, 3)):
        forms[(m1, m2)] = weightfit.fit_two_term_form(m1, m2)
        dev = weightfit.max_indicator_deviation(forms[(m1, m2)])
        out.append(Check(5, f"fit({m1},{m2}) five indicators within 5%", dev <= 0.05 + QUAD_TOL, dev, 0.05,
                         f"0.05 + {QUAD_TOL:g}"))
    bl = weightfit.blend([(forms[(3, 3)], weightfit.BLEND_WEIGHT), (forms[(4, 3)], 1 - weightfit.BLEND_WEIGHT)])
    dev = weightfit.max_indicator_deviation(bl)
    out.append(Check(5, "blend five indicators within 3.61% + 0.5%", dev <= 0.0361 + 0.005, dev, 0.0361, "+0.005"))
    return out


# ---------------------------------------------------------------------------
# criterion 6

def criterion6() -> list[Check]:
    c = weightfit.fit_qutrit()
    form = weightfit.single_power_e5(c)
    area = weightfit.predict(form, "hs", "hyperarea")
    bv = weightfit.predict(form, "bures", "volume")
    ba = weightfit.predict(form, "bures", "hyperarea")
    return [
        _rel(c, 986304.0, 0.01, 6, "qutrit fitted constant 986304"),
        _rel(area.ratio, 1.0, 0.015, 6, "qutrit HS hyperarea reproduced"),
        _rel(bv.ratio, 1.82587, 0.02, 6, "qutrit Bures volume ratio 1.82587"),
        _rel(ba.ratio, 1.91223, 0.02, 6, "qutrit Bures hyperarea ratio 1.91223"),
    ]


# ---------------------------------------------------------------------------
# criterion 7

def criterion7(n_ks: int = 1_000_000, n_mono: int = 1_000_000, seed: int = 7) -> list[Check]:
    out = []
    rng = np.random.default_rng(seed)
    forms = [weightfit.single_power_e3(), weightfit.two_term(1.26, 19673.7, 3, 3), weightfit.two_term(5.1, 19412.2, 4, 3)]
    L = rng.dirichlet(np.ones(4), 200).T
    perm_ok = True
    for form in forms:
        ref = weightfit.eval_W(form, L)
        perm_ok &= all(np.array_equal(weightfit.eval_W(form, L[list(p)]), ref) for p in itertools.permutations(range(4)))
    L6 = rng.dirichlet(np.ones(6), 50).T
    ref6 = weightfit.eval_W(weightfit.single_power_e5(), L6)
    perm_ok &= all(np.array_equal(weightfit.eval_W(weightfit.single_power_e5(), L6[list(p)]), ref6)
                   for p in itertools.permutations(range(6)))
    dens_ok = True
    for metric in measures.MetricKind:
        ref = measures.simplex_density(metric, L)
        for p in itertools.permutations(range(4)):
            # products over pairs are reordered by a permutation: compare to round-off
            dens_ok &= bool(np.allclose(measures.simplex_density(metric, L[list(p)]), ref, rtol=1e-12, atol=0))
    out.append(Check(7, "W forms permutation invariant (exact, 24 and 720 permutations)", bool(perm_ok)))
    out.append(Check(7, "simplex densities permutation invariant", bool(dens_ok)))

    mono = True
    for spec in (scenarios.ScenarioSpec(), scenarios.ScenarioSpec(diag_mode="full-real-9d")):
        lv = scenarios.evaluate_levels(spec, n_mono, seed)
        f = lv["feasible-only"].separable.value
        s = lv["fully-separable"].separable.value
        for mid in ("one-2x2-pt-minor", "one-3x3-pt-minor"):
            mono &= f >= lv[mid].separable.value >= s
    out.append(Check(7, "volume nonincreasing under added PT constraints", bool(mono)))

    for metric in ("hs", "bures"):
        d = measures.ks_against_quadrature(metric, 4, n_ks, seed)
        out.append(Check(7, f"{metric} eigenvalue marginal KS distance", d < 0.01, d, 0.01, "< 0.01"))

    worst = 0.0
    for k, p, face in ((2, 0, False), (2, 3, False), (2, 3, True), (2, 4, False), (2, 4, True),
                       (3, 3, False), (3, 3, True)):
        exact = float(weightfit.exact_hs_moment(k, p, 4, face))
        worst = max(worst, abs(weightfit.hs_moment(k, p, 4, face) / exact - 1))
    out.append(Check(7, "moment integrals vs rational oracle (10 digits)", worst < 1e-10, worst, 1e-10, "rel"))
    return out


# ---------------------------------------------------------------------------

def run(suite: str = "all", budget: int = 10_000_000) -> list[Check]:
    """Run a suite: 'exact' (deterministic criteria), 'mc' (sampling criteria) or 'all'."""
    if suite not in SUITES:
        raise ValueError(f"suite must be one of {SUITES}")
    checks: list[Check] = []
    if suite in ("exact", "all"):
        checks += criterion1() + criterion3() + criterion5() + criterion6()
    if suite in ("mc", "all"):
        checks += criterion2(budget) + criterion4(min(budget, 10_000_000))
        checks += criterion7(min(budget, 1_000_000), min(budget, 1_000_000))
    return checks


def all_passed(checks) -> bool:
    return all(c.passed for c in checks if c.gating)

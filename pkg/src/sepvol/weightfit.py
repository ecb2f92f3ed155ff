"""Symmetric eigenvalue weighting functions W and cross-metric predictions.

A separable volume is modelled as ``unitary_volume(n) * integral(W * mu)``
over the eigenvalue simplex, and a separable hyperarea by the same integral
of W restricted to the face ``l_n = 0`` against the face density.  W is
fitted to the HS conjectures and then used to predict the other metrics.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction

import numpy as np

from .integrate import QuadratureSpec, quad_simplex
from .measures import (MetricKind, constant_table, density_values, face_values,
                       unitary_volume, vandermonde_sq)

log = logging.getLogger(__name__)

EQ11_COEFF = 6086.0
EQ11_EXPONENT = Fraction(53, 20)
QUTRIT_EXPONENT = Fraction(9, 5)
QUTRIT_COEFF = 986304.0
BLEND_WEIGHT = 0.570347

NON_HS_INDICATORS = (
    (MetricKind.BURES, "volume"),
    (MetricKind.KUBO_MORI, "volume"),
    (MetricKind.AVERAGE, "volume"),
    (MetricKind.WIGNER_YANASE, "volume"),
    (MetricKind.BURES, "hyperarea"),
)

_E_FLOOR = 1e-300


class SingularFitError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class Term:
    """coeff * e_k(lambda) ** power"""

    coeff: float
    k: int
    power: Fraction


@dataclass(frozen=True)
class WeightingForm:
    kind: str
    n: int
    terms: tuple[Term, ...] = ()
    components: tuple[tuple["WeightingForm", float], ...] = ()
    label: str = ""

    def flat_terms(self) -> tuple[Term, ...]:
        if self.kind != "blend":
            return self.terms
        out = []
        for form, weight in self.components:
            out.extend(Term(t.coeff * weight, t.k, t.power) for t in form.flat_terms())
        return tuple(out)

    @property
    def params(self) -> dict:
        if self.kind == "blend":
            return {"components": [{"form": f.label or f.kind, "weight": w} for f, w in self.components]}
        return {"terms": [{"coeff": t.coeff, "e": t.k, "power": str(t.power)} for t in self.terms]}


def single_power_e3(coeff: float = EQ11_COEFF, power=EQ11_EXPONENT) -> WeightingForm:
    return WeightingForm("single-power-e3", 4, (Term(coeff, 3, Fraction(power)),), label="eq11")


def two_term(a: float, b: float, m1: int, m2: int) -> WeightingForm:
    return WeightingForm("two-term-e2-e3", 4, (Term(a, 2, Fraction(m1)), Term(b, 3, Fraction(m2))),
                         label=f"two-term({m1},{m2})")


def single_power_e5(coeff: float = QUTRIT_COEFF, power=QUTRIT_EXPONENT) -> WeightingForm:
    return WeightingForm("single-power-e5", 6, (Term(coeff, 5, Fraction(power)),), label="qutrit")


def constant_form(value: float = 1.0, n: int = 4) -> WeightingForm:
    return WeightingForm("constant", n, (Term(value, 0, Fraction(1)),), label="constant")


def elementary_symmetric(L, k: int) -> np.ndarray:
    """e_k of the columns of an (n, m) array (or of a single vector)."""
    L = np.asarray(L, dtype=float)
    if k == 0:
        return np.ones(L.shape[1:])
    e = [np.ones(L.shape[1:])] + [np.zeros(L.shape[1:]) for _ in range(k)]
    for row in L:
        for j in range(k, 0, -1):
            e[j] = e[j] + row * e[j - 1]
    return e[k]


def _power(x, p: Fraction):
    if p.denominator == 1:
        return x ** int(p)
    return np.exp(float(p) * np.log(np.maximum(x, _E_FLOOR)))


def _eval_terms(terms, L):
    # sorting makes the value bit-for-bit invariant under permutations
    L = np.sort(np.asarray(L, dtype=float), axis=0)
    out = np.zeros(L.shape[1:])
    for t in terms:
        out = out + t.coeff * _power(elementary_symmetric(L, t.k), t.power)
    return out


def eval_W(form: WeightingForm, lam):
    lam = np.asarray(getattr(lam, "lam", lam), dtype=float)
    single = lam.ndim == 1
    L = lam[:, None] if single else lam
    if L.shape[0] != form.n:
        raise ValueError(f"form expects {form.n} eigenvalues, got {L.shape[0]}")
    out = _eval_terms(form.flat_terms(), L)
    return float(out[0]) if single else out


def eval_W_face(form: WeightingForm, P):
    """W on the face l_n = 0, given the n-1 positive eigenvalues."""
    P = np.asarray(P, dtype=float)
    single = P.ndim == 1
    P = P[:, None] if single else P
    L = np.vstack([P, np.zeros((1,) + P.shape[1:])])
    out = _eval_terms(form.flat_terms(), L)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# basis integrals

def _alpha(metric: MetricKind) -> float:
    return 0.5 if metric.monotone else 1.0


@lru_cache(maxsize=None)
def basis_integral(metric: str, n: int, face: bool, k: int, power: Fraction,
                   rtol: float = 1e-10, qmc_points: int = 21) -> float:
    """unitary_volume(n) * integral of e_k^power against the metric measure."""
    metric = MetricKind.parse(metric)
    term = (Term(1.0, k, power),)
    if face:
        def f(P):
            return _eval_terms(term, np.vstack([P, np.zeros((1,) + P.shape[1:])])) * face_values(metric, P, n=n)
        m = n - 1
    else:
        def f(L):
            return _eval_terms(term, L) * density_values(metric, L)
        m = n
    if m >= 5:
        spec = QuadratureSpec(m - 1, rtol=max(rtol, 1e-2))
    else:
        spec = QuadratureSpec(m - 1, rtol=rtol)
    return unitary_volume(n) * quad_simplex(f, m, spec, alpha=_alpha(metric), qmc_points=qmc_points)


def integrate_form(form: WeightingForm, metric, quantity: str = "volume", rtol: float = 1e-5,
                   **kw) -> float:
    """Predicted separable volume or hyperarea of ``form`` under ``metric``.

    The default tolerance suits all metrics; the Kubo-Mori logarithmic corner
    singularity stalls tanh-sinh refinement near 1e-6.
    """
    metric = MetricKind.parse(metric)
    kw["rtol"] = rtol
    face = _face(quantity)
    return math.fsum(t.coeff * basis_integral(metric.value, form.n, face, t.k, t.power, **kw)
                     for t in form.flat_terms())


def _face(quantity: str) -> bool:
    if quantity not in ("volume", "hyperarea"):
        raise ValueError(f"quantity must be 'volume' or 'hyperarea', got {quantity!r}")
    return quantity == "hyperarea"


# ---------------------------------------------------------------------------
# fitting

def hs_targets(n: int = 4) -> tuple[float, float]:
    system = "2x2" if n == 4 else "2x3"
    table = constant_table()
    return table[("hs", system, "sep-volume")].decimal, table[("hs", system, "sep-hyperarea")].decimal


def fit_two_term(m1: int, m2: int, targets: tuple[float, float] | None = None,
                 rtol: float = 1e-10) -> tuple[float, float]:
    """Coefficients (a, b) of a e2^m1 + b e3^m2 matching HS volume and hyperarea."""
    if not (1 <= m1 <= 4 and 1 <= m2 <= 4):
        raise ValueError("exponents must lie in [1, 4]")
    vol, area = targets or hs_targets(4)
    M = np.array([
        [basis_integral("hs", 4, False, 2, Fraction(m1), rtol), basis_integral("hs", 4, False, 3, Fraction(m2), rtol)],
        [basis_integral("hs", 4, True, 2, Fraction(m1), rtol), basis_integral("hs", 4, True, 3, Fraction(m2), rtol)],
    ])
    # rows have very different scales; condition the column-normalized system
    scale = np.abs(M).max(axis=0)
    Ms = M / scale
    if abs(np.linalg.det(Ms)) < 1e-12 * np.abs(Ms).max() ** 2:
        raise SingularFitError(f"moment matrix is singular for m1={m1}, m2={m2}")
    a, b = np.linalg.solve(Ms, [vol, area]) / scale
    if a < 0 or b < 0:
        log.warning("negative fitted coefficient for m1=%d, m2=%d: a=%g b=%g", m1, m2, a, b)
    return float(a), float(b)


def fit_two_term_form(m1: int, m2: int, **kw) -> WeightingForm:
    a, b = fit_two_term(m1, m2, **kw)
    return two_term(a, b, m1, m2)


def fit_qutrit(target: float | None = None, power=QUTRIT_EXPONENT, qmc_points: int = 21) -> float:
    """Constant c so that c * e5^power reproduces the 2x3 HS separable volume."""
    target = target if target is not None else hs_targets(6)[0]
    moment = basis_integral("hs", 6, False, 5, Fraction(power), qmc_points=qmc_points)
    return target / moment


def blend(components) -> WeightingForm:
    comps = tuple((f, float(w)) for f, w in components)
    if not comps:
        raise ValueError("blend needs at least one component")
    total = math.fsum(w for _, w in comps)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"blend weights must sum to 1, got {total}")
    n = {f.n for f, _ in comps}
    if len(n) != 1:
        raise ValueError("blended forms must share the eigenvalue count")
    label = " + ".join(f"{w:g}*{f.label or f.kind}" for f, w in comps)
    return WeightingForm("blend", n.pop(), components=comps, label=label)


# ---------------------------------------------------------------------------
# predictions

@dataclass(frozen=True)
class PredictionReport:
    form: str
    metric: str
    quantity: str
    predicted: float
    conjectured: float | None
    ratio: float | None = field(default=None)

    def __post_init__(self):
        if self.ratio is None and self.conjectured:
            object.__setattr__(self, "ratio", self.predicted / self.conjectured)

    def to_dict(self) -> dict:
        return {"form": self.form, "metric": self.metric, "quantity": self.quantity,
                "predicted": _fmt(self.predicted), "conjectured": _fmt(self.conjectured),
                "ratio": _fmt(self.ratio)}


def _fmt(x):
    return None if x is None else float(f"{x:.15g}")


def predict(form: WeightingForm, metric, quantity: str = "volume", **kw) -> PredictionReport:
    metric = MetricKind.parse(metric)
    system = "2x2" if form.n == 4 else "2x3"
    key = (metric.value, system, "sep-volume" if quantity == "volume" else "sep-hyperarea")
    entry = constant_table().get(key)
    predicted = integrate_form(form, metric, quantity, **kw)
    return PredictionReport(form.label or form.kind, metric.value, quantity, predicted,
                            None if entry is None else entry.decimal)


def boundary_probability(form: WeightingForm, metric, **kw) -> float:
    """Separable share of the rank-deficient boundary under ``metric``."""
    metric = MetricKind.parse(metric)
    sep = integrate_form(form, metric, "hyperarea", **kw)
    total = basis_integral(metric.value, form.n, True, 0, Fraction(1), kw.get("rtol", 1e-5))
    return sep / total


def indicator_reports(form: WeightingForm) -> list[PredictionReport]:
    return [predict(form, m, q) for m, q in NON_HS_INDICATORS]


def max_indicator_deviation(form: WeightingForm) -> float:
    return max(abs(r.ratio - 1.0) for r in indicator_reports(form))


def reports_to_json(reports, path=None) -> str:
    text = json.dumps({"schema": "sepvol.predictions/1", "rows": [r.to_dict() for r in reports]}, indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def reports_to_csv(reports, path=None) -> str:
    buf = io.StringIO()
    cols = ["form", "metric", "quantity", "predicted", "conjectured", "ratio"]
    writer = csv.DictWriter(buf, fieldnames=cols)
    writer.writeheader()
    for r in reports:
        writer.writerow({k: ("" if v is None else v) for k, v in r.to_dict().items()})
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# shape diagnostics

@dataclass
class SchurResult:
    classification: str
    convex_witnesses: list = field(default_factory=list)
    concave_witnesses: list = field(default_factory=list)
    n_pairs: int = 0


def compare_pair(form: WeightingForm, p, q, rtol: float = 1e-12) -> tuple[float, float, int]:
    """W(p), W(q) and the sign of W(p) - W(q) (0 when equal within rtol)."""
    wp, wq = eval_W(form, np.asarray(p, float)), eval_W(form, np.asarray(q, float))
    diff = wp - wq
    if abs(diff) <= rtol * max(abs(wp), abs(wq), 1e-300) or diff == 0:
        return wp, wq, 0
    return wp, wq, 1 if diff > 0 else -1


def schur_classify(form: WeightingForm, n_draws: int = 20000, seed: int = 0,
                   max_witnesses: int = 5) -> SchurResult:
    """Search majorization-comparable pairs (p majorizes q) for monotonicity witnesses.

    p is produced from q by a T-transform moving mass from a smaller to a
    larger component.  A pair with W(p) > W(q) is a witness against
    Schur-concavity, W(p) < W(q) one against Schur-convexity.
    """
    rng = np.random.default_rng(seed)
    n = form.n
    q = rng.dirichlet(np.ones(n), size=n_draws).T
    i, j = (rng.permuted(np.tile(np.arange(n), (n_draws, 1)), axis=1)[:, :2]).T
    cols = np.arange(n_draws)
    hi = np.where(q[i, cols] >= q[j, cols], i, j)
    lo = np.where(q[i, cols] >= q[j, cols], j, i)
    t = rng.random(n_draws) * q[lo, cols]
    p = q.copy()
    p[hi, cols] += t
    p[lo, cols] -= t
    wp, wq = eval_W(form, p), eval_W(form, q)
    diff = wp - wq
    tol = 1e-12 * np.maximum(np.maximum(np.abs(wp), np.abs(wq)), 1e-300)
    up = np.flatnonzero(diff > tol)
    down = np.flatnonzero(diff < -tol)

    def witnesses(idx):
        return [{"p": p[:, k].tolist(), "q": q[:, k].tolist(), "W(p)": float(wp[k]), "W(q)": float(wq[k])}
                for k in idx[:max_witnesses]]

    if len(up) and len(down):
        label = "neither"
    elif len(up):
        label = "convex-evidence"
    elif len(down):
        label = "concave-evidence"
    else:
        label = "degenerate-flat"
    return SchurResult(label, witnesses(up), witnesses(down), n_draws)


def flatness_diagnostic(form: WeightingForm, n_draws: int = 20000, seed: int = 0) -> dict:
    """Spread of W over eigenvalue vectors with purity <= 1/(n-1).

    All such states are separable, so a faithful W would be constant there.
    """
    rng = np.random.default_rng(seed)
    n = form.n
    radius = math.sqrt(1.0 / (n - 1) - 1.0 / n)
    centre = np.full(n, 1.0 / n)
    # uniform directions in the trace-zero hyperplane
    g = rng.standard_normal((n_draws, n))
    g -= g.mean(axis=1, keepdims=True)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n_draws) ** (1.0 / (n - 1))
    L = (centre + r[:, None] * g).T
    L = L[:, (L >= 0).all(axis=0)]
    w = eval_W(form, L)
    centre_value = eval_W(form, centre)
    return {"n_points": int(L.shape[1]), "W_centre": centre_value, "W_min": float(w.min()),
            "W_max": float(w.max()), "relative_spread": float((w.max() - w.min()) / centre_value)}


# ---------------------------------------------------------------------------
# exact rational oracle

def exact_hs_moment(k: int, power: int, n: int = 4, face: bool = False):
    """Exact integral of e_k^power times the bare HS density over the simplex.

    Lebesgue measure on the first n-1 (or n-2 on the face) coordinates;
    monomials integrate as prod(a_i!) / (sum(a) + m - 1)!.
    """
    import sympy as sp

    m = n - 1 if face else n
    lam = sp.symbols(f"l1:{m + 1}")
    gens = lam
    ek = sum(sp.Mul(*c) for c in itertools.combinations(lam, k)) if k <= m else sp.Integer(0)
    dens = sp.Poly(sp.Integer(1), *gens)
    for i in range(m):
        for j in range(i + 1, m):
            dens = dens * sp.Poly((lam[i] - lam[j]) ** 2, *gens)
    if face:
        dens = dens * sp.Poly(sp.Mul(*lam) ** 2, *gens)
    poly = dens * sp.Poly(ek, *gens) ** power if power else dens
    total = sp.Integer(0)
    for exps, coeff in poly.terms():
        num = sp.Mul(*(sp.factorial(a) for a in exps))
        total += coeff * num / sp.factorial(sum(exps) + m - 1)
    return sp.nsimplify(total)


def hs_moment(k: int, power, n: int = 4, face: bool = False, rtol: float = 1e-12) -> float:
    """The same moment by the library quadrature route."""
    term = (Term(1.0, k, Fraction(power)),)
    m = n - 1 if face else n

    def f(L):
        full = np.vstack([L, np.zeros((1,) + L.shape[1:])]) if face else L
        out = _eval_terms(term, full) * vandermonde_sq(L)
        return out * np.prod(L, axis=0) ** 2 if face else out

    return quad_simplex(f, m, QuadratureSpec(m - 1, rtol=rtol))

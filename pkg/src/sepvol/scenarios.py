"""Restricted real two-qubit scenarios: volumes, separable volumes, bounds.

Restricted scenarios fix rho11 = rho22 = r and rho33 = rho44 = 1/2 - r and
zero a subset of the Bloore variables.  The HS volume element of the free
off-diagonals is prod sqrt(rho_ii rho_jj) over the free pairs, which depends
on r alone, so every volume factors into an exact r-integral times the
volume of a region in z-space; only the latter is sampled.

The 9-dimensional real case samples the diagonal from Dirichlet(5/2, ...),
which carries the weight prod rho_ii^(3/2), and rescales by 2^4 to the
Riemannian HS volume.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp
from scipy.special import beta, gammaln

from .core import (Z_ORDER, Z_PAIRS, bloore_compose_batch, cad_z23_bounds, cad_z34_bounds,
                   factor_D, feasible_z, is_separable, pt_minor2, pt_minor3_factor)
from .integrate import Estimate, chunked_map

CONSTRAINTS = ("feasible-only", "one-3x3-pt-minor", "one-2x2-pt-minor", "fully-separable")
DIAG_MODES = ("restricted", "full-real-9d")
REAL_9D_SCALE = 16.0
# matchings of K4: zeroing both edges of one forces B = D
COMPLEMENTARY = (frozenset({"z14", "z23"}), frozenset({"z13", "z24"}), frozenset({"z12", "z34"}))
CROSS = frozenset({"z13", "z14", "z23", "z24"})


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    zeroed: frozenset = frozenset()
    diag_mode: str = "restricted"
    constraint: str = "fully-separable"

    def __post_init__(self):
        z = frozenset(self.zeroed)
        bad = z - set(Z_ORDER)
        if bad:
            raise ValueError(f"unknown Bloore variables {sorted(bad)}")
        if self.diag_mode not in DIAG_MODES:
            raise ValueError(f"diag_mode must be one of {DIAG_MODES}")
        if self.constraint not in CONSTRAINTS:
            raise ValueError(f"constraint must be one of {CONSTRAINTS}")
        if self.diag_mode == "full-real-9d" and z:
            raise ValueError("the 9-dimensional real case zeroes no variables")
        object.__setattr__(self, "zeroed", z)

    @property
    def dimension(self) -> int:
        return 9 if self.diag_mode == "full-real-9d" else 7 - len(self.zeroed)

    @property
    def free(self) -> tuple[str, ...]:
        return tuple(n for n in Z_ORDER if n not in self.zeroed)

    @property
    def trivial(self) -> bool:
        """B = D identically, so every feasible state is separable."""
        return self.diag_mode == "restricted" and any(p <= self.zeroed for p in COMPLEMENTARY)

    def with_constraint(self, constraint: str) -> "ScenarioSpec":
        return ScenarioSpec(self.zeroed, self.diag_mode, constraint)

    def label(self) -> str:
        if self.diag_mode == "full-real-9d":
            return "real-9d"
        return "zero(" + ",".join(sorted(self.zeroed)) + ")" if self.zeroed else "restricted-7d"

    def to_dict(self) -> dict:
        return {"zeroed": sorted(self.zeroed), "diag_mode": self.diag_mode,
                "constraint": self.constraint, "dimension": self.dimension}


@dataclass
class ScenarioResult:
    spec: ScenarioSpec
    total: Estimate
    separable: Estimate
    probability: Estimate
    expected: dict = field(default_factory=dict)

    def zscores(self) -> dict:
        out = {}
        for key in ("total", "separable", "probability"):
            if self.expected.get(key) is not None:
                out[key] = getattr(self, key).zscore(self.expected[key])
        return out

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "label": self.spec.label(),
                "total": self.total.to_dict(), "separable": self.separable.to_dict(),
                "probability": self.probability.to_dict(),
                "expected": {k: v for k, v in self.expected.items()}, "zscores": self.zscores()}


# ---------------------------------------------------------------------------
# exact pieces

def diag_exponents(free) -> tuple[float, float]:
    """(p, q) with prod_free sqrt(rho_ii rho_jj) = r^p (1/2 - r)^q."""
    p = q = 0.0
    for name in free:
        i, j = Z_PAIRS[Z_ORDER.index(name)]
        for k in (i, j):
            if k < 2:
                p += 0.5
            else:
                q += 0.5
    return p, q


def diag_integral(free) -> float:
    """Integral over 0 <= r <= 1/2 of the free-pair volume factor."""
    p, q = diag_exponents(free)
    return 0.5 ** (p + q + 1) * beta(p + 1, q + 1)


def diag_integral_exact(free) -> sp.Expr:
    p, q = diag_exponents(free)
    p, q = sp.Rational(p).limit_denominator(2), sp.Rational(q).limit_denominator(2)
    return sp.simplify(sp.Rational(1, 2) ** (p + q + 1) * sp.gamma(p + 1) * sp.gamma(q + 1) / sp.gamma(p + q + 2))


def real9d_diag_norm() -> float:
    """Integral of prod rho_ii^(3/2) over the diagonal simplex."""
    return math.exp(4 * gammaln(2.5) - gammaln(10.0))


# ---------------------------------------------------------------------------
# catalog

PI = sp.pi
REF_7D = {"total": PI**2 / 15120, "one-3x3-pt-minor": PI**4 / 172032,
            "one-3x3-pt-minor-probability": 45 * PI**2 / 512}
REF_9D = {"total": PI**4 / 60480, "one-2x2-pt-minor": 0.0014242052589,
            "one-2x2-pt-minor-probability": 0.88426997055}
SEP_5D = 0.00532303
PROB_5D = 0.776643
PROB_5D_KNOWN = (frozenset({"z23", "z24"}), frozenset({"z12", "z13"}))
# unit ball intersected with the 3x3 elliptope has volume 1/2 + 2 pi/3 + pi^2/8
SEP_4D = (4 + 16 * PI / 3 + PI**2) / 1536


def stated_values(spec: ScenarioSpec) -> dict:
    """Values as originally stated where they differ from the computed closed forms."""
    if spec.diag_mode != "restricted":
        return {}
    if spec.dimension == 4 and not spec.trivial:
        sep = (4 + PI**2) / 1536
        if _is_star(spec.zeroed):
            return {"separable": sep, "probability": (4 + PI**2) / (4 * PI**2)}
        if _is_triangle(spec.zeroed):
            return {"separable": sep, "probability": 3 * (4 + PI**2) / (32 * PI)}
    if spec.dimension == 5:
        return {"total": PI**2 / 1440}
    return {}


def _edges(zeroed):
    return [Z_PAIRS[Z_ORDER.index(n)] for n in zeroed]


def _is_star(names) -> bool:
    edges = _edges(names)
    return len(edges) == 3 and len(set.intersection(*(set(e) for e in edges))) == 1


def _is_triangle(names) -> bool:
    edges = _edges(names)
    return len(edges) == 3 and len(set(itertools.chain(*edges))) == 3


def classify(spec: ScenarioSpec) -> tuple[str, dict]:
    """Classification and exact targets (sympy) for a restricted scenario."""
    dim = spec.dimension
    zeroed = spec.zeroed
    targets: dict = {}
    if spec.diag_mode == "full-real-9d":
        return "nontrivial", {"total": REF_9D["total"]}
    if dim == 7:
        return "nontrivial", {"total": REF_7D["total"]}
    if spec.trivial:
        targets["probability"] = sp.Integer(1)
    if dim == 3:
        free = spec.free
        (a, b), (c, d) = _edges(free)
        if not {a, b} & {c, d}:
            targets["total"] = sp.Rational(1, 12)
        elif set(free) <= CROSS:
            targets["total"] = PI / 48
        else:
            targets["total"] = PI**2 / 128
    elif dim == 4 and not spec.trivial:
        if _is_star(zeroed):
            targets.update(total=PI**2 / 384, separable=SEP_4D, probability=SEP_4D / (PI**2 / 384))
        elif _is_triangle(zeroed):
            targets.update(total=PI / 144, separable=SEP_4D, probability=SEP_4D / (PI / 144))
    elif dim == 5:
        # zeroing exactly one of z12, z34 changes the diagonal Jacobian
        targets["total"] = PI**3 / 4096 if len(zeroed & {"z12", "z34"}) == 1 else PI**2 / 1440
        if zeroed in PROB_5D_KNOWN:
            targets["probability"] = sp.Float(PROB_5D)
        if zeroed == PROB_5D_KNOWN[0]:
            targets["separable"] = sp.Float(SEP_5D)
    if spec.trivial and "total" in targets:
        targets["separable"] = targets["total"]
    label = "trivial-prob-1" if spec.trivial else "nontrivial"
    return label, targets


def enumerate_scenarios(dimension: int, constraint: str = "fully-separable") -> list[tuple[ScenarioSpec, str, dict]]:
    if dimension == 9:
        spec = ScenarioSpec(frozenset(), "full-real-9d", constraint)
        return [(spec, *classify(spec))]
    if not 3 <= dimension <= 7:
        raise ValueError("restricted scenarios have dimension 3..7 (or 9 for the full real case)")
    out = []
    for zeroed in itertools.combinations(Z_ORDER, 7 - dimension):
        spec = ScenarioSpec(frozenset(zeroed), "restricted", constraint)
        out.append((spec, *classify(spec)))
    return out


def expected_values(spec: ScenarioSpec) -> dict:
    """Float targets for the scenario's constraint level."""
    _, t = classify(spec)
    out = {k: float(v) for k, v in t.items()}
    if spec.diag_mode == "full-real-9d":
        if spec.constraint == "one-2x2-pt-minor":
            out["separable"] = REF_9D["one-2x2-pt-minor"]
            out["probability"] = REF_9D["one-2x2-pt-minor-probability"]
        elif spec.constraint == "feasible-only":
            out["separable"], out["probability"] = out["total"], 1.0
        return out
    if spec.constraint in ("feasible-only", "one-2x2-pt-minor"):
        if "total" in out:
            out["separable"] = out["total"]
        out["probability"] = 1.0
        return out
    if spec.dimension == 7 and spec.constraint == "one-3x3-pt-minor":
        out["separable"] = float(REF_7D["one-3x3-pt-minor"])
        out["probability"] = float(REF_7D["one-3x3-pt-minor-probability"])
        return out
    if spec.constraint != "fully-separable":
        return {k: v for k, v in out.items() if k == "total"}
    return out


def _encode(values: dict) -> dict:
    return {k: {"symbolic": sp.sstr(v), "decimal": float(f"{float(v):.15g}")} for k, v in values.items()}


def export_catalog(path=None) -> str:
    rows = []
    for dim in (3, 4, 5, 7, 9):
        for spec, label, targets in enumerate_scenarios(dim):
            rows.append({"spec": spec.to_dict(), "label": spec.label(), "classification": label,
                         "expected": _encode(targets), "as_stated": _encode(stated_values(spec))})
    rows.append({"spec": ScenarioSpec(constraint="one-3x3-pt-minor").to_dict(), "label": "restricted-7d",
                 "classification": "upper-bound",
                 "expected": {"separable": {"symbolic": sp.sstr(REF_7D["one-3x3-pt-minor"]),
                                            "decimal": float(REF_7D["one-3x3-pt-minor"])}}})
    rows.append({"spec": ScenarioSpec(diag_mode="full-real-9d", constraint="one-2x2-pt-minor").to_dict(),
                 "label": "real-9d", "classification": "upper-bound",
                 "expected": {"separable": {"symbolic": None, "decimal": REF_9D["one-2x2-pt-minor"]}}})
    text = json.dumps({"schema": "sepvol.scenarios/1", "scenarios": rows}, indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


# ---------------------------------------------------------------------------
# Monte Carlo evaluation

def _restricted_levels(z) -> dict:
    feas = feasible_z(z)
    m3 = pt_minor3_factor(z) >= 0
    return {
        "feasible-only": feas,
        # equal diagonal pairs reduce the (1,4) minor of rho_PT to 1 - z23^2
        "one-2x2-pt-minor": feas & (1 - z[:, 3] ** 2 >= 0),
        "one-3x3-pt-minor": feas & m3,
        # leading minors of rho_PT: 1, 1 - z12^2, the 3x3 factor, D
        "fully-separable": feas & m3 & (factor_D(z) >= 0),
    }


def _real9d_levels(diag, z, feas) -> dict:
    # (1,2,3) minor of rho_PT: entry (2,3) holds rho14
    w = z[:, 2] * np.sqrt(diag[:, 0] * diag[:, 3] / (diag[:, 1] * diag[:, 2]))
    m3 = 1 - z[:, 0] ** 2 - z[:, 1] ** 2 - w**2 + 2 * z[:, 0] * z[:, 1] * w >= 0
    sep = feas.copy()
    idx = np.flatnonzero(feas)
    if len(idx):
        sep[idx] = is_separable(bloore_compose_batch(diag[idx], z[idx]), (2, 2))
    return {"feasible-only": feas, "one-2x2-pt-minor": feas & (pt_minor2(diag, z) >= 0),
            "one-3x3-pt-minor": feas & m3, "fully-separable": sep}


def cad_sample(rng, size):
    """z-vectors drawn through the nested limits, with their importance weights."""
    z12, z13, z14 = rng.uniform(-1.0, 1.0, (3, size))
    lo23, hi23 = cad_z23_bounds(z12, z13)
    lo24, hi24 = cad_z23_bounds(z12, z14)
    z23 = lo23 + (hi23 - lo23) * rng.random(size)
    z24 = lo24 + (hi24 - lo24) * rng.random(size)
    lo34, hi34, valid = cad_z34_bounds(z12, z13, z14, z23, z24)
    z34 = lo34 + (hi34 - lo34) * rng.random(size)
    w = 8.0 * (hi23 - lo23) * (hi24 - lo24) * np.where(valid, hi34 - lo34, 0.0)
    z = np.stack([z12, z13, z14, z23, z24, np.where(valid, z34, 0.0)], axis=1)
    return z, w


def _sampler(spec: ScenarioSpec, method: str):
    """(chunk function, scale): the chunk returns weights and per-level masks."""
    if spec.diag_mode == "restricted":
        free_idx = [Z_ORDER.index(f) for f in spec.free]
        k = len(free_idx)

        def chunk(rng, size):
            z = np.zeros((size, 6))
            z[:, free_idx] = rng.uniform(-1.0, 1.0, (size, k))
            return np.ones(size), _restricted_levels(z)

        return chunk, 2.0**k * diag_integral(spec.free)
    scale = REAL_9D_SCALE * real9d_diag_norm()
    if method == "cad":
        def chunk(rng, size):
            z, w = cad_sample(rng, size)
            diag = rng.dirichlet([2.5] * 4, size)
            return w, _real9d_levels(diag, z, w > 0)

        return chunk, scale
    if method != "implicit":
        raise ValueError("method must be 'implicit' or 'cad'")

    def chunk(rng, size):
        diag = rng.dirichlet([2.5] * 4, size)
        z = rng.uniform(-1.0, 1.0, (size, 6))
        return np.ones(size), _real9d_levels(diag, z, feasible_z(z))

    return chunk, scale * 2.0**6


def _level_sums(spec, n, seed, method, threads):
    chunk, scale = _sampler(spec, method)

    def sums(rng, size):
        w, masks = chunk(rng, size)
        wf = np.where(masks["feasible-only"], w, 0.0)
        out = {}
        for level, m in masks.items():
            ws = np.where(m, w, 0.0)
            out[level] = (wf.sum(), (wf * wf).sum(), ws.sum(), (ws * ws).sum(), (wf * ws).sum())
        return out

    parts = chunked_map(sums, n, seed, threads)
    return {level: [math.fsum(p[level][k] for p in parts) for k in range(5)] for level in CONSTRAINTS}, scale


def _estimates(sums, n, scale, seed):
    s_w, s_ww, s_s, s_ss, s_ws = sums
    mw, ms = s_w / n, s_s / n
    var_w = max(s_ww / n - mw * mw, 0.0) / (n - 1)
    var_s = max(s_ss / n - ms * ms, 0.0) / (n - 1)
    cov = (s_ws / n - mw * ms) / (n - 1)
    p = ms / mw if mw > 0 else 0.0
    var_p = max(var_s - 2 * p * cov + p * p * var_w, 0.0) / mw**2 if mw > 0 else 0.0
    # identical masks: kill round-off variance
    if s_s == s_w and s_ss == s_ww:
        p, var_p = 1.0, 0.0
    return (Estimate(scale * mw, scale * math.sqrt(var_w), n, seed),
            Estimate(scale * ms, scale * math.sqrt(var_s), n, seed),
            Estimate(p, math.sqrt(var_p), n, seed))


def evaluate_levels(spec: ScenarioSpec, n: int = 1_000_000, seed: int = 0, method: str = "implicit",
                    threads: int | None = None) -> dict[str, ScenarioResult]:
    """Every constraint level scored on one shared set of draws."""
    if n < 1000:
        raise ValueError("need at least 1000 samples")
    table, scale = _level_sums(spec, n, seed, method, threads)
    out = {}
    for level in CONSTRAINTS:
        s = spec.with_constraint(level)
        out[level] = ScenarioResult(s, *_estimates(table[level], n, scale, seed), expected_values(s))
    return out


def evaluate_scenario(spec: ScenarioSpec, n: int = 1_000_000, seed: int = 0, method: str = "implicit",
                      threads: int | None = None, target_stderr: float | None = None) -> ScenarioResult:
    """Monte Carlo volumes of a scenario at its constraint level.

    ``method`` selects box sampling with implicit constraints or, for the
    9-dimensional case, sampling through the nested limits ("cad").
    """
    res = evaluate_levels(spec, n, seed, method, threads)[spec.constraint]
    if target_stderr is not None and res.separable.stderr > target_stderr:
        raise BudgetExceeded(f"stderr {res.separable.stderr:.3g} above requested {target_stderr:.3g} "
                             f"after {n} samples")
    return res


def upper_bound_run(spec: ScenarioSpec, n: int = 1_000_000, seed: int = 0, **kw) -> ScenarioResult:
    """Volume under a strict subset of the PT constraints: an upper bound on the separable volume."""
    if spec.constraint == "fully-separable":
        raise ValueError("upper_bound_run needs a constraint level below fully-separable")
    return evaluate_scenario(spec, n, seed, **kw)


__all__ = [
    "ScenarioSpec", "ScenarioResult", "enumerate_scenarios", "evaluate_scenario", "upper_bound_run",
    "classify", "expected_values", "export_catalog", "diag_integral", "cad_sample", "evaluate_levels",
    "CONSTRAINTS", "BudgetExceeded",
]

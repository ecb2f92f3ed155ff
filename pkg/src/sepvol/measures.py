"""Eigenvalue measures per metric, the Euler-angle Haar density, samplers,
and the table of exact and conjectured volumes.

Densities are evaluated on arrays of eigenvalue vectors of shape (n, m) or
(n,).  ``normalized=True`` multiplies the bare density by the constant that
makes ``unitary_volume(n) * integral(density)`` a Riemannian volume: flat
Tr(drho^2) for HS, and for a monotone metric with Morozova-Chentsov function
c the line element

    ds^2 = 1/4 [ sum dl_i^2 / l_i + 2 sum_{i<j} (l_i - l_j)^2 c(l_i, l_j) |<i|dU|j>|^2 ].
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from .core import DensityMatrix, is_separable
from .integrate import Estimate, _duffy_tanh_sinh, chunked_map


class MetricKind(str, enum.Enum):
    HS = "hs"
    BURES = "bures"
    KUBO_MORI = "kubo-mori"
    WIGNER_YANASE = "wigner-yanase"
    AVERAGE = "average"

    @classmethod
    def parse(cls, value) -> "MetricKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"km": "kubo-mori", "wy": "wigner-yanase", "avg": "average",
                   "hilbert-schmidt": "hs"}
        return cls(aliases.get(key, key))

    @property
    def monotone(self) -> bool:
        return self is not MetricKind.HS


class DomainError(ValueError):
    """Density evaluated where it is undefined."""


@dataclass(frozen=True)
class SimplexPoint:
    lam: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        if lam.ndim != 1 or lam.shape[0] not in (4, 6):
            raise ValueError("need a vector of 4 or 6 eigenvalues")
        if np.any(lam < -1e-12) or abs(lam.sum() - 1.0) > 1e-9:
            raise ValueError("eigenvalues must be nonnegative and sum to 1")
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class EulerAngles:
    alpha: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if a.shape != (12,):
            raise ValueError("need 12 Euler angles")
        even, odd = a[1::2], a[0::2]  # alpha_2, alpha_4, ... and alpha_1, alpha_3, ...
        if np.any(even < 0) or np.any(even > math.pi / 2 + 1e-12):
            raise ValueError("even-indexed angles must lie in [0, pi/2]")
        if np.any(odd < 0) or np.any(odd > math.pi + 1e-12):
            raise ValueError("odd-indexed angles must lie in [0, pi]")
        object.__setattr__(self, "alpha", a)


# ---------------------------------------------------------------------------
# Haar measure in Euler angles

def haar_density(angles) -> float:
    """Product density over the 12 Euler angles of U(4)/U(1)^4 (alpha_1..alpha_12)."""
    a = angles.alpha if isinstance(angles, EulerAngles) else np.asarray(angles, dtype=float)
    a2, a4, a6, a8, a10, a12 = (a[..., k - 1] for k in (2, 4, 6, 8, 10, 12))
    return (np.cos(a4) ** 3 * np.cos(a6) * np.cos(a10)
            * np.sin(2 * a2) * np.sin(a4) * np.sin(a6) ** 5 * np.sin(2 * a8)
            * np.sin(a10) ** 3 * np.sin(2 * a12))


HAAR_FACTORS = {
    # (angle index, 1-d density, range)
    2: (lambda s: np.sin(2 * s), math.pi / 2),
    4: (lambda s: np.cos(s) ** 3 * np.sin(s), math.pi / 2),
    6: (lambda s: np.cos(s) * np.sin(s) ** 5, math.pi / 2),
    8: (lambda s: np.sin(2 * s), math.pi / 2),
    10: (lambda s: np.cos(s) * np.sin(s) ** 3, math.pi / 2),
    12: (lambda s: np.sin(2 * s), math.pi / 2),
}

HAAR_VOLUME_4 = math.pi**6 / 96


def flag_volume(n: int) -> float:
    """Volume of U(n)/U(1)^n in the metric |<i|dU|j>|^2 per real direction."""
    return math.pi ** (n * (n - 1) // 2) / math.prod(math.factorial(k) for k in range(1, n))


def unitary_volume(n: int) -> float:
    """Volume of the unitary part multiplying every eigenvalue integral.

    For n = 4 this is the integral of ``haar_density``; for n = 6 the flag
    manifold volume itself is used.
    """
    if n == 4:
        return HAAR_VOLUME_4
    return flag_volume(n)


# ---------------------------------------------------------------------------
# Morozova-Chentsov functions

def mc_bures(x, y):
    return 2.0 / (x + y)


def mc_kubo_mori(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    d = x - y
    with np.errstate(all="ignore"):
        r = d / y
        far = np.log1p(r) / d
        near = (1.0 - r / 2 + r * r / 3) / y
    return np.where(np.abs(r) > 1e-5, far, near)


def mc_wigner_yanase(x, y):
    return 4.0 / (np.sqrt(x) + np.sqrt(y)) ** 2


def mc_average(x, y):
    # f = (f_min + f_max)/2 with f_min(t) = 2t/(1+t), f_max(t) = (1+t)/2
    return 4.0 * (x + y) / (x * x + 6.0 * x * y + y * y)


MC_FUNCTIONS = {
    MetricKind.BURES: mc_bures,
    MetricKind.KUBO_MORI: mc_kubo_mori,
    MetricKind.WIGNER_YANASE: mc_wigner_yanase,
    MetricKind.AVERAGE: mc_average,
}


# ---------------------------------------------------------------------------
# eigenvalue densities

def _pairs(L, fn):
    out = np.ones(L.shape[1:])
    for i in range(L.shape[0]):
        for j in range(i + 1, L.shape[0]):
            out = out * fn(L[i], L[j])
    return out


def vandermonde_sq(L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    return _pairs(L, lambda a, b: (a - b) ** 2)


def _inv_sqrt_prod(L):
    out = np.ones(L.shape[1:])
    for row in L:
        out = out / np.sqrt(row)
    return out


def density_constant(metric, n: int, face: bool = False) -> float:
    """Factor turning a bare density into a volume (or hyperarea) element."""
    metric = MetricKind.parse(metric)
    k = n - 1 if face else n
    base = flag_volume(n) / (unitary_volume(n) * math.factorial(k))
    npairs = n * (n - 1) // 2
    if metric is MetricKind.HS:
        return base * math.sqrt(k) * 2.0**npairs
    inner_pairs = k * (k - 1) // 2
    return base * 0.5 ** (k - 1) * 0.5**inner_pairs


def _bare_density(metric, L):
    if metric is MetricKind.HS:
        return vandermonde_sq(L)
    c = MC_FUNCTIONS[metric]
    return _inv_sqrt_prod(L) * _pairs(L, lambda a, b: (a - b) ** 2 * c(a, b))


def _bare_face(metric, P):
    """Face density on the positive eigenvalues P (the zero one removed).

    Pairs with the vanishing eigenvalue contribute l_i for every monotone
    metric (the minimal-metric limit); HS contributes l_i^2 (times 2 in the
    normalization).
    """
    if metric is MetricKind.HS:
        return vandermonde_sq(P) * np.prod(P, axis=0) ** 2
    c = MC_FUNCTIONS[metric]
    return _inv_sqrt_prod(P) * np.prod(P, axis=0) * _pairs(P, lambda a, b: (a - b) ** 2 * c(a, b))


def _as_columns(lam):
    L = np.asarray(lam.lam if isinstance(lam, SimplexPoint) else lam, dtype=float)
    return L if L.ndim > 1 else L[:, None], L.ndim == 1


def simplex_density(metric, lam, normalized: bool = True):
    """Eigenvalue density of ``metric`` at one or many eigenvalue vectors.

    Bare forms: HS gives prod (l_i - l_j)^2; a monotone metric gives
    prod(l)^(-1/2) prod (l_i - l_j)^2 c(l_i, l_j).
    """
    metric = MetricKind.parse(metric)
    L, single = _as_columns(lam)
    if metric.monotone and np.any(L <= 0):
        raise DomainError(f"{metric.value} density needs strictly positive eigenvalues")
    out = _bare_density(metric, L)
    if normalized:
        out = out * density_constant(metric, L.shape[0])
    return float(out[0]) if single else out


def face_density(metric, lam, normalized: bool = True):
    """Density on the rank-deficient face, given n eigenvalues with exactly one zero."""
    metric = MetricKind.parse(metric)
    L, single = _as_columns(lam)
    zero = L <= 0
    if np.any(zero.sum(axis=0) != 1):
        raise DomainError("face density needs exactly one zero eigenvalue")
    order = np.argsort(zero, axis=0, kind="stable")
    P = np.take_along_axis(L, order, axis=0)[:-1]
    out = face_values(metric, P, normalized=normalized, n=L.shape[0])
    return float(out[0]) if single else out


def face_values(metric, P, normalized: bool = True, n: int | None = None):
    """Face density on an (n-1, m) array of the positive eigenvalues."""
    metric = MetricKind.parse(metric)
    P = np.asarray(P, dtype=float)
    n = n or P.shape[0] + 1
    out = _bare_face(metric, P)
    if normalized:
        out = out * density_constant(metric, n, face=True)
    return out


def density_values(metric, L, normalized: bool = True):
    """Vectorized density without domain checks (quadrature kernels)."""
    metric = MetricKind.parse(metric)
    out = _bare_density(metric, np.asarray(L, dtype=float))
    return out * density_constant(metric, L.shape[0]) if normalized else out


# ---------------------------------------------------------------------------
# samplers

def haar_unitaries(rng: np.random.Generator, size: int, dim: int) -> np.ndarray:
    z = (rng.standard_normal((size, dim, dim)) + 1j * rng.standard_normal((size, dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def sample_states(metric, dim: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Batch of random density matrices distributed by the HS or Bures measure."""
    metric = MetricKind.parse(metric)
    if dim not in (4, 6):
        raise ValueError(f"dim must be 4 or 6, got {dim}")
    g = rng.standard_normal((size, dim, dim)) + 1j * rng.standard_normal((size, dim, dim))
    if metric is MetricKind.HS:
        a = g
    elif metric is MetricKind.BURES:
        u = haar_unitaries(rng, size, dim)
        a = (np.eye(dim) + u) @ g
    else:
        raise NotImplementedError(f"no sampler for the {metric.value} measure")
    rho = a @ a.conj().transpose(0, 2, 1)
    tr = np.trace(rho, axis1=1, axis2=2).real
    return rho / tr[:, None, None]


def sample_state(metric, dim: int, seed: int | np.random.Generator) -> DensityMatrix:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return DensityMatrix(sample_states(metric, dim, 1, rng)[0])


def state_stream(metric, dim: int, seed: int, batch: int = 1024):
    """Endless reproducible stream of density matrices."""
    rng = np.random.Generator(np.random.Philox(seed))
    while True:
        yield from (DensityMatrix(m) for m in sample_states(metric, dim, batch, rng))


def separability_mc(metric, dim: int, n: int, seed: int = 0, threads: int | None = None,
                    chunk: int = 100_000) -> Estimate:
    """Share of PPT states among ``n`` draws from the HS or Bures measure."""
    dims = {4: (2, 2), 6: (2, 3)}[dim]

    def count(rng, size):
        return int(np.count_nonzero(is_separable(sample_states(metric, dim, size, rng), dims)))

    hits = sum(chunked_map(count, n, seed, threads, chunk=chunk))
    p = hits / n
    return Estimate(p, math.sqrt(p * (1 - p) / n), n, seed)


def eigenvalue_marginal_cdf(metric, n: int = 4, panels: int = 100, h: float = 0.125):
    """CDF of one eigenvalue (uniformly chosen label) by deterministic quadrature.

    Returns grid points t and F(t).  The outer variable is s = sqrt(t), which
    removes the t^(-1/2) edge behaviour of the monotone densities; the
    remaining eigenvalues are integrated with the tanh-sinh simplex rule.
    """
    metric = MetricKind.parse(metric)
    x, wx = np.polynomial.legendre.leggauss(6)
    edges = np.linspace(0.0, 1.0, panels + 1)
    cum = [0.0]
    for a, b in zip(edges[:-1], edges[1:]):
        part = 0.0
        for xi, wi in zip(x, wx):
            s_ = 0.5 * (a + b) + 0.5 * (b - a) * xi
            t = s_ * s_

            def inner(M, t=t):
                L = np.vstack([np.full(M.shape[1], t), (1.0 - t) * M])
                return density_values(metric, L, normalized=False)

            g = (1.0 - t) ** (n - 2) * _duffy_tanh_sinh(inner, n - 1, h)
            part += 0.5 * (b - a) * wi * g * 2.0 * s_
        cum.append(cum[-1] + part)
    F = np.array(cum) / cum[-1]
    return edges**2, F


def ks_against_quadrature(metric, dim: int = 4, n: int = 1_000_000, seed: int = 0) -> float:
    """Kolmogorov distance between sampled and quadrature eigenvalue marginals on the CDF grid."""
    t, F = eigenvalue_marginal_cdf(metric, dim)

    def one(rng, size):
        w = np.linalg.eigvalsh(sample_states(metric, dim, size, rng))
        return w[np.arange(size), rng.integers(0, dim, size)]

    vals = np.sort(np.concatenate(chunked_map(one, n, seed, chunk=100_000)))
    upper = np.searchsorted(vals, t, side="right") / n
    lower = np.searchsorted(vals, t, side="left") / n
    return float(max(np.abs(upper - F).max(), np.abs(lower - F).max()))


# ---------------------------------------------------------------------------
# constants

CONSTANTS_VERSION = "1"

_sqrt2m1 = sp.sqrt(2) - 1


def _hs_total(n):
    return sp.sqrt(n) * (2 * sp.pi) ** (n * (n - 1) // 2) * sp.prod([sp.gamma(j) for j in range(1, n + 1)]) / sp.gamma(n * n)


def _hs_area(n):
    return (sp.sqrt(n - 1) * (2 * sp.pi) ** (n * (n - 1) // 2) * sp.prod([sp.gamma(j) for j in range(1, n + 2)])
            / (sp.gamma(n) * sp.gamma(n * n - 1)))


def _bures_total(n):
    return sp.Integer(2) ** (1 - n * n) * sp.pi ** sp.Rational(n * n, 2) / sp.gamma(sp.Rational(n * n, 2))


@dataclass(frozen=True)
class ConstantEntry:
    metric: str
    system: str
    quantity: str
    symbolic: sp.Expr | None
    decimal: float
    source: str

    def to_dict(self) -> dict:
        return {"metric": self.metric, "system": self.system, "quantity": self.quantity,
                "symbolic": None if self.symbolic is None else sp.sstr(self.symbolic),
                "decimal": float(f"{self.decimal:.15g}"), "source": self.source}


def _entry(metric, system, quantity, expr, source, decimal=None):
    value = float(sp.N(expr, 30)) if decimal is None else decimal
    return ConstantEntry(metric, system, quantity, expr, value, source)


@lru_cache(maxsize=1)
def constant_table() -> dict[tuple[str, str, str], ConstantEntry]:
    hs_sep_prob = sp.Integer(2) ** 2 * 3 * 7**2 * 11 * 13 * sp.sqrt(3) / (5**4 * sp.pi**6)
    hs_sep_vol = (5 * sp.sqrt(3)) ** -7
    rows = [
        _entry("hs", "2x2", "total-volume", _hs_total(4), "exact (random-matrix theory)"),
        _entry("hs", "2x2", "total-hyperarea", _hs_area(4), "exact (random-matrix theory)"),
        _entry("hs", "2x2", "sep-volume", hs_sep_vol, "conjecture (numerical evidence)"),
        _entry("hs", "2x2", "sep-probability", hs_sep_prob, "conjecture (numerical evidence)"),
        _entry("hs", "2x2", "sep-hyperarea", sp.Rational(1, 3**2 * 5**6), "conjecture (numerical evidence)"),
        _entry("hs", "2x2", "total-volume-derived", sp.simplify(hs_sep_vol / hs_sep_prob),
               "derived: sep-volume / sep-probability"),
        _entry("hs", "2x2-real", "total-volume", sp.pi**4 / 60480, "exact (random-matrix theory)"),
        _entry("bures", "2x2", "total-volume", _bures_total(4), "exact (random-matrix theory)"),
        _entry("bures", "2x2", "sep-volume", sp.Integer(2) ** -15 * _sqrt2m1 / 3, "conjecture (numerical evidence)"),
        _entry("bures", "2x2", "sep-probability", 1680 * _sqrt2m1 / sp.pi**8, "conjecture (numerical evidence)"),
        _entry("bures", "2x2", "sep-hyperarea", sp.Integer(2) ** -14 * 43 * _sqrt2m1 / 39,
               "conjecture (numerical evidence)"),
        _entry("kubo-mori", "2x2", "sep-volume", sp.Integer(2) ** -15 * 10 * _sqrt2m1, "conjecture (numerical evidence)"),
        _entry("average", "2x2", "sep-volume", sp.Integer(2) ** -15 * sp.Rational(29, 9) * _sqrt2m1,
               "conjecture (numerical evidence)"),
        _entry("average", "2x2", "sep-hyperarea", sp.Integer(2) ** -14 * sp.Rational(255, 128) * _sqrt2m1,
               "conjecture (numerical evidence); erratum factor applied"),
        _entry("wigner-yanase", "2x2", "sep-volume", sp.Integer(2) ** -15 * sp.Rational(7, 4) * _sqrt2m1,
               "conjecture (numerical evidence)"),
        _entry("hs", "2x3", "total-volume", _hs_total(6), "exact (random-matrix theory)"),
        _entry("hs", "2x3", "total-hyperarea", _hs_area(6), "exact (random-matrix theory)"),
        _entry("hs", "2x3", "sep-volume",
               1 / (sp.Integer(2) ** 45 * 3 * sp.Integer(5) ** 13 * 7 * sp.sqrt(30)), "conjecture (numerical evidence)"),
        _entry("hs", "2x3", "sep-hyperarea", 1 / (sp.Integer(2) ** 46 * 3 * sp.Integer(5) ** 12),
               "conjecture (numerical evidence)"),
        _entry("bures", "2x3", "total-volume", _bures_total(6), "exact (random-matrix theory)"),
        _entry("bures", "2x3", "sep-volume", sp.Integer(2) ** -77 * 3 * sp.sqrt(8642986 * sp.pi),
               "conjecture (numerical evidence); quoted to 6 digits", decimal=1.03447e-19),
        ConstantEntry("bures", "2x3", "sep-hyperarea", None, 1.45449e-18,
                      "conjecture (numerical evidence); only the 6-digit decimal is reliable"),
    ]
    return {(r.metric, r.system, r.quantity): r for r in rows}


def constants(metric, system: str, quantity: str) -> ConstantEntry:
    key = (MetricKind.parse(metric).value, system, quantity)
    try:
        return constant_table()[key]
    except KeyError:
        raise KeyError(f"no constant for {key}") from None


def constant_value(metric, system: str, quantity: str) -> float:
    return constants(metric, system, quantity).decimal


def export_constants(path=None) -> str:
    payload = {"version": CONSTANTS_VERSION,
               "constants": [e.to_dict() for e in constant_table().values()]}
    text = json.dumps(payload, indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text

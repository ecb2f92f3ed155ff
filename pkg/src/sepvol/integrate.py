"""Monte Carlo estimates with error bars and deterministic simplex quadrature.

Monte Carlo draws come from Philox streams spawned off one ``SeedSequence``,
one stream per fixed-size chunk, so a run is reproducible and independent of
how many worker threads evaluate the chunks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln, ndtri
from scipy.stats import qmc

CHUNK = 250_000
THREADS_ENV = "SEPVOL_THREADS"


class NonFiniteIntegrandError(FloatingPointError):
    def __init__(self, point):
        self.point = np.asarray(point)
        super().__init__(f"integrand is not finite at {self.point.tolist()}")


class QuadratureError(RuntimeError):
    """Target accuracy not reached; carries the best estimate."""

    def __init__(self, message, estimate, error):
        super().__init__(f"{message} (best {estimate!r}, error {error!r})")
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    n_samples: int
    seed: int

    def __post_init__(self):
        if self.stderr < 0 or not self.n_samples > 0:
            raise ValueError("need stderr >= 0 and n_samples > 0")

    def zscore(self, target: float) -> float:
        if self.stderr == 0:
            return 0.0 if self.value == target else math.copysign(math.inf, self.value - target)
        return (self.value - target) / self.stderr

    def agrees(self, target: float, nsigma: float = 3.0, rel_floor: float = 0.005) -> bool:
        return abs(self.value - target) <= max(nsigma * self.stderr, rel_floor * abs(target))

    def scaled(self, factor: float) -> "Estimate":
        return Estimate(self.value * factor, self.stderr * abs(factor), self.n_samples, self.seed)

    def to_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr,
                "n_samples": self.n_samples, "seed": self.seed}


@dataclass(frozen=True)
class QuadratureSpec:
    dimension: int
    rtol: float = 1e-10
    max_level: int = 6

    def __post_init__(self):
        if not 1 <= self.dimension <= 6:
            raise ValueError("dimension must be in [1, 6]")
        if not self.rtol > 0:
            raise ValueError("rtol must be positive")


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @classmethod
    def cube(cls, dim: int, lo: float = -1.0, hi: float = 1.0) -> "Box":
        return cls((lo,) * dim, (hi,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return lo + (hi - lo) * rng.random((n, self.dim))


@dataclass(frozen=True)
class Simplex:
    """Probability simplex of ``n`` components, Lebesgue measure on the first n-1."""

    n: int

    @property
    def dim(self) -> int:
        return self.n

    @property
    def volume(self) -> float:
        return 1.0 / math.factorial(self.n - 1)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.dirichlet(np.ones(self.n), size=n)


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def substreams(seed: int, count: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def chunked_map(fn: Callable[[np.random.Generator, int], np.ndarray], n: int, seed: int,
                threads: int | None = None, chunk: int = CHUNK) -> list:
    """Run ``fn(rng, size)`` over fixed chunks; results come back in chunk order."""
    sizes = [chunk] * (n // chunk) + ([n % chunk] if n % chunk else [])
    rngs = substreams(seed, len(sizes))
    threads = threads or default_threads()
    if threads == 1:
        return [fn(r, s) for r, s in zip(rngs, sizes)]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, rngs, sizes))


def mc_integrate(integrand: Callable[[np.ndarray], np.ndarray], region, n: int, seed: int,
                 threads: int | None = None) -> Estimate:
    """Sample-mean estimate of the integral of ``integrand`` over ``region``.

    ``integrand`` maps an (m, dim) array of points to m values.
    """
    if n < 1000:
        raise ValueError("mc_integrate needs n >= 1000")

    def chunk_sums(rng, size):
        x = region.sample(rng, size)
        f = np.asarray(integrand(x), dtype=float)
        bad = ~np.isfinite(f)
        if bad.any():
            raise NonFiniteIntegrandError(x[np.argmax(bad)])
        return f.sum(), np.square(f).sum()

    sums = chunked_map(chunk_sums, n, seed, threads)
    s1 = math.fsum(s for s, _ in sums)
    s2 = math.fsum(q for _, q in sums)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / (n - 1)
    # constant integrands: kill the round-off variance
    if var <= 1e-28 * max(mean * mean, 1e-300):
        var = 0.0
    vol = region.volume
    return Estimate(mean * vol, math.sqrt(var / n) * vol, n, seed)


def mc_fraction(indicator: Callable[[np.random.Generator, int], np.ndarray], n: int, seed: int,
                threads: int | None = None) -> Estimate:
    """Binomial estimate of a probability from a sampler returning booleans."""
    counts = chunked_map(lambda rng, size: int(np.count_nonzero(indicator(rng, size))),
                         n, seed, threads)
    p = sum(counts) / n
    return Estimate(p, math.sqrt(max(p * (1 - p), 0.0) / n), n, seed)


def merge(estimates: Sequence[Estimate]) -> Estimate:
    """Inverse-variance weighted combination of independent estimates."""
    if not estimates:
        raise ValueError("merge needs at least one estimate")
    ests = sorted(estimates, key=lambda e: (e.stderr, e.value, e.seed, e.n_samples))
    n = sum(e.n_samples for e in ests)
    seed = min(e.seed for e in ests)
    exact = [e for e in ests if e.stderr == 0]
    if exact:
        w = [e.n_samples for e in exact]
        value = math.fsum(e.value * wi for e, wi in zip(exact, w)) / sum(w)
        return Estimate(value, 0.0, n, seed)
    w = [1.0 / e.stderr**2 for e in ests]
    wsum = math.fsum(w)
    value = math.fsum(e.value * wi for e, wi in zip(ests, w)) / wsum
    return Estimate(value, math.sqrt(1.0 / wsum), n, seed)


# ---------------------------------------------------------------------------
# deterministic simplex quadrature

def _tanh_sinh(h: float, cut: float = 1e-30):
    """Nodes u, 1-u and weights of the tanh-sinh rule on [0, 1]."""
    t = np.arange(-6.0, 6.0 + h / 2, h)
    s = 0.5 * math.pi * np.sinh(t)
    with np.errstate(over="ignore"):
        u = 1.0 / (1.0 + np.exp(-2.0 * s))
        v = 1.0 / (1.0 + np.exp(2.0 * s))
        w = h * 0.5 * math.pi * np.cosh(t) / (2.0 * np.cosh(s) ** 2)
    keep = (u > cut) & (v > cut)
    return u[keep], v[keep], w[keep]


def _duffy_tanh_sinh(f, n: int, h: float, block: int = 2_000_000) -> float:
    """Tensor tanh-sinh rule on the collapsed cube mapped to the (n-1)-simplex.

    lambda_1 = u_1, lambda_k = (1-u_1)...(1-u_{k-1}) u_k, lambda_n = prod(1-u_k);
    the Jacobian is prod (1-u_k)^(d-1-k).
    """
    d = n - 1
    u, v, w = _tanh_sinh(h)
    m = len(u)
    if d == 1:
        L = np.stack([u, v])
        return float(np.dot(w, f(L)))
    # outer loop over the first coordinate keeps memory bounded
    grids = np.meshgrid(*([np.arange(m)] * (d - 1)), indexing="ij")
    idx = [g.ravel() for g in grids]
    inner_w = np.ones(idx[0].shape)
    for k, ix in enumerate(idx):
        inner_w = inner_w * w[ix] * v[ix] ** (d - 2 - k)
    total = []
    step = max(1, block // len(inner_w))
    for start in range(0, m, step):
        rows = np.arange(start, min(start + step, m))
        lam = [np.repeat(u[rows], len(inner_w))]
        rem = np.repeat(v[rows], len(inner_w))
        for ix in idx:
            ui, vi = np.tile(u[ix], len(rows)), np.tile(v[ix], len(rows))
            lam.append(rem * ui)
            rem = rem * vi
        lam.append(rem)
        L = np.stack(lam)
        wt = np.repeat(w[rows] * v[rows] ** (d - 1), len(inner_w)) * np.tile(inner_w, len(rows))
        with np.errstate(all="ignore"):
            vals = f(L)
        vals = np.where(np.isfinite(vals), vals, 0.0)
        total.append(np.dot(wt, vals))
    return math.fsum(total)


def _dirichlet_qmc(n: int, alpha: float, m: int, seed: int) -> np.ndarray:
    s = qmc.Sobol(n, scramble=True, seed=seed).random_base2(m)
    s = np.clip(s, 1e-16, 1 - 1e-16)
    if alpha == 1.0:
        g = -np.log1p(-s)
    elif alpha == 0.5:
        g = 0.5 * ndtri(s) ** 2
    else:
        from scipy.special import gammaincinv
        g = gammaincinv(alpha, s)
    return (g / g.sum(axis=1, keepdims=True)).T


def qmc_simplex(f, n: int, alpha: float = 1.0, log2_points: int = 20, replicates: int = 8,
                seed: int = 0, block: int = 1 << 18) -> tuple[float, float]:
    """Randomized quasi-Monte Carlo over the (n-1)-simplex.

    Points follow Dirichlet(alpha, ..., alpha), so an integrand carrying a
    factor prod(lambda)^(alpha-1) is divided by it before averaging.
    Returns (estimate, standard error across scrambled replicates).
    """
    log_norm = n * gammaln(alpha) - gammaln(n * alpha)
    vals = []
    for r in range(replicates):
        L = _dirichlet_qmc(n, alpha, log2_points, seed + r)
        acc = []
        for start in range(0, L.shape[1], block):
            Lb = L[:, start:start + block]
            with np.errstate(all="ignore"):
                fb = f(Lb)
                if alpha != 1.0:
                    fb = fb * np.exp((1.0 - alpha) * np.log(Lb).sum(axis=0))
            fb = np.where(np.isfinite(fb), fb, 0.0)
            acc.append(fb.sum())
        vals.append(math.fsum(acc) / L.shape[1])
    vals = np.array(vals) * math.exp(log_norm)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(replicates))


def quad_simplex(f: Callable[[np.ndarray], np.ndarray], n: int, spec: QuadratureSpec | None = None,
                 alpha: float = 1.0, qmc_points: int = 21, seed: int = 0) -> float:
    """Integral of a symmetric-or-not function over the (n-1)-simplex.

    ``f`` receives an (n, m) array of eigenvalue vectors.  For n <= 4 a
    tanh-sinh rule on the collapsed cube is refined by halving the step until
    successive levels agree to ``spec.rtol``; endpoint algebraic and
    logarithmic singularities on the faces are handled by the rule itself.
    For n in {5, 6} a scrambled-Sobol estimate with Dirichlet(alpha)
    importance is used and ``spec.rtol`` is compared with its replicate
    standard error.
    """
    spec = spec or QuadratureSpec(dimension=n - 1)
    if n - 1 != spec.dimension:
        raise ValueError(f"spec dimension {spec.dimension} does not match simplex of {n} components")
    if n >= 5:
        est, err = qmc_simplex(f, n, alpha=alpha, log2_points=qmc_points, seed=seed)
        if err > spec.rtol * abs(est):
            raise QuadratureError("quasi-Monte Carlo did not reach target", est, err)
        return est
    prev = None
    h = 0.25
    for _ in range(spec.max_level):
        cur = _duffy_tanh_sinh(f, n, h)
        if prev is not None and abs(cur - prev) <= spec.rtol * abs(cur):
            return cur
        if prev is not None and cur == 0.0 and prev == 0.0:
            return 0.0
        prev, h = cur, h / 2
    raise QuadratureError("tanh-sinh refinement did not converge", cur, abs(cur - prev))

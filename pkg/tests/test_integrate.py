import math

import numpy as np
import pytest

from sepvol.integrate import (Box, Estimate, NonFiniteIntegrandError, QuadratureError, QuadratureSpec, Simplex,
                              chunked_map, mc_fraction, mc_integrate, merge, qmc_simplex, quad_simplex, substreams)
from sepvol.weightfit import exact_hs_moment, hs_moment


def test_constant_integrand_over_cube_is_exact():
    e = mc_integrate(lambda x: np.ones(len(x)), Box.cube(6), 10_000, seed=1)
    assert e.value == pytest.approx(64.0) and e.stderr == 0.0


def test_mc_integrate_polynomial():
    e = mc_integrate(lambda x: (x**2).sum(axis=1), Box.cube(3, 0.0, 1.0), 200_000, seed=2)
    assert e.agrees(1.0, nsigma=4, rel_floor=0.0)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_mc_integrate_rejects_small_and_nonfinite():
    with pytest.raises(ValueError):
        mc_integrate(lambda x: x[:, 0], Box.cube(1), 10, seed=0)
    with pytest.raises(NonFiniteIntegrandError):
        mc_integrate(lambda x: 1.0 / (x[:, 0] > 0.5), Box.cube(1, 0.0, 1.0), 2000, seed=0)


def test_simplex_region():
    s = Simplex(4)
    assert s.volume == pytest.approx(1 / 6)
    e = mc_integrate(lambda x: np.ones(len(x)), s, 5000, seed=0)
    assert e.value == pytest.approx(1 / 6)


def test_chunking_is_independent_of_threads():
    fn = lambda rng, size: rng.random(size).sum()  # noqa: E731
    a = chunked_map(fn, 600_000, seed=9, threads=1)
    b = chunked_map(fn, 600_000, seed=9, threads=3)
    assert a == b and len(a) == 3
    assert substreams(1, 2)[0].random() != substreams(1, 2)[1].random()


def test_mc_fraction():
    e = mc_fraction(lambda rng, n: rng.random(n) < 0.3, 100_000, seed=4)
    assert e.agrees(0.3, nsigma=4, rel_floor=0.0)


def test_merge():
    a = Estimate(1.0, 0.1, 100, 3)
    b = Estimate(2.0, 0.2, 100, 1)
    m = merge([a, b])
    assert m.value == pytest.approx((1 / 0.01 + 2 / 0.04) / (1 / 0.01 + 1 / 0.04))
    assert m.stderr == pytest.approx(math.sqrt(1 / (1 / 0.01 + 1 / 0.04)))
    assert m.seed == 1 and m.n_samples == 200
    assert merge([a, b]) == merge([b, a])
    assert merge([a, Estimate(1.5, 0.0, 10, 0)]).value == 1.5
    with pytest.raises(ValueError):
        merge([])


def test_estimate_helpers():
    e = Estimate(2.0, 0.5, 10, 0)
    assert e.zscore(1.0) == pytest.approx(2.0)
    assert e.scaled(-2).stderr == 1.0
    assert e.to_dict()["value"] == 2.0


@pytest.mark.parametrize("k,power,face", [(2, 0, False), (2, 3, False), (2, 3, True), (2, 4, False),
                                          (2, 4, True), (3, 3, False), (3, 3, True), (3, 4, False)])
def test_moments_match_rational_oracle(k, power, face):
    exact = float(exact_hs_moment(k, power, 4, face))
    assert hs_moment(k, power, 4, face) == pytest.approx(exact, rel=1e-10)


def test_known_rational_moments():
    assert str(exact_hs_moment(2, 0)) == "1/378378000"
    assert str(exact_hs_moment(2, 3)) == "31/603891288000"
    assert str(exact_hs_moment(3, 3, face=True)) == "1/4947307485120"


def test_quad_simplex_dirichlet_normalization():
    # integral of prod(l)^(-1/2) over the 3-simplex is Gamma(1/2)^4 / Gamma(2)
    f = lambda L: 1.0 / np.sqrt(np.prod(L, axis=0))  # noqa: E731
    v = quad_simplex(f, 4, QuadratureSpec(3, rtol=1e-9), alpha=0.5)
    assert v == pytest.approx(math.pi**2, rel=1e-8)


def test_qmc_simplex_high_dimension():
    est, err = qmc_simplex(lambda L: np.ones(L.shape[1]), 6, alpha=1.0, log2_points=12)
    assert est == pytest.approx(1 / 120, rel=1e-9)
    est, err = qmc_simplex(lambda L: L[0] * L[1], 6, alpha=1.0, log2_points=14)
    # E[l1 l2] under Dirichlet(1,...,1) on 6 components is 1/42
    assert est == pytest.approx(1 / 42 / 120, rel=1e-3)


def test_quad_simplex_errors():
    with pytest.raises(ValueError):
        quad_simplex(lambda L: L[0], 4, QuadratureSpec(2))
    with pytest.raises(QuadratureError):
        quad_simplex(lambda L: np.sin(1e4 * L[0]), 3, QuadratureSpec(2, rtol=1e-14, max_level=2))

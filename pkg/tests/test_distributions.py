import math

import numpy as np
import pytest
from scipy import integrate, stats

from censcore.distributions import (
    CensoredDist,
    EmpiricalDist,
    GammaDist,
    PointMass,
    empirical_cdf,
    gamma_cdf,
    gamma_quantile,
    gamma_sample,
)
from censcore.errors import DomainError, ValidationError


def test_gamma_cdf_values():
    assert gamma_cdf(GammaDist(1, 1), 2.0) == pytest.approx(1 - math.exp(-2), abs=1e-14)
    assert gamma_cdf(GammaDist(6, 1), 0.0) == 0.0
    shifted = gamma_cdf(GammaDist(3, 1, 2.45), 4.53)
    val, _ = integrate.quad(lambda u: stats.gamma.pdf(u, 3), 0, 4.53 - 2.45)
    assert shifted == pytest.approx(val, abs=1e-12)


def test_gamma_cdf_below_shift_is_zero():
    d = GammaDist(2, 3, 1.5)
    assert gamma_cdf(d, 1.0) == 0.0
    assert gamma_cdf(d, 1.5) == 0.0


def test_gamma_rate_parametrization():
    d = GammaDist(2.5, 4.0)
    assert d.cdf(0.7) == pytest.approx(stats.gamma.cdf(0.7, 2.5, scale=0.25), abs=1e-13)
    assert d.mean() == pytest.approx(2.5 / 4.0)


@pytest.mark.parametrize("p, want, tol", [(0.5, 5.67, 0.005), (0.1, 3.15, 0.005)])
def test_gamma_quantile_table_values(p, want, tol):
    assert gamma_quantile(GammaDist(6, 1), p) == pytest.approx(want, abs=tol)


def test_gamma_quantile_exponential_median():
    assert gamma_quantile(GammaDist(1, 1), 0.5) == pytest.approx(math.log(2), abs=1e-10)


def test_quantile_inverts_cdf():
    for d in [GammaDist(6, 1), GammaDist(0.4, 2.0, 1.0), GammaDist(3, 0.5)]:
        for p in np.linspace(0.01, 0.99, 50):
            assert float(d.cdf(gamma_quantile(d, p))) == pytest.approx(p, abs=1e-8)


def test_quantile_domain():
    with pytest.raises(DomainError):
        gamma_quantile(GammaDist(1, 1), 1.0)
    with pytest.raises(DomainError):
        gamma_quantile(GammaDist(1, 1), -0.1)


@pytest.mark.parametrize("shape, rate, shift", [(0, 1, 0), (1, 0, 0), (1, 1, -1), (math.inf, 1, 0)])
def test_gamma_invalid_parameters(shape, rate, shift):
    with pytest.raises(DomainError):
        GammaDist(shape, rate, shift)


def test_gamma_sample_moments_and_determinism():
    rng = np.random.default_rng(5)
    assert abs(gamma_sample(GammaDist(1, 1), rng, 100_000).mean() - 1) < 0.03
    assert abs(gamma_sample(GammaDist(6, 1), rng, 100_000).mean() - 6) < 0.05
    a = gamma_sample(GammaDist(2, 3, 1), np.random.default_rng(9), 50)
    b = gamma_sample(GammaDist(2, 3, 1), np.random.default_rng(9), 50)
    assert np.array_equal(a, b)
    assert a.min() >= 1


def test_gamma_additivity_ks():
    rng = np.random.default_rng(2024)
    n = 10_000
    s = rng.gamma(3, 1, n) + rng.gamma(2, 1, n) + rng.gamma(1, 1, n)
    res = stats.kstest(s, lambda x: np.asarray(GammaDist(6, 1).cdf(x)))
    assert res.pvalue > 0.01


def test_gamma_density_edges():
    assert GammaDist(1, 2).logpdf(1.0) == pytest.approx(math.log(2) - 2)
    assert GammaDist(1, 1, 3).logpdf(2.0) == -math.inf
    assert GammaDist(0.5, 1).logpdf(0.0) == math.inf
    assert GammaDist(1, 3).pdf(0.0) == pytest.approx(3.0)


def test_gamma_batch():
    d = GammaDist([1, 2, 3], 1.0, [0, 1, 2])
    assert d.batch_shape == (3,)
    assert len(d) == 3
    np.testing.assert_allclose(d.mean(), [1, 3, 5])
    one = d[1]
    assert one.shape == 2 and one.shift == 1
    with pytest.raises(ValueError):
        d._shape[0] = 5


def test_empirical_cdf_counts():
    assert empirical_cdf(EmpiricalDist([1, 2, 3]), 2) == pytest.approx(2 / 3)
    assert empirical_cdf(EmpiricalDist([5]), 4) == 0
    assert empirical_cdf(EmpiricalDist([5]), 5) == 1


def test_empirical_validation():
    with pytest.raises((ValidationError, DomainError)):
        EmpiricalDist([])
    with pytest.raises((ValidationError, DomainError)):
        EmpiricalDist([1.0, math.nan])


def test_point_mass():
    p = PointMass(3.0)
    assert p.cdf(2.999) == 0 and p.cdf(3.0) == 1
    assert p.mean() == 3.0


def test_censored_dist_flattens_nesting():
    base = GammaDist(2, 1)
    c = CensoredDist(CensoredDist(base, 5.0), 3.0)
    assert c.tau == 3.0 and c.base is base
    c2 = CensoredDist(CensoredDist(base, 3.0), 5.0)
    assert c2.tau == 3.0


@pytest.mark.parametrize("dist", [GammaDist(2.5, 1.3, 0.4), EmpiricalDist([1, 1, 4, 7]), PointMass(2.0),
                                  CensoredDist(GammaDist(6, 1), 4.0), CensoredDist(EmpiricalDist([3, 9]), 5.0)])
def test_cdf_nondecreasing(dist):
    grid = np.sort(np.concatenate([np.linspace(-1, 60, 2000), dist.breakpoints()]))
    vals = np.asarray(dist.cdf(grid), dtype=float)
    assert np.all(np.diff(vals) >= 0)
    assert vals[0] == 0 and vals[-1] == pytest.approx(1.0, abs=1e-6)

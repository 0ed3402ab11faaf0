import math
import warnings

import numpy as np
import pytest

from censcore.errors import DomainError, ValidationError
from censcore.inference import ScoreSeries, auto_lag, dm_test, long_run_variance


def test_auto_lag():
    assert auto_lag(1) == 1
    assert auto_lag(8) == 2
    assert auto_lag(9) == 3
    assert auto_lag(500) == 8
    assert auto_lag(1000) == 10
    assert auto_lag(1001) == 11


def test_long_run_variance_lag0_is_population_variance(rng):
    d = rng.normal(size=100)
    assert long_run_variance(d, 0) == pytest.approx(np.var(d), abs=1e-14)


def test_identical_series():
    a = np.arange(20.0)
    r = dm_test(a, a)
    assert r.statistic == 0.0 and r.p_value == 1.0


def test_constant_differential():
    a = np.full(30, 2.0)
    b = np.full(30, 1.0)
    r = dm_test(a, b, lag=0)
    assert r.statistic == math.inf and r.p_value == 0.0
    r = dm_test(b, a, lag=0)
    assert r.statistic == -math.inf and r.p_value == 1.0


def test_antisymmetry_exact(rng):
    for _ in range(20):
        a, b = rng.gamma(2, 1, (2, 200))
        assert dm_test(a, b).statistic == -dm_test(b, a).statistic


def test_scale_equivariance(rng):
    a, b = rng.gamma(2, 1, (2, 300))
    s0 = dm_test(a, b).statistic
    for c in (0.01, 3.0, 1e4):
        assert dm_test(c * a, c * b).statistic == pytest.approx(s0, rel=1e-12, abs=1e-12)


def test_location_invariance_exact_on_dyadic_data(rng):
    # adding a common series preserves differences exactly when no rounding occurs
    a = rng.integers(0, 64, 256) / 8.0
    b = rng.integers(0, 64, 256) / 8.0
    c = rng.integers(-32, 32, 256) / 4.0
    assert dm_test(a + c, b + c).statistic == dm_test(a, b).statistic


def test_location_invariance_floating(rng):
    a, b, c = rng.gamma(2, 1, (3, 300))
    assert dm_test(a + c, b + c).statistic == pytest.approx(dm_test(a, b).statistic, rel=1e-9)


def test_one_sided_direction(rng):
    b = rng.normal(size=200)
    a = b + 0.5 + 0.1 * rng.normal(size=200)  # a scores worse
    r = dm_test(a, b, sided="one")
    assert r.statistic > 0 and r.p_value < 1e-6
    assert dm_test(b, a, sided="one").p_value > 0.999
    assert dm_test(a, b, sided="two").p_value == pytest.approx(2 * r.p_value)


def test_negative_variance_fallback():
    d = np.tile([1.0, -1.0], 10) + 0.01
    with pytest.warns(RuntimeWarning):
        r = dm_test(d, np.zeros_like(d), lag=5)
    assert r.lag == 0


def test_infinite_scores_excluded():
    a = np.r_[np.arange(12.0), math.inf]
    b = np.r_[np.arange(12.0) * 0.5, 0.0]
    r = dm_test(a, b)
    assert r.excluded == 1 and r.n == 12


def test_validation():
    with pytest.raises(ValidationError):
        dm_test(np.ones(5), np.ones(5))
    with pytest.raises(ValidationError):
        dm_test(np.ones(20), np.ones(21))
    with pytest.raises(ValidationError):
        ScoreSeries([1.0, math.nan])
    with pytest.raises(DomainError):
        dm_test(np.ones(20), np.ones(20), sided="left")
    with pytest.raises(DomainError):
        dm_test(np.arange(20.0), np.ones(20), lag=-1)


def test_size_two_sided_lag0():
    rng = np.random.default_rng(99)
    d = rng.standard_normal((2000, 500))
    rej = np.mean([dm_test(x, np.zeros(500), lag=0, sided="two").p_value < 0.05 for x in d])
    assert 0.035 <= rej <= 0.065


def test_result_dict():
    r = dm_test(np.arange(15.0), np.zeros(15))
    d = r.as_dict()
    assert set(d) == {"statistic", "p_value", "lag", "n", "mean_diff", "variance", "sided", "excluded"}
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        dm_test(np.arange(15.0) ** 2, np.zeros(15))

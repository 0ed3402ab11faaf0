import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from censcore import (
    CensoredDist,
    GammaDist,
    RiskDataset,
    auc_s,
    c_index,
    censor_vector,
    crps,
    dm_test,
    interval_score,
    quantile_loss,
    tw_quantile_loss,
    twcrps_gamma,
)
from censcore.workbench import EventSpec, TimeSeriesForecast, first_passage

pos = st.floats(0.01, 50, allow_nan=False)
real = st.floats(-100, 100, allow_nan=False)
level = st.floats(0.01, 0.99)
fast = settings(max_examples=60, deadline=None)


@fast
@given(st.lists(real, min_size=1, max_size=20), pos, pos)
def test_censoring_idempotent_and_nested(x, tau1, tau2):
    once = censor_vector(tau1, x)
    assert np.array_equal(censor_vector(tau1, once), once)
    assert np.array_equal(censor_vector(tau2, once), censor_vector(min(tau1, tau2), x))


@fast
@given(st.floats(0.2, 20), st.floats(0.1, 5), pos, pos)
def test_censored_dist_cdf(shape, rate, tau, s):
    F = GammaDist(shape, rate)
    G = CensoredDist(CensoredDist(F, tau), tau * 2)
    assert G.tau == tau
    want = 1.0 if s >= tau else F.cdf(s)
    assert G.cdf(s) == want


@fast
@given(level, real, real, real)
def test_interval_score_is_sum_of_quantile_losses(alpha, a, b, t):
    lo, hi = min(a, b), max(a, b)
    got = interval_score(alpha, (lo, hi), t)
    want = quantile_loss(alpha / 2, lo, t) + quantile_loss(1 - alpha / 2, hi, t)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-10)
    assert got >= 0


@fast
@given(level, pos, pos, pos)
def test_tw_quantile_loss_flat_beyond_tau(alpha, tau, x, t):
    v = tw_quantile_loss(alpha, tau, x, t)
    if x >= tau and t >= tau:
        assert v == 0
    if x <= tau and t <= tau:
        assert v == quantile_loss(alpha, x, t)
    assert v == tw_quantile_loss(alpha, tau, min(x, tau), min(t, tau))


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 8), st.floats(0.2, 3), st.floats(0.01, 15), st.floats(0.5, 12))
def test_twcrps_gamma_equals_crps_of_censored(shape, rate, t, tau):
    d = GammaDist(shape, rate)
    closed = twcrps_gamma(d, t, tau)
    quad = crps(CensoredDist(d, tau), min(t, tau))
    assert closed == pytest.approx(quad, rel=1e-6, abs=1e-9)


series = st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=30)


@fast
@given(series, st.floats(-3, 3), st.floats(0.5, 3))
def test_first_passage_monotone_in_threshold(values, h, dh):
    ts = TimeSeriesForecast("c", "m", np.arange(len(values), dtype=float), values)
    horizon = len(values) / 2
    lo = first_passage(ts, EventSpec(h, horizon))
    hi = first_passage(ts, EventSpec(h + dh, horizon))
    assert lo.time <= hi.time
    assert lo.time <= horizon and hi.time <= horizon
    assert not (lo.censored and not hi.censored)


@pytest.mark.filterwarnings("ignore:long-run variance")
@fast
@given(st.integers(0, 2**32 - 1), st.sampled_from([0, 1, 3, "auto"]))
def test_dm_antisymmetric(seed, lag):
    rng = np.random.default_rng(seed)
    a = rng.gamma(2, 1, 40)
    b = a + rng.normal(0.1, 1, 40)
    ab = dm_test(a, b, lag=lag, sided="two")
    ba = dm_test(b, a, lag=lag, sided="two")
    assert ab.statistic == pytest.approx(-ba.statistic, rel=1e-12)
    assert ab.p_value == pytest.approx(ba.p_value, rel=1e-9)
    one_ab = dm_test(a, b, lag=lag, sided="one")
    one_ba = dm_test(b, a, lag=lag, sided="one")
    assert one_ab.p_value + one_ba.p_value == pytest.approx(1.0)


@fast
@given(st.integers(0, 2**32 - 1), st.sampled_from([np.square, np.sqrt, lambda p: 0.1 + 0.5 * p]))
def test_discrimination_invariant_to_monotone_transform(seed, f):
    rng = np.random.default_rng(seed)
    t = np.round(rng.gamma(2, 2, 50), 1)
    p = np.round(rng.uniform(size=50), 2)
    assume(len(np.unique(f(np.unique(p)))) == len(np.unique(p)))
    d1 = RiskDataset(p, t, s=4.0, tau=8.0)
    d2 = RiskDataset(f(p), t, s=4.0, tau=8.0)
    assert auc_s(d1) == auc_s(d2)
    assert c_index(d1) == c_index(d2)

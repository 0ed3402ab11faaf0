import json

import numpy as np
import pytest
from scipy import stats

from censcore import synthetic as S
from censcore.distributions import GammaDist
from censcore.errors import DomainError

PROPER_ROWS = {
    "scoring_rules": ["CRPS", "LogS"],
    "scoring_functions": ["squared error (mean)", "absolute error (median)", "QL_0.9 (0.9-quantile)",
                          "IS_0.5 (IQR)"],
    "provisional": ["twCRPS_6", "twCRPS_12", "twIS_0.5,6", "twIS_0.5,12", "twQL_0.9,12"],
}


def test_experiment_shape_and_determinism():
    a = S.generate_experiment(100, seed=3)
    b = S.generate_experiment(100, seed=3)
    assert len(a) == 100
    assert np.array_equal(a.t, b.t)
    assert np.array_equal(a.t, a.x + a.y + a.z)
    case = a[0]
    assert case.t == pytest.approx(case.x + case.y + case.z)
    assert not np.array_equal(a.t, S.generate_experiment(100, seed=4).t)
    with pytest.raises(DomainError):
        S.generate_experiment(0)


def test_marginal_of_t(experiment):
    assert abs(experiment.t.mean() - 6.0) < 0.1
    res = stats.kstest(experiment.t, lambda s: np.asarray(GammaDist(6, 1).cdf(s)))
    assert res.pvalue > 0.01


def test_forecaster_distributions():
    case = S.ExperimentCase(S.EXAMPLE_X, S.EXAMPLE_Y, 0.74)
    lucy = S.forecaster_distribution("LowInfoLucy", case)
    assert (lucy.shape, lucy.rate, lucy.shift) == (6, 1, 0)
    penny = S.forecaster_distribution("PessimisticPenny", case)
    assert penny.shift == pytest.approx(3.79) and (penny.shape, penny.rate) == (1, 2)
    hannah = S.forecaster_distribution("HighInfoHannah", case)
    assert hannah.mean() == pytest.approx(case.x + case.y + 1)
    with pytest.raises(DomainError):
        S.get_forecaster("Nobody")


def test_forecaster_quantile_batch(experiment):
    for f in S.FORECASTERS:
        q = S.forecaster_quantile(f, experiment, 0.9)
        d = S.forecaster_distribution(f, experiment)
        np.testing.assert_allclose(d.cdf(q), 0.9, atol=1e-9)


def test_table_functionals(bundle):
    tab = bundle["functionals"]
    assert tab.value("median", "LowInfoLucy") == pytest.approx(5.67, abs=0.01)
    assert tab.value("0.1-quantile", "LowInfoLucy") == pytest.approx(3.15, abs=0.01)


def test_ranking_law(bundle):
    for table, rows in PROPER_ROWS.items():
        for row in rows:
            tab = bundle[table]
            v = dict(zip(tab.columns, tab.rows[row]))
            others = [c for c in tab.columns if c != "HighInfoHannah"]
            assert all(v["HighInfoHannah"] < v[c] for c in others), row
            assert v["ModInfoMuli"] < v["LowInfoLucy"], row


def test_short_horizon_quantile_loss_exception(bundle):
    # at tau = 6 the 0.9-quantile forecasts of Lucy and Muli are nearly all censored
    v = dict(zip(bundle["provisional"].columns, bundle["provisional"].rows["twQL_0.9,6"]))
    assert abs(v["ModInfoMuli"] - v["LowInfoLucy"]) < 0.01
    assert all(v["HighInfoHannah"] < v[c] for c in v if c != "HighInfoHannah")


def test_impropriety_exhibits(bundle):
    assert bundle["scoring_rules"].ranking("LinS")[0] == "PessimisticPenny"
    prov = bundle["provisional"]
    assert prov.value("survCRPS_2", "PessimisticPenny") < prov.value("survCRPS_2", "HighInfoHannah")
    assert prov.value("CRPS if t<=4", "PessimisticPenny") < prov.value("CRPS if t<=4", "HighInfoHannah")
    assert bundle["discrimination"].ranking("c-index (s=2)")[0] == "ModInfoMuli"
    sf = bundle["scoring_functions"]
    assert sf.value("absolute error (mean)", "PessimisticPenny") < sf.value("absolute error (mean)", "HighInfoHannah")


def test_discrimination_lucy_is_exactly_half(bundle):
    tab = bundle["discrimination"]
    for row in tab.rows:
        assert tab.value(row, "LowInfoLucy") == 0.5


def test_pvalue_matrices(bundle):
    P = bundle["scoring_rules"].pvalues["CRPS"]
    i = bundle["scoring_rules"].columns.index("HighInfoHannah")
    assert np.all(np.delete(P[i], i) < 1e-6)
    assert np.all(np.isnan(np.diag(P)))


def test_bundle_serialization(bundle, tmp_path):
    d = json.loads(bundle.to_json())
    assert d["n"] == S.DEFAULT_N and d["seed"] == S.DEFAULT_SEED
    assert set(d["tables"]) >= {"scoring_rules", "discrimination", "functionals", "scoring_functions",
                                "provisional", "twlogs_z"}
    text = bundle.to_csv(tmp_path / "t.csv")
    assert text.splitlines()[0] == "table,row,forecaster,value"
    assert (tmp_path / "t.csv").read_text() == text
    pv = bundle.pvalues_to_csv()
    assert pv.splitlines()[0] == "table,row,better,worse,p_value"


def test_small_run_without_pvalues():
    b = S.run_experiment_tables(n=500, seed=1, taus=(3.0,), pvalues=False)
    assert "twCRPS_3" in b["provisional"].rows
    assert b["provisional"].pvalues == {}


def test_brier_crossing(experiment):
    curves = {c.label: c for c in S.brier_curves(experiment)}
    omar, muli = curves["OptimisticOmar"], curves["ModInfoMuli"]
    s = omar.abscissa
    material = np.maximum(omar.values, muli.values) > 1e-3
    d = omar.values - muli.values
    assert np.all(d[material & (s <= 6)] < 0)
    assert np.all(d[s >= 8] > 0)


def test_murphy_curves_shape(experiment):
    curves = S.murphy_curves(experiment)
    assert [c.label for c in curves] == list(S.NAMES)
    assert all(c.kind == "murphy" for c in curves)

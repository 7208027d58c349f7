import math

import numpy as np
import pytest
from scipy import stats

from localtime_clt import _rng, kac, pathsim, verify as V


def _normals(seed, n, loc=0.0):
    return _rng.generator(seed).standard_normal(n) + loc


def test_ks_identical_and_shifted():
    a = _normals(1, 10_000)
    r = V.ks_two_sample(a, a.copy())
    assert r.statistic == 0.0 and r.p_value_or_CI == 1.0
    r = V.ks_two_sample(a, _normals(2, 10_000, 3.0))
    assert r.p_value_or_CI < 1e-6 and not r.passed


def test_ks_matches_scipy():
    a, b = _normals(3, 700), _normals(4, 900, 0.1)
    d, p = V.ks_statistic(a, b)
    ref = stats.ks_2samp(a, b, method="asymp")
    assert d == pytest.approx(ref.statistic, abs=1e-15)
    assert p == pytest.approx(stats.kstwobign.sf(d * math.sqrt(700 * 900 / 1600)))


def test_ks_rejects_small_samples():
    with pytest.raises(ValueError):
        V.ks_two_sample(np.zeros(99), np.zeros(500))


def test_ks_null_calibration():
    ps = [V.ks_statistic(_normals(10 + i, 10_000), _normals(1000 + i, 10_000))[1] for i in range(100)]
    assert 0.25 <= np.median(ps) <= 0.75
    rej = np.mean([V.ks_statistic(_normals(5000 + i, 300), _normals(9000 + i, 300))[1] < 0.01
                   for i in range(500)])
    assert 0.002 <= rej <= 0.03


def test_bootstrap_shrinks():
    x = _normals(7, 8000)
    w1 = np.diff(V.bootstrap_ci(x[:2000], 2, n_boot=2000, seed=1))[0]
    w2 = np.diff(V.bootstrap_ci(x[:4000], 2, n_boot=2000, seed=1))[0]
    assert 0.6 <= w2 / w1 <= 0.8


def test_moment_compare():
    x = _normals(9, 5000)
    zero = kac.MomentValue(0.0, 0.0, "closed_form")
    r = V.moment_compare(x, zero, 1, n_boot=2000)
    lo, hi = r.p_value_or_CI
    assert lo < 0 < hi and r.passed
    r = V.moment_compare(x, kac.MomentValue(3.0, 0.0, "closed_form"), 4, n_boot=2000)
    assert r.passed
    r = V.moment_compare(x, kac.MomentValue(1.5, 0.0, "closed_form"), 2, n_boot=2000)
    assert not r.passed
    with pytest.raises(ValueError):
        V.moment_compare(x, zero, 5)


def test_report_invariants():
    with pytest.raises(ValueError):
        V.TestReport("ks_two_sample", 0.1, 1.5, 100, 100, "", True)
    with pytest.raises(ValueError):
        V.TestReport("moment_compare", 0.1, (2.0, 1.0), 100, 0, "", True)
    with pytest.raises(ValueError):
        V.TestReport("anderson", 0.1, 0.5, 100, 100, "", True)


def test_trend_fit_exact_power():
    x = [1, 2, 4, 8]
    r = V.trend_fit(x, [3 * v ** 0.5 for v in x], max_exponent=0.6)
    assert r.statistic == pytest.approx(0.5) and r.passed
    assert not V.trend_fit(x, [v ** 2 for v in x], max_exponent=0.6).passed


def test_limit_law_sampler_audit():
    cfg = pathsim.SimConfig(1.0, 1 / 64, mode="lattice_walk", n_paths=300)
    b = V.sample_limit_law("single_t", 1.0, 300, cfg, 5)
    assert V.audit_limit_law(b) < 1e-14
    recs = b.records()
    assert all(r.constant_used == math.sqrt(64 / 3) for r in recs)
    with pytest.raises(ValueError):
        V.LimitLawSample(recs[0].value * (1 + 1e-15) + 1e-300, recs[0].alpha_or_beta_draw,
                         recs[0].normal_draw, recs[0].constant_used)
    with pytest.raises(ValueError):
        V.LimitLawSample(0.0, 1.0, 0.0, 2.0)


def test_limit_law_single_moments():
    n = 20_000
    cfg = pathsim.SimConfig(1.0, 1 / 128, mode="lattice_walk", n_paths=n)
    b = V.sample_limit_law("single_t", 1.0, n, cfg, 33)
    x = b.values
    assert abs(x.mean()) < 3 * x.std() / math.sqrt(n)
    assert abs(np.var(x) / 22.696 - 1) < 0.05
    for m in (3, 5):
        xm = x ** m
        assert abs(xm.mean()) < 3 * xm.std() / math.sqrt(n)


def test_limit_law_cross_variance():
    n = 10_000
    cfg = pathsim.SimConfig(1.0, 1 / 64, mode="lattice_walk", n_paths=n)
    b = V.sample_limit_law("cross", 1.0, n, cfg, 32)
    pred = 32 / 3 * kac.beta_mean(1, 1).value
    se = np.std(b.values ** 2) / math.sqrt(n)
    assert abs(np.mean(b.values ** 2) - pred) < 3 * se


def test_verify_config_guards():
    with pytest.raises(V.ConfigError):
        V.VerifyConfig(stat_seed=3, law_seed=3)
    with pytest.raises(V.ConfigError):
        V.VerifyConfig(kind="other")
    with pytest.raises(ValueError):
        V.VerifyConfig(mode="brownian", dt=1.0)


def test_dry_run_flags_power():
    res = V.verify_clt(V.VerifyConfig(n_paths=10, n_boot=200, ladder=(16.0,)))
    assert "insufficient power" in res.flags and not res.passed


def test_verify_deterministic_across_workers():
    base = dict(kind="cross_t", ladder=(16.0,), n_paths=150, n_boot=200)
    a = V.verify_clt(V.VerifyConfig(**base, workers=1))
    b = V.verify_clt(V.VerifyConfig(**base, workers=2))
    assert a.samples_csv() == b.samples_csv()
    assert a.law.to_csv() == b.law.to_csv()
    assert a.digest != V.verify_clt(V.VerifyConfig(**{**base, "n_paths": 151})).digest


def test_mean_check_donsker_units():
    cfg = pathsim.SimConfig(4096.0, 1.0, mode="lattice_walk")
    r = V.mean_check([1024, 2048, 4096], cfg, n_paths=3000, seed=4)
    assert r.test_kind == "mean_check"
    assert r.details["within_se"]
    assert all(row["exact"] > 0 for row in r.details["rows"])


def test_horizon_cap():
    assert V.horizon_cap(1.0) == pytest.approx(math.log(1000))
    lam = [V._horizons(3, i, 2.0, 0.5) for i in range(2000)]
    assert max(a for a, _ in lam) <= V.horizon_cap(2.0)
    assert np.mean([a for a, _ in lam]) == pytest.approx(0.5, rel=0.1)


def test_monotonicity_diagnostic():
    cfg = pathsim.SimConfig(1.0, 1 / 16, mode="lattice_walk")
    r = V.monotonicity_diagnostic([0.25, 1.0, 4.0], cfg, h=0.25, n_paths=600, seed=3)
    assert r.passed
    assert r.details["second_moment"][0] < r.details["second_moment"][-1]

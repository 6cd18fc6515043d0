import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfpavp.errors import NoArrivalsError
from cfpavp.montecarlo.rng import substream
from cfpavp.montecarlo.sensing_sim import detect_batch
from cfpavp.sensing import arrival_mgf, arrival_mgf_values, rho_factor, sensing_coverage, single_ap_detection


def test_rho_factor_basic(params):
    assert rho_factor(0.0, params) == 0.0
    r = 37.0
    assert rho_factor(2 * r, params) / rho_factor(r, params) == pytest.approx(2 ** (2 * params.alpha), rel=1e-12)


def test_rho_factor_independent_arithmetic(params):
    delta = 10 ** (-10 / 10)
    gain = 10 ** (20 / 10)
    rcs = 10 ** (20 / 10)
    expected = delta * (4 * math.pi) ** 3 * 100.0 ** (2 * 2.1) / (gain * gain * 10 ** 2 * 2.0 ** 2 * rcs)
    assert rho_factor(100.0, params) == pytest.approx(expected, rel=1e-12)


@given(st.floats(1e-3, 1e4), st.floats(1e-3, 1e4))
def test_rho_factor_increasing(r1, r2):
    from cfpavp.params import default_parameters

    p = default_parameters()
    lo, hi = sorted((r1, r2))
    if hi > lo:
        assert rho_factor(hi, p) > rho_factor(lo, p)


def test_single_ap_detection_limits(params):
    assert single_ap_detection(0.0, params) == 1.0
    q = params.replace(beta=1.0, noise_sensing=0.0)
    assert np.all(single_ap_detection(np.linspace(0, 500, 11), q) == 1.0)


def test_single_ap_detection_bounds(params):
    v = single_ap_detection(np.linspace(0, params.max_range, 501), params)
    assert np.all((v > 0) & (v <= 1))


def test_single_ap_detection_against_simulation(params):
    r, n = 250.0, 100000
    xy = np.tile([[r, 0.0]], (n, 1))
    orient = np.full(n, math.pi)  # boresight towards the target at the origin
    det = detect_batch(np.arange(n), xy, orient, n, params, substream(11, 0), independent_field=True)
    assert det.mean() == pytest.approx(float(single_ap_detection(r, params)), abs=0.01)


def test_coverage_empty_tier_and_range(params):
    assert sensing_coverage(params.replace(beta=1.0)).p_cov_s == 0.0
    assert sensing_coverage(params.replace(max_range=0.0)).p_cov_s == 0.0
    assert sensing_coverage(params.replace(max_range=1e-3)).p_cov_s < 1e-6


def test_coverage_default_value(params):
    cov = sensing_coverage(params)
    assert 0.0 <= cov.p_cov_s <= 1.0
    assert cov.p_cov_s == pytest.approx(0.9475, abs=2e-3)
    assert np.all((cov.p_sg >= 0) & (cov.p_sg <= 1))


def _cov(p, **kw):
    return sensing_coverage(p.replace(**kw)).p_cov_s


def test_coverage_trends(params):
    deltas = [10 ** (x / 10) for x in (-20, -15, -10, -5, 0, 5)]
    v = [_cov(params, detect_threshold=d) for d in deltas]
    assert all(b <= a + 1e-12 for a, b in zip(v, v[1:]))
    rcs = [10 ** (x / 10) for x in (0, 10, 20, 30, 40)]
    v = [_cov(params, rcs_mean=s) for s in rcs]
    assert all(b >= a - 1e-12 for a, b in zip(v, v[1:]))
    lam = np.linspace(10e-6, 300e-6, 10)
    v = [_cov(params, lambda_total=float(l), beta=0.0) for l in lam]
    assert all(b >= a - 1e-12 for a, b in zip(v, v[1:]))
    v = [_cov(params, max_range=R) for R in (50, 100, 250, 500, 1000)]
    assert all(b >= a - 1e-12 for a, b in zip(v, v[1:]))
    assert _cov(params, beam_halfwidth=math.pi) > _cov(params, beam_halfwidth=math.pi / 2)


def test_arrival_mgf_basic(params):
    assert arrival_mgf(0.0, params, 0.7).value == 1.0
    theta = 123.0
    assert arrival_mgf(theta, params, 1.0).value == pytest.approx(math.exp(theta * params.scan_interval), rel=1e-13)


def test_arrival_mgf_series_oracle():
    from cfpavp.params import default_parameters

    p = default_parameters(scan_interval=1e-3)
    ps, theta, T = 0.5, 100.0, 1e-3
    i = np.arange(1, 10 ** 6 + 1, dtype=float)
    terms = np.exp(theta * i * T + (i - 1) * math.log1p(-ps)) * ps
    oracle = math.fsum(terms[::-1])
    assert arrival_mgf(theta, p, ps).value == pytest.approx(oracle, rel=1e-10)


@pytest.mark.parametrize("theta", [-1e4, -50.0, 10.0, 200.0, 300.0])
def test_arrival_mgf_series_oracle_grid(theta):
    ps, T = 0.3, 1e-3
    i = np.arange(1, 10 ** 6 + 1, dtype=float)
    terms = np.exp(theta * i * T + (i - 1) * math.log1p(-ps)) * ps
    oracle = math.fsum(terms[::-1])
    assert float(arrival_mgf_values(theta, ps, T)) == pytest.approx(oracle, rel=1e-10)


def test_arrival_mgf_divergence(params):
    ps = 0.5
    crit = -math.log1p(-ps) / params.scan_interval
    assert not arrival_mgf(crit * 1.01, params, ps).finite
    ev = arrival_mgf(crit * 0.9995, params, ps)
    assert ev.finite and ev.near_pole
    assert arrival_mgf(-1e9, params, 1e-9).finite


def test_arrival_mgf_no_arrivals(params):
    with pytest.raises(NoArrivalsError):
        arrival_mgf(1.0, params, 0.0)


@given(st.floats(0.01, 1.0), st.floats(-2000, 2000), st.floats(-2000, 2000))
def test_arrival_mgf_log_convex(ps, t1, t2):
    T = 1e-3
    vals = arrival_mgf_values(np.array([t1, t2, 0.5 * (t1 + t2)]), ps, T)
    if np.all(np.isfinite(vals)):
        assert math.log(vals[2]) <= 0.5 * (math.log(vals[0]) + math.log(vals[1])) + 1e-12

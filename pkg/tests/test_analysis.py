import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from todakill import analysis, rng
from todakill.config import SimConfig


def gauss(t, y, x):
    return math.exp(-(y - x) ** 2 / (2 * t)) / math.sqrt(2 * math.pi * t)


def test_km_examples():
    assert analysis.km_determinant(0.5, [0.3], [0.1]) == pytest.approx(gauss(0.5, 0.3, 0.1), rel=1e-14)
    assert analysis.km_determinant(1.0, (0.0, 1.0), (0.0, 1.0)) == pytest.approx((1 - math.exp(-1)) / (2 * math.pi), rel=1e-13)
    a = analysis.km_determinant(1.0, (0.0, 1.0), (0.2, 1.4))
    b = analysis.km_determinant(1.0, (1.0, 0.0), (0.2, 1.4))
    assert a == pytest.approx(-b, rel=1e-13)


@given(st.floats(0.1, 3), st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_km_n2_identity(t, v):
    x, y = v[:2], v[2:]
    direct = gauss(t, y[0], x[0]) * gauss(t, y[1], x[1]) - gauss(t, y[1], x[0]) * gauss(t, y[0], x[1])
    assert analysis.km_determinant(t, y, x) == pytest.approx(direct, rel=1e-9, abs=1e-15)


@given(st.floats(0.1, 2), st.floats(0.1, 2), st.floats(0.1, 2), st.floats(0.05, 2))
def test_km_positive_on_chamber_pairs(x1, dx, y1, dy):
    assert analysis.km_determinant(1.0, (y1, y1 + dy), (x1, x1 + dx)) > 0


def test_absorbing_and_bes3():
    assert analysis.absorbing_density(1.0, 0.0, 0.7) == 0.0
    assert analysis.absorbing_density(0.4, 1.3, 0.7) == pytest.approx(analysis.absorbing_density(0.4, 0.7, 1.3))
    total, _ = quad(lambda y: analysis.bes3_density(0.8, y, 0.6), 0, np.inf, epsabs=1e-13)
    assert total == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        analysis.bes3_density(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        analysis.absorbing_density(1.0, 1.0, -1.0)


def test_vicious_examples():
    cfg = SimConfig(1e-2, 1.0, 20_000, seed=1)
    est = analysis.vicious_survival_mc((0.0, 0.6), 1.0, cfg)
    assert abs(est.mean - analysis.vicious_erf(0.6, 1.0)) <= 3 * est.std_err
    early = analysis.vicious_survival_mc((0.0, 0.6), 1.0, cfg, times=[0.01, 1.0])
    assert early[0].mean > 0.99
    far = analysis.vicious_survival_mc((0.0, 20.0, 40.0), 1.0, SimConfig(1e-2, 1.0, 2000))
    assert far.mean == pytest.approx(1.0, abs=1e-12)


def test_vicious_rejects_unordered():
    with pytest.raises(ValueError):
        analysis.vicious_survival_mc((1.0, 0.0), 1.0, SimConfig(1e-2, 1.0, 10))


def test_vicious_constant_report():
    v = analysis.vicious_constant(horizon=100.0, n_paths=200_000, seed=2)
    assert v["measured"] == pytest.approx(v["erf_oracle"], rel=0.03)
    assert v["ratio_to_closed_form"] == pytest.approx(0.5, rel=0.03)


def test_exponent_fit_exact_power_law():
    fit = analysis.exponent_fit([(t, 7 * t ** -1.5) for t in np.geomspace(10, 100, 6)])
    assert fit.slope == pytest.approx(-1.5, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0)


@given(st.floats(-3, 1), st.floats(1e-3, 1e3))
def test_exponent_fit_scale_equivariant(slope, c):
    ts = np.geomspace(1, 50, 6)
    noise = 1 + 0.05 * np.sin(np.arange(6))
    a = analysis.exponent_fit([(t, t ** slope * n) for t, n in zip(ts, noise)])
    b = analysis.exponent_fit([(t, c * t ** slope * n) for t, n in zip(ts, noise)])
    assert b.slope == pytest.approx(a.slope, abs=1e-9)
    assert b.intercept == pytest.approx(a.intercept + math.log(c), abs=1e-9)


def test_exponent_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        analysis.exponent_fit([(1, 1), (2, 0), (3, 1), (4, 1)])
    with pytest.raises(ValueError):
        analysis.exponent_fit([(1, 1), (2, 1)])


def test_distribution_distance_examples():
    a = rng.normals(1, 1, 100_000)[0]
    b = rng.normals(2, 1, 100_000)[0]
    assert analysis.distribution_distance(a, a) == 0.0
    assert analysis.distribution_distance(a, b) <= 0.01
    assert analysis.distribution_distance(a[:5000], a[:5000] + 100) == 1.0
    with pytest.raises(ValueError):
        analysis.distribution_distance(a[:10], b)


def test_distribution_distance_tabulated_cdf():
    from scipy.stats import norm
    a = rng.normals(4, 1, 50_000)[0]
    grid = np.linspace(-8, 8, 3001)
    assert analysis.distribution_distance(a, (grid, norm.cdf(grid))) == pytest.approx(
        analysis.distribution_distance(a, norm.cdf), abs=1e-4)


@pytest.mark.slow
def test_xi_zero_suite_monotone_under_halving():
    kw = dict(n_paths=20_000, seed=3, dt=4e-4)
    # both runs emit the same checks in the same order
    at = analysis.xi_zero_suite(0.04, **kw)
    half = analysis.xi_zero_suite(0.02, **kw)
    for a, b in zip(at, half):
        if a.passed:
            assert b.passed, b.name


def test_report_format():
    checks = [analysis.Check("a", 1.0, 1.0, 0.1, True), analysis.Check("long_name", 2.0, 1.0, 0.1, False)]
    text = analysis.format_report(checks)
    assert text.splitlines()[0].endswith("PASS")
    assert text.splitlines()[1].endswith("FAIL")
    assert checks[0].as_dict() == {"name": "a", "value": 1.0, "target": 1.0, "tol": 0.1, "pass": True}

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from todakill import specfun
from todakill.config import QuadratureSpec

EULER_GAMMA = 0.5772156649015329


def test_gamma_inv_abs_sq_values():
    assert specfun.gamma_inv_abs_sq(0.0) == 0.0
    assert specfun.gamma_inv_abs_sq(1.0) == pytest.approx(3.67608, abs=1e-5)
    assert specfun.gamma_inv_abs_sq(-1.0) == specfun.gamma_inv_abs_sq(1.0)


@given(st.floats(-6, 6))
def test_gamma_inv_abs_sq_matches_gamma(k):
    if abs(k) < 1e-3:
        return
    direct = 1.0 / abs(special.gamma(1j * k)) ** 2
    assert specfun.gamma_inv_abs_sq(k) == pytest.approx(direct, rel=1e-10)


def test_bessel_half_integer_closed_form():
    assert specfun.bessel_k_real(0.5, 1.0) == pytest.approx(math.sqrt(math.pi / 2) / math.e, rel=1e-9)


def test_bessel_k0_at_one():
    assert specfun.bessel_k_real(0.0, 1.0) == pytest.approx(0.4210244382, rel=1e-9)


def test_bessel_k0_log_singularity():
    for z in (1e-3, 1e-5):
        assert specfun.bessel_k_real(0.0, z) + math.log(z / 2) + EULER_GAMMA == pytest.approx(0.0, abs=2e-5)


def test_bessel_underflow_flag():
    val, info = specfun.bessel_k_real(0.0, 800.0, full_output=True)
    assert val == 0.0 and info["flag"] == "underflow"


def test_bessel_rejects_nonpositive_argument():
    with pytest.raises(ValueError):
        specfun.bessel_k_real(0.0, 0.0)
    with pytest.raises(ValueError):
        specfun.bessel_k_imag(1.0, -1.0)


@given(st.floats(0, 5, allow_subnormal=False), st.floats(0.05, 30))  # scipy.special.kv is nan at subnormal order
def test_bessel_real_matches_scipy(nu, z):
    assert specfun.bessel_k_real(nu, z) == pytest.approx(special.kv(nu, z), rel=1e-8, abs=1e-300)


@given(st.floats(0, 4))
def test_bessel_real_decreasing_in_z(nu):
    vals = [specfun.bessel_k_real(nu, z) for z in np.geomspace(0.05, 20, 12)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


@given(st.floats(0, 4), st.floats(0.1, 20))
def test_bessel_real_even_in_order(nu, z):
    assert specfun.bessel_k_real(-nu, z) == specfun.bessel_k_real(nu, z)


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 1.5])
@pytest.mark.parametrize("z", [0.1, 0.5, 1.0, 3.0, 10.0])
def test_cosine_and_cosh_representations_agree(nu, z):
    a = specfun.bessel_k_real(nu, z)
    b = specfun.bessel_k_cosine(nu, z)
    assert abs(a - b) <= 1e-8 * a


def test_bessel_imag_continuity_and_evenness():
    assert specfun.bessel_k_imag(0.0, 2.0) == pytest.approx(specfun.bessel_k_real(0.0, 2.0), rel=1e-10)
    assert specfun.bessel_k_imag(1.0, 1.0) == specfun.bessel_k_imag(-1.0, 1.0)


@given(st.floats(0, 6), st.floats(1e-3, 15))
def test_bessel_imag_matches_mpmath(k, z):
    import mpmath
    ref = float(mpmath.re(mpmath.besselk(1j * k, z)))
    assert specfun.bessel_k_imag(k, z) == pytest.approx(ref, abs=1e-9)


def test_bessel_imag_small_z_branch_limit():
    xi, k, x = 0.01, 1.0, 1.0
    val, info = specfun.bessel_k_imag(xi * k, math.exp(-x / xi), full_output=True)
    assert info["flag"] == "small_z"
    assert xi * k * val == pytest.approx(math.sin(1.0), rel=0.01)


def test_small_z_branch_continuity_at_threshold():
    q = QuadratureSpec()
    for k in (0.3, 1.0, 2.5):
        below = specfun.bessel_k_imag(k, q.small_z * 0.999)
        above = specfun.bessel_k_imag(k, q.small_z * 1.001)
        assert below == pytest.approx(above, rel=1e-2, abs=1e-6)


@given(st.floats(0.01, 8), st.floats(-30, 3))
def test_kt_is_normalized_imaginary_bessel(k, logz):
    import mpmath
    z = math.exp(logz)
    ref = float(mpmath.re(mpmath.besselk(1j * k, z)) * math.sqrt(specfun.gamma_inv_abs_sq(k)))
    assert specfun.kt(k, logz) == pytest.approx(ref, abs=1e-9)


def test_kt_vectorised_equals_scalar():
    ks = np.array([0.1, 1.0, 3.0])
    lz = np.array([-5.0, 0.0, 1.0])
    vec = specfun.kt(ks, lz)
    assert np.array_equal(vec, [specfun.kt(k, l) for k, l in zip(ks, lz)])


@given(st.floats(-700, 30))
def test_log_k0_matches_scipy(logz):
    z = math.exp(logz)
    ref = math.log(special.k0e(z)) - z
    assert specfun.log_k0(logz) == pytest.approx(ref, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 3.0])
def test_wall_limit_of_k0(x):
    for xi in (x / 5, x / 10, x / 40):
        assert abs(xi * specfun.k0(math.exp(-x / xi)) - x) <= 0.2 * xi

"""Gamma factors and Macdonald functions K_nu(z) for real and imaginary order.

Public scalar entry points integrate the cosh representation

    K_nu(z) = int_0^inf exp(-z cosh u) cosh(nu u) du

with adaptive Simpson.  The spectral code needs K_{ik}(z) on large grids of
(k, z) and, crucially, only through the bounded combination

    kt(k, z) = K_{ik}(z) / |Gamma(ik)| = -Im[ exp(i theta) 0F1(; 1+ik; z^2/4) ],
    theta = k log(z/2) - arg Gamma(1+ik),

which follows from the ascending series of I_nu and K_nu = pi (I_-nu - I_nu) / (2 sin nu pi).
Writing it this way removes the exp(+pi k/2) x exp(-pi k/2) cancellation that
ruins direct evaluation at large k.  ``kt`` picks between the leading small-z
term, the series, a scaled Gauss-Legendre quadrature and an mpmath fallback by
comparing rounding-error estimates.
"""
import math
import warnings

import mpmath
import numpy as np
from numba import njit
from scipy.integrate import quad as _quadpack
from scipy.special import gamma as _gamma, loggamma

from .config import QuadratureSpec
from .quad import adaptive_simpson, QuadratureError

EULER_GAMMA = 0.57721566490153286061
LN2 = math.log(2.0)
_EPS = np.finfo(float).eps
# exponent budget for tails on top of log(1/tol)
_TAIL = 45.0

_DEFAULT_QUAD = QuadratureSpec()


def gamma_inv_abs_sq(k):
    """|Gamma(ik)|^-2 = k sinh(pi k) / pi (Euler reflection); zero at k = 0."""
    k = np.asarray(k, dtype=float)
    with np.errstate(over="ignore"):
        out = k * np.sinh(np.pi * k) / np.pi
    return out if out.ndim else float(out)


def _cutoff(nu, z, tol):
    """Upper limit u* where the scaled integrand drops below its peak by exp(-(45 + log 1/tol))."""
    nu = abs(nu)
    drop = _TAIL + math.log(1.0 / tol)
    # log of scaled integrand: nu*u - z*(cosh u - 1), peak where sinh u = nu/z
    u_peak = math.asinh(nu / z) if nu > 0 else 0.0

    def logf(u):
        return nu * u - z * (math.cosh(u) - 1.0)

    target = logf(u_peak) - drop
    lo, hi = u_peak, max(u_peak + 1.0, 1.0)
    while logf(hi) > target:
        hi *= 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if logf(mid) > target:
            lo = mid
        else:
            hi = mid
    return hi


def bessel_k_real(nu, z, quad=None, full_output=False):
    """K_nu(z) for real order by adaptive Simpson on the cosh representation.

    Returns 0.0 with flag ``"underflow"`` when exp(-z) is below the double range.
    """
    quad = quad or _DEFAULT_QUAD
    if not z > 0:
        raise ValueError("argument z must be positive")
    nu = float(nu)
    if z > 700.0:
        val, info = 0.0, {"est_error": 0.0, "flag": "underflow"}
        return (val, info) if full_output else val
    u_star = _cutoff(nu, z, quad.abs_tol)

    def f(u):
        return math.exp(-z * (math.cosh(u) - 1.0)) * math.cosh(nu * u)

    val, err = adaptive_simpson(f, 0.0, u_star, quad.abs_tol, quad.rel_tol * 1e-2)
    scale = math.exp(-z)
    val, err = val * scale, err * scale
    info = {"est_error": err, "flag": "ok"}
    return (val, info) if full_output else val


def bessel_k_cosine(nu, z):
    """K_nu(z) from the Fourier-cosine representation (independent route, nu > -1/2).

    K_nu(z) = 2^nu Gamma(nu + 1/2) / (z^nu sqrt(pi)) int_0^inf cos(z u) (1 + u^2)^(-nu-1/2) du
    """
    nu = abs(float(nu))
    if not z > 0:
        raise ValueError("argument z must be positive")

    def g(u):
        return (1.0 + u * u) ** (-nu - 0.5)

    head_end = max(40.0, 20.0 * math.pi / z)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        head, _ = _quadpack(g, 0.0, head_end, weight="cos", wvar=z,
                            epsabs=1e-15, epsrel=1e-13, limit=2000)
        tail, _ = _quadpack(g, head_end, np.inf, weight="cos", wvar=z, epsabs=1e-16, limlst=200)
    return 2.0 ** nu * _gamma(nu + 0.5) / (z ** nu * math.sqrt(math.pi)) * (head + tail)


def _small_z_imag(k, logz):
    # leading term of the ascending series: Re[Gamma(ik) (z/2)^(-ik)]
    if k == 0.0:
        return -(logz - LN2) - EULER_GAMMA
    lg = loggamma(1j * k)
    return float((np.exp(lg - 1j * k * (logz - LN2))).real)


def bessel_k_imag(k, z, quad=None, full_output=False):
    """K_{ik}(z), real for real k and z > 0.

    Below ``quad.small_z`` the leading-order series branch is used (exact to O(z^2));
    otherwise adaptive Simpson on int exp(-z cosh u) cos(k u) du.
    """
    quad = quad or _DEFAULT_QUAD
    if not z > 0:
        raise ValueError("argument z must be positive")
    k = abs(float(k))
    if z < quad.small_z:
        val = _small_z_imag(k, math.log(z))
        info = {"est_error": abs(val) * z * z, "flag": "small_z"}
        return (val, info) if full_output else val
    if z > 700.0:
        return (0.0, {"est_error": 0.0, "flag": "underflow"}) if full_output else 0.0
    u_star = _cutoff(0.0, z, quad.abs_tol)

    def f(u):
        return math.exp(-z * (math.cosh(u) - 1.0)) * math.cos(k * u)

    val, err = adaptive_simpson(f, 0.0, u_star, quad.abs_tol, quad.rel_tol * 1e-2)
    scale = math.exp(-z)
    info = {"est_error": err * scale, "flag": "quadrature"}
    return (val * scale, info) if full_output else val * scale


# ---------------------------------------------------------------------------
# real order 0 and 1, vectorised and numba-callable

_GL48_X, _GL48_W = np.polynomial.legendre.leggauss(48)


@njit(cache=True, nogil=True)
def k01_scaled(w):
    """(exp(w) K0(w), exp(w) w K1(w)) for w > 0."""
    if w <= 2.0:
        q = 0.25 * w * w
        lg = math.log(0.5 * w) + EULER_GAMMA
        term0 = 1.0   # q^m / (m!)^2
        term1 = 1.0   # q^m / (m! (m+1)!)
        i0 = 0.0
        i1s = 0.0
        s0 = 0.0
        s1 = 0.0
        harm = 0.0
        for m in range(60):
            if m > 0:
                term0 *= q / (m * m)
                term1 *= q / (m * (m + 1.0))
                harm += 1.0 / m
            i0 += term0
            i1s += term1
            s0 += term0 * harm
            # psi(m+1) + psi(m+2) = 2 H_m + 1/(m+1) - 2 gamma
            s1 += term1 * (2.0 * harm + 1.0 / (m + 1.0) - 2.0 * EULER_GAMMA)
            if term0 < 1e-18 * i0 and m > 2:
                break
        k0 = -lg * i0 + s0
        # w K1(w) = 1 + w log(w/2) I1(w) - (w^2/4) sum(...); I1 = (w/2) i1s
        wk1 = 1.0 + 0.5 * w * w * math.log(0.5 * w) * i1s - q * s1
        e = math.exp(w)
        return k0 * e, wk1 * e
    upper = math.acosh(1.0 + 60.0 / w)
    half = 0.5 * upper
    a0 = 0.0
    a1 = 0.0
    for j in range(_GL48_X.shape[0]):
        u = half * (_GL48_X[j] + 1.0)
        ch = math.cosh(u)
        f = math.exp(-w * (ch - 1.0)) * _GL48_W[j]
        a0 += f
        a1 += f * ch
    return a0 * half, a1 * half * w


@njit(cache=True, nogil=True)
def log_k0_from_log(logw):
    """log K0(w) given log w, valid from w = 1e-300 down to underflow and up to w ~ 1e300."""
    if logw < -690.0:
        return math.log(-(logw - math.log(2.0)) - EULER_GAMMA)
    if logw > 700.0:
        return -math.inf
    w = math.exp(logw)
    if w > 1e8:
        return 0.5 * math.log(math.pi / (2.0 * w)) - 1.0 / (8.0 * w) - w
    k0e, _ = k01_scaled(w)
    return math.log(k0e) - w


@njit(cache=True, nogil=True)
def _log_k0_vec(logw, out):
    for i in range(logw.shape[0]):
        out[i] = log_k0_from_log(logw[i])


def log_k0(logz):
    """Vectorised log K0(z) taking log z (so arguments far below 1e-308 are fine)."""
    a = np.asarray(logz, dtype=float)
    out = np.empty(a.size)
    _log_k0_vec(a.ravel(), out)
    out = out.reshape(a.shape)
    return out if out.ndim else float(out)


def k0(z):
    z = np.asarray(z, dtype=float)
    return np.exp(log_k0(np.log(z)))


@njit(cache=True, nogil=True)
def _k_real_vec(nu, w, out):
    # scaled cosh quadrature for general real order, exp(w) K_nu(w)
    for i in range(w.shape[0]):
        wi = w[i]
        n = nu[i]
        # peak of nu*u - w*(cosh u - 1)
        up = math.asinh(n / wi) if n > 0 else 0.0
        fpk = n * up - wi * (math.cosh(up) - 1.0)
        upper = up + 1.0
        while n * upper - wi * (math.cosh(upper) - 1.0) > fpk - 80.0:
            upper *= 1.5
        # split at the peak so both pieces are smooth bumps
        acc = 0.0
        for seg in range(8):
            a = upper * seg / 8.0
            b = upper * (seg + 1) / 8.0
            half = 0.5 * (b - a)
            for j in range(_GL48_X.shape[0]):
                u = a + half * (_GL48_X[j] + 1.0)
                acc += (_GL48_W[j] * half * math.exp(n * u - wi * (math.cosh(u) - 1.0) - fpk)
                        * 0.5 * (1.0 + math.exp(-2.0 * n * u)))
        out[i] = math.log(acc) + fpk


def log_k_real(nu, z):
    """Vectorised log K_nu(z) for real order via a fixed 384-node cosh quadrature."""
    nu, z = np.broadcast_arrays(np.abs(np.asarray(nu, dtype=float)), np.asarray(z, dtype=float))
    out = np.empty(z.size)
    _k_real_vec(nu.ravel().copy(), z.ravel().copy(), out)
    out = out.reshape(z.shape) - z
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# normalised imaginary-order kernel

_KT_TOL = 1e-12


def _theta(k, logz):
    return k * (logz - LN2) - loggamma(1.0 + 1j * k).imag


def _kt_series(k, logz):
    z2 = 0.25 * np.exp(2.0 * logz)
    a = 1j * k
    term = np.ones(k.shape, dtype=complex)
    total = term.copy()
    for m in range(1, 400):
        term = term * (z2 / (m * (m + a)))
        total += term
        if np.all(np.abs(term) <= 1e-18 * np.maximum(np.abs(total), 1e-300)):
            break
    return -(np.exp(1j * _theta(k, logz)) * total).imag


def _kt_quadrature(k, z):
    # kt = exp(-z) sqrt(k sinh(pi k)/pi) int_0^U exp(-z (cosh u - 1)) cos(k u) du
    out = np.empty(k.shape)
    upper = np.arccosh(1.0 + 60.0 / z)
    panels = np.maximum(4, np.ceil(k * upper / 3.0) + np.ceil(upper * np.sqrt(z) / 2.0)).astype(int)
    x16, w16 = np.polynomial.legendre.leggauss(16)
    for p in np.unique(panels):
        sel = np.nonzero(panels == p)[0]
        s = ((np.arange(p)[:, None] + 0.5 * (x16[None, :] + 1.0)) / p).ravel()
        ws = np.tile(w16 * 0.5 / p, p)
        u = upper[sel, None] * s[None, :]
        f = np.exp(-z[sel, None] * (np.cosh(u) - 1.0)) * np.cos(k[sel, None] * u)
        integral = (f * ws[None, :]).sum(axis=1) * upper[sel]
        log_pref = -z[sel] + 0.5 * (np.log(k[sel]) + _log_sinh(np.pi * k[sel]) - math.log(math.pi))
        out[sel] = integral * np.exp(log_pref)
    return out


def _log_sinh(x):
    x = np.asarray(x, dtype=float)
    return x + np.log1p(-np.exp(-2.0 * x)) - LN2


def _kt_mpmath(k, z):
    with mpmath.workdps(30):
        val = mpmath.besselk(1j * mpmath.mpf(k), mpmath.mpf(z))
        norm = mpmath.sqrt(k * mpmath.sinh(mpmath.pi * k) / mpmath.pi)
        return float(mpmath.re(val) * norm)


def kt(k, logz, small_z=1e-6, stats=None):
    """K_{ik}(z)/|Gamma(ik)| for real k (even in k) and z = exp(logz).

    Vectorised over broadcast (k, logz).  ``stats``, when a dict, receives the
    number of points handled by each branch.
    """
    k, logz = np.broadcast_arrays(np.abs(np.asarray(k, dtype=float)), np.asarray(logz, dtype=float))
    shape = k.shape
    k = k.ravel()
    logz = logz.ravel()
    out = np.zeros(k.shape)
    pos = k > 0
    z = np.exp(np.minimum(logz, 700.0))

    # rigorous bound |kt| <= sqrt(k/2pi) exp(pi k/2) sqrt(pi/2z) exp(-z), used for z >= 1
    with np.errstate(divide="ignore", over="ignore"):
        log_bound = (0.5 * np.log(k / (2 * math.pi)) + 0.5 * math.pi * k
                     + 0.5 * np.log(math.pi / (2 * z)) - z)
    negligible = pos & (logz >= 0) & ((log_bound < -70.0) | (logz > 700.0))
    small = pos & ~negligible & (logz < math.log(small_z))
    rest = pos & ~negligible & ~small

    if small.any():
        out[small] = -np.sin(_theta(k[small], logz[small]))

    series = np.zeros(k.shape, dtype=bool)
    quadr = np.zeros(k.shape, dtype=bool)
    slow = np.zeros(k.shape, dtype=bool)
    if rest.any():
        zr, kr = z[rest], k[rest]
        log_mass = np.minimum(zr * zr / (4.0 * np.sqrt(1.0 + kr * kr)), zr)
        with np.errstate(over="ignore"):   # inf just rules a route out
            series_err = 50 * _EPS * np.exp(log_mass)
            quad_err = 50 * _EPS * np.exp(0.5 * np.log(kr / (2 * math.pi)) + 0.5 * math.pi * kr
                                          + 0.5 * np.log(math.pi / (2 * zr)) - zr)
        idx = np.nonzero(rest)[0]
        use_series = series_err <= _KT_TOL
        use_quad = ~use_series & (quad_err <= _KT_TOL)
        series[idx[use_series]] = True
        quadr[idx[use_quad]] = True
        slow[idx[~use_series & ~use_quad]] = True
    if series.any():
        out[series] = _kt_series(k[series], logz[series])
    if quadr.any():
        out[quadr] = _kt_quadrature(k[quadr], z[quadr])
    for i in np.nonzero(slow)[0]:
        out[i] = _kt_mpmath(k[i], z[i])
    if stats is not None:
        for name, mask in (("negligible", negligible), ("small_z", small), ("series", series),
                           ("quadrature", quadr), ("mpmath", slow)):
            stats[name] = stats.get(name, 0) + int(mask.sum())
    out = out.reshape(shape)
    return out if out.ndim else float(out)


def bessel_k_imag_vec(k, logz, small_z=1e-6):
    """K_{ik}(z) on grids, as kt(k, z) * |Gamma(ik)|; K_0 where k == 0."""
    k, logz = np.broadcast_arrays(np.abs(np.asarray(k, dtype=float)), np.asarray(logz, dtype=float))
    out = np.empty(k.shape)
    zero = k == 0
    if zero.any():
        out[zero] = np.exp(log_k0(logz[zero]))
    nz = ~zero
    if nz.any():
        kk = k[nz]
        log_abs_gamma = 0.5 * (math.log(math.pi) - np.log(kk) - _log_sinh(math.pi * kk))
        out[nz] = kt(kk, logz[nz], small_z) * np.exp(log_abs_gamma)
    return out if out.ndim else float(out)


__all__ = [
    "EULER_GAMMA", "QuadratureError", "gamma_inv_abs_sq", "bessel_k_real", "bessel_k_cosine",
    "bessel_k_imag", "kt", "bessel_k_imag_vec", "k01_scaled", "log_k0", "k0", "log_k_real",
    "log_k0_from_log",
]

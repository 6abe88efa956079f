"""Transition densities, survival probabilities and constants by deterministic quadrature.

Wall model (one particle, V(x) = exp(-2x/xi) / (2 xi^2)):

    Q(t, y|x) = (2/pi) int_0^inf exp(-k^2 t/2) kt(xi k, e^{-x/xi}) kt(xi k, e^{-y/xi}) dk

with kt = K_{ik}/|Gamma(ik)| from ``specfun``.  For the two-particle chain the
centre of mass X = x1 + x2 is a free Brownian motion of variance 2t and the gap
r = x2 - x1 sees a wall potential, so

    Q_2(t, y|x) = 2 g_t(X - Y) Q_wall(2t, r' - 2 xi ln 2 | r - 2 xi ln 2; 2 xi),
    g_t(d) = exp(-d^2/4t) / sqrt(4 pi t).

That factorized form is the default; ``mode="full"`` integrates the
two-dimensional spectral integral directly and exists to test it.  Three
particles are handled only with Monte Carlo inner integrals (``mode="mc_assisted"``).
"""
import math
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import erfc, ndtr

from . import rng, specfun
from .config import CHAIN, WALL, DensityResult, Estimate, ModelSpec, QuadratureSpec, as_coords
from .quad import gl_panels, graded_breaks
from .whittaker import psi0_n2, whittaker_zero

_DEFAULT_QUAD = QuadratureSpec()
LN2 = math.log(2.0)


def decay_rate(model, x):
    x = as_coords(x)
    if len(x) != model.n_particles:
        raise ValueError("configuration dimension does not match the model")
    xi = model.xi
    if model.kind == WALL:
        return math.exp(-2.0 * x[0] / xi) / (2.0 * xi * xi)
    return float(np.sum(np.exp(-np.diff(x) / xi))) / (xi * xi)


def sklyanin_density(k):
    """s_N(k) = prod_{j<l} (k_l - k_j) sinh(pi (k_l - k_j)) / pi / ((2 pi)^N N!)."""
    k = np.asarray(k, dtype=float)
    n = k.shape[-1]
    out = np.ones(k.shape[:-1])
    for j, l in combinations(range(n), 2):
        out = out * specfun.gamma_inv_abs_sq(k[..., l] - k[..., j])
    out = out / ((2.0 * math.pi) ** n * math.factorial(n))
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------- wall kernel

def _k_max(t, quad):
    return math.sqrt(2.0 * (math.log(1.0 / quad.abs_tol) + 5.0) / t)


def _k_nodes(t, span, quad, level):
    kmax = _k_max(t, quad)
    panels = (int(math.ceil(kmax * span / 4.0)) + 4) * 2 ** level
    return gl_panels(np.linspace(0.0, kmax, panels + 1), quad.order)


def _modes(k, pts, xi, quad):
    return specfun.kt(xi * k[:, None], -np.asarray(pts)[None, :] / xi, quad.small_z)


def wall_kernel(t, ys, xs, xi, quad=None, level=0):
    """Matrix Q(t, ys[i] | xs[j]) of the wall model on one k-grid."""
    quad = quad or _DEFAULT_QUAD
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    span = max(np.max(np.abs(xs)), 0.0) + max(np.max(np.abs(ys)), 0.0) + 4.0 * xi
    k, w = _k_nodes(t, span, quad, level)
    g = w * np.exp(-0.5 * k * k * t) * (2.0 / math.pi)
    ay = _modes(k, ys, xi, quad)
    ax = ay if ys is xs else _modes(k, xs, xi, quad)
    return (ay * g[:, None]).T @ ax


def wall_kernel_with_error(t, ys, xs, xi, quad=None):
    """Kernel matrix and a pointwise error estimate from doubling the k-panels."""
    quad = quad or _DEFAULT_QUAD
    coarse = wall_kernel(t, ys, xs, xi, quad, 0)
    fine = wall_kernel(t, ys, xs, xi, quad, 1)
    return fine, np.abs(fine - coarse)


def q_wall(t, y, x, xi, quad=None):
    if not t > 0:
        raise ValueError("t must be positive")
    val, err = wall_kernel_with_error(t, [float(y)], [float(x)], xi, quad)
    return DensityResult(float(val[0, 0]), float(err[0, 0]), "quadrature")


def _wall_floor(xi, t, quad):
    # below this point kt(xi k, e^{-y/xi}) < e^{-40} for every k on the grid
    kappa = xi * _k_max(t, quad)
    return -xi * math.log(40.0 + 0.5 * math.pi * kappa + 10.0)


def terminal_nodes(t, x, xi, quad=None, x_hi=None):
    """y-nodes and weights for integrating a wall-model density over its terminal point.

    Covers [x - L sqrt(t), x_hi + L sqrt(t)] cut below at the killing zone.
    """
    quad = quad or _DEFAULT_QUAD
    x_hi = x if x_hi is None else x_hi
    half = quad.box_sigmas * math.sqrt(t)
    lo = max(_wall_floor(xi, t, quad), x - half)
    hi = x_hi + half
    if hi <= lo:
        return np.empty(0), np.empty(0)
    breaks = graded_breaks(lo, hi, 0.5 * math.sqrt(t),
                           refine=[(lo, 10.0 * xi)], refine_width=0.5 * min(xi, math.sqrt(t)))
    return gl_panels(breaks, quad.order)


def _tail_bound(quad):
    return float(erfc(quad.box_sigmas / math.sqrt(2.0)))


def _wall_survival(t, x, xi, quad):
    ys, wy = terminal_nodes(t, x, xi, quad)
    if ys.size == 0:
        return DensityResult(0.0, _tail_bound(quad), "quadrature")
    q, err = wall_kernel_with_error(t, ys, [x], xi, quad)
    value = float(wy @ q[:, 0])
    est = float(wy @ err[:, 0]) + _tail_bound(quad)
    return DensityResult(min(max(value, 0.0), 1.0), est, "quadrature")


# --------------------------------------------------------------------------- chain kernel

def _split2(x):
    x = as_coords(x)
    return x[..., 0] + x[..., 1], x[..., 1] - x[..., 0]


def _com_density(t, dx):
    return np.exp(-dx * dx / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)


def chain2_kernel(t, ys, x, xi, quad=None, level=None):
    """Q_2(t, ys[i] | x) for an array of terminal points of shape (m, 2), factorized.

    Returns values and error estimates.
    """
    quad = quad or _DEFAULT_QUAD
    ys = np.asarray(ys, dtype=float).reshape(-1, 2)
    big_x, r = _split2(x)
    big_y, rp = ys[:, 0] + ys[:, 1], ys[:, 1] - ys[:, 0]
    shift = 2.0 * xi * LN2
    uniq, inv = np.unique(rp, return_inverse=True)
    if level is None:
        h, herr = wall_kernel_with_error(2.0 * t, uniq - shift, [r - shift], 2.0 * xi, quad)
    else:
        h = wall_kernel(2.0 * t, uniq - shift, [r - shift], 2.0 * xi, quad, level)
        herr = np.zeros_like(h)
    g = 2.0 * _com_density(t, big_x - big_y)
    return g * h[inv, 0], g * herr[inv, 0]


def _q_chain2_full(t, y, x, xi, quad, level):
    big_x, r = _split2(x)
    big_y, rp = _split2(y)
    kmax = _k_max(t, quad)
    span = abs(big_x - big_y) / 2 + abs(r) + abs(rp) + 8.0 * xi
    panels = (int(math.ceil(kmax * span / 4.0)) + 4) * 2 ** level
    k, w = gl_panels(np.linspace(-kmax, kmax, panels + 1), quad.order)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    kappa = np.abs(k2 - k1)
    uniq, inv = np.unique(kappa.ravel(), return_inverse=True)
    lw_x = LN2 - r / (2.0 * xi)
    lw_y = LN2 - rp / (2.0 * xi)
    kx = specfun.kt(xi * uniq, lw_x, quad.small_z)[inv].reshape(kappa.shape)
    ky = specfun.kt(xi * uniq, lw_y, quad.small_z)[inv].reshape(kappa.shape)
    phase = np.cos(0.5 * (k1 + k2) * (big_x - big_y))
    integrand = np.exp(-0.5 * t * (k1 * k1 + k2 * k2)) * 4.0 * phase * kx * ky / (8.0 * math.pi ** 2)
    return float(np.einsum("i,ij,j->", w, integrand, w))


def _gh(n):
    u, w = np.polynomial.hermite.hermgauss(n)
    return u, w


def _row_sampler(u, n, seed, tag):
    """Importance samples of one Givental row below top row u, with the row's normaliser.

    Entry b_k has density proportional to exp(-e^{-(b - u_k)} - e^{-(u_{k+1} - b)}), whose
    integral is 2 K_0(2 exp(-(u_{k+1} - u_k)/2)).
    """
    out, log_norm = [], 0.0
    z = rng.normals(seed, 1, n * (len(u) - 1), stream=rng.STREAM_SAMPLES, path0=tag)[0]
    for k in range(len(u) - 1):
        a, c = u[k], u[k + 1]
        grid = np.linspace(a - 8.0, c + 8.0, 4001)
        dens = np.exp(-np.exp(-(grid - a)) - np.exp(-(c - grid)))
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
        cdf /= cdf[-1]
        out.append(np.interp(ndtr(z[k * n:(k + 1) * n]), cdf, grid))
        log_norm += LN2 + specfun.log_k0(LN2 - 0.5 * (c - a))
    return np.array(out), log_norm


def _psi3_imag_mc(kvecs, u, n, seed, tag):
    """psi^{(3)}_{i k}(u) at each row of ``kvecs`` (shape (m, 3)) by importance sampling."""
    (b1, b2), log_norm = _row_sampler(u, n, seed, tag)
    su = float(np.sum(u))
    out = np.empty(len(kvecs), dtype=complex)
    cache = {}
    for i, (k1, k2, k3) in enumerate(kvecs):
        d = abs(k2 - k1)
        if d not in cache:
            if d == 0:
                cache[d] = np.exp(specfun.log_k0(LN2 - 0.5 * (b2 - b1)))
            else:
                lg = 0.5 * (math.log(math.pi / d) - (math.pi * d + math.log1p(-math.exp(-2 * math.pi * d)) - LN2))
                cache[d] = specfun.kt(d, LN2 - 0.5 * (b2 - b1)) * math.exp(lg)
        phase = np.exp(1j * (0.5 * (k1 + k2) * (b1 + b2) + k3 * (su - b1 - b2)))
        out[i] = 2.0 * np.mean(phase * cache[d]) * math.exp(log_norm)
    return out


def _q_chain3_mc(t, y, x, xi, n_samples, seed, gh_nodes=9):
    # Only a rough estimate.  The Sklyanin weight grows like exp(pi sum |dk|) while the
    # matching decay of psi comes from phase cancellation that the inner sampling cannot
    # resolve, so the noise explodes once the nodes reach |k| of a few (t below ~4).
    u, w = _gh(gh_nodes)
    grids = np.meshgrid(u, u, u, indexing="ij")
    uu = np.stack([g.ravel() for g in grids], axis=1)
    ww = (w[:, None, None] * w[None, :, None] * w[None, None, :]).ravel()
    scale = math.sqrt(2.0 / t)
    k = uu * scale
    px = _psi3_imag_mc(xi * k, as_coords(x) / xi, n_samples, seed, 0)
    py = _psi3_imag_mc(xi * k, as_coords(y) / xi, n_samples, seed, 1)
    s = sklyanin_density(xi * k)
    vals = ww * (px * np.conj(py)).real * s * scale ** 3
    return float(np.sum(vals))


def q_chain(t, y, x, model, quad=None, mode="factorized", n_samples=100_000, seed=0):
    quad = quad or _DEFAULT_QUAD
    if model.kind != CHAIN:
        raise ValueError("q_chain needs a chain model")
    if not t > 0:
        raise ValueError("t must be positive")
    n, xi = model.n_particles, model.xi
    y, x = as_coords(y), as_coords(x)
    if len(x) != n or len(y) != n:
        raise ValueError("configuration dimension does not match the model")
    if n == 2 and mode == "factorized":
        val, err = chain2_kernel(t, y[None, :], x, xi, quad)
        return DensityResult(float(val[0]), float(err[0]), "factorized")
    if n == 2 and mode == "full":
        coarse = _q_chain2_full(t, y, x, xi, quad, 0)
        fine = _q_chain2_full(t, y, x, xi, quad, 1)
        return DensityResult(fine, abs(fine - coarse), "quadrature")
    if n == 3 and mode == "mc_assisted":
        a = _q_chain3_mc(t, y, x, xi, n_samples, seed)
        b = _q_chain3_mc(t, y, x, xi, n_samples, seed + 1)
        return DensityResult(0.5 * (a + b), abs(a - b), "mc_assisted")
    raise ValueError(f"q_chain does not support N={n} with mode {mode!r}")


def chain2_terminal_nodes(t, x, xi, quad=None):
    """Gap nodes/weights for integrating a two-particle density over the terminal gap."""
    _, r = _split2(x)
    return terminal_nodes(2.0 * t, r - 2.0 * xi * LN2, 2.0 * xi, quad)


def survival(model, t, x, quad=None):
    """Probability that nobody has been killed by time t."""
    quad = quad or _DEFAULT_QUAD
    if not t > 0:
        raise ValueError("t must be positive")
    x = as_coords(x)
    if len(x) != model.n_particles:
        raise ValueError("configuration dimension does not match the model")
    if model.kind == WALL:
        return _wall_survival(t, float(x[0]), model.xi, quad)
    if model.n_particles == 2:
        r = float(x[1] - x[0])
        res = _wall_survival(2.0 * t, r - 2.0 * model.xi * LN2, 2.0 * model.xi, quad)
        return DensityResult(res.value, res.est_error, "factorized")
    raise ValueError("survival for N >= 3 is available from the Monte Carlo engines only")


# --------------------------------------------------------------------------- conditioned densities

def _log_harmonic(model, pts):
    """log of the ground state: K_0(e^{-x/xi}) for the wall, psi_0(x/xi) for the chain."""
    pts = np.asarray(pts, dtype=float)
    xi = model.xi
    if model.kind == WALL:
        return specfun.log_k0(-pts / xi)
    if model.n_particles == 2:
        return np.log(psi0_n2(pts / xi))
    pts = pts.reshape(-1, model.n_particles)
    return np.log([whittaker_zero(model.n_particles, p / xi) for p in pts])


def _clamp(value, err, method):
    if value < 0 and abs(value) <= err:
        value = 0.0
    return DensityResult(value, err, method)


def conditioned_density_infinite(model, t, y, x, quad=None, **kw):
    """Density of the process conditioned to survive forever (ground-state h-transform)."""
    quad = quad or _DEFAULT_QUAD
    y, x = as_coords(y), as_coords(x)
    if model.kind == WALL:
        q = q_wall(t, y[0], x[0], model.xi, quad)
    else:
        if model.n_particles == 3:
            kw.setdefault("mode", "mc_assisted")
        q = q_chain(t, y, x, model, quad, **kw)
    ratio = math.exp(np.ravel(_log_harmonic(model, y) - _log_harmonic(model, x))[0])
    return _clamp(ratio * q.value, ratio * q.est_error, q.method)


def conditioned_density_finite(model, T, s, x, t, y, quad=None):
    """Density conditioned on survival up to the finite horizon T."""
    quad = quad or _DEFAULT_QUAD
    if not 0 <= s <= t <= T:
        raise ValueError("need 0 <= s <= t <= T")
    y, x = as_coords(y), as_coords(x)
    if t == s:
        raise ValueError("t == s is the degenerate (delta) case")
    if model.kind == WALL:
        q = q_wall(t - s, y[0], x[0], model.xi, quad)
    else:
        q = q_chain(t - s, y, x, model, quad)
    num = survival(model, T - t, y, quad) if T > t else DensityResult(1.0, 0.0, "exact")
    den = survival(model, T - s, x, quad)
    ratio = num.value / den.value
    rel = num.est_error / max(num.value, 1e-300) + den.est_error / den.value
    err = ratio * (q.est_error + abs(q.value) * rel)
    return _clamp(ratio * q.value, err, q.method)


def normalization(model, t, x, quad=None):
    """int P(t, y|x) dy for the eternally conditioned process (should be 1)."""
    quad = quad or _DEFAULT_QUAD
    x = as_coords(x)
    if model.kind == WALL:
        ys, wy = terminal_nodes(t, float(x[0]), model.xi, quad)
        q, err = wall_kernel_with_error(t, ys, x[:1], model.xi, quad)
        ratio = np.exp(_log_harmonic(model, ys) - _log_harmonic(model, x[0]))
    elif model.n_particles == 2:
        # the centre-of-mass factor integrates to one exactly; integrate over the gap
        ys, wy = chain2_terminal_nodes(t, x, model.xi, quad)
        shift = 2.0 * model.xi * LN2
        r = float(x[1] - x[0])
        q, err = wall_kernel_with_error(2.0 * t, ys, [r - shift], 2.0 * model.xi, quad)
        gaps = ys + shift
        ratio = psi0_n2(np.stack([np.zeros_like(gaps), gaps], -1) / model.xi) / psi0_n2(
            np.array([0.0, r]) / model.xi)
    else:
        raise ValueError("normalization is implemented for the wall and two-particle chain")
    value = float(wy @ (ratio * q[:, 0]))
    est = float(wy @ (ratio * err[:, 0])) + _tail_bound(quad)
    return DensityResult(value, est, "quadrature")


def conditioned_gap_cdf(t, r, xi, quad=None):
    """CDF of the terminal gap of the eternally conditioned two-particle chain.

    Returns (gaps, cdf) on the quadrature nodes, normalised to end at 1.
    """
    quad = quad or _DEFAULT_QUAD
    shift = 2.0 * xi * LN2
    ys, wy = terminal_nodes(2.0 * t, r - shift, 2.0 * xi, quad)
    q = wall_kernel(2.0 * t, ys, [r - shift], 2.0 * xi, quad, 1)[:, 0]
    gaps = ys + shift
    dens = q * np.exp(specfun.log_k0(LN2 - gaps / (2.0 * xi)) - specfun.log_k0(LN2 - r / (2.0 * xi)))
    cdf = np.cumsum(np.maximum(dens, 0.0) * wy)
    return gaps, cdf / cdf[-1]


def conditioned_wall_mixture_cdf(t, starts, xi, quad=None):
    """CDF of y under P(t, y|x) with x drawn uniformly from ``starts`` (wall model)."""
    quad = quad or _DEFAULT_QUAD
    starts = np.asarray(starts, dtype=float)
    lo = max(_wall_floor(xi, t, quad), starts.min() - quad.box_sigmas * math.sqrt(t))
    hi = starts.max() + quad.box_sigmas * math.sqrt(t)
    breaks = graded_breaks(lo, hi, 0.25 * math.sqrt(t), refine=[(lo, 10 * xi)],
                           refine_width=0.5 * min(xi, math.sqrt(t)))
    grid, wy = gl_panels(breaks, quad.order)
    q = wall_kernel(t, grid, starts, xi, quad, 1)
    logh = specfun.log_k0(-grid / xi)
    dens = np.mean(q * np.exp(logh[:, None] - specfun.log_k0(-starts / xi)[None, :]), axis=1)
    cdf = np.cumsum(np.maximum(dens, 0.0) * wy)
    return grid, cdf / cdf[-1]


# --------------------------------------------------------------------------- asymptotics

def mu_integral(n, y, t, nodes=None):
    """int exp(-|mu|^2) prod_{j<k} [(mu_k - mu_j)^2 + (y_k - y_j)^2 / 2t] dmu.

    The integrand is a polynomial times a Gaussian, so tensor Gauss-Hermite with
    N(N-1)/2 + 1 nodes per axis is exact.
    """
    y = as_coords(y)
    m = nodes or (n * (n - 1) // 2 + 1)
    u, w = _gh(m)
    grids = np.meshgrid(*([u] * n), indexing="ij")
    wts = np.ones_like(grids[0])
    for g in np.meshgrid(*([w] * n), indexing="ij"):
        wts = wts * g
    prod = np.ones_like(grids[0])
    for j, k in combinations(range(n), 2):
        prod = prod * ((grids[k] - grids[j]) ** 2 + (y[k] - y[j]) ** 2 / (2.0 * t))
    return float(np.sum(wts * prod))


def asymptotic_q_chain(t, y, x, model, quad=None):
    """Long-time form of Q_N valid when |x| is small against sqrt(t)."""
    quad = quad or _DEFAULT_QUAD
    n, xi = model.n_particles, model.xi
    y, x = as_coords(y), as_coords(x)
    if np.linalg.norm(x) > 0.1 * math.sqrt(t):
        warnings.warn("asymptotic_q_chain used outside |x| <= 0.1 sqrt(t)", RuntimeWarning)
    pref = xi ** (n * (n - 1)) * (2.0 / t) ** (n * n / 2.0) / ((2 * math.pi) ** n * math.factorial(n))
    logpsi = _log_harmonic(model, x / 1.0) + _log_harmonic(model, y / 1.0)
    val = pref * math.exp(float(np.sum(logpsi)) - float(y @ y) / (2.0 * t)) * mu_integral(n, y, t)
    return DensityResult(val, 0.0, "asymptotic")


@dataclass(frozen=True)
class Constants:
    n: int
    xi: float
    phi: float
    C: float
    C_err: float
    A: float
    A_err: float
    c0: float
    c: float
    c_err: float


def a2_closed_form():
    """A_2 reduced to one-dimensional Gaussian moments: (3 sqrt 2 / 4) pi^{3/2}."""
    return 3.0 * math.sqrt(2.0) / 4.0 * math.pi ** 1.5


def a_n_monte_carlo(n, n_samples=1_000_000, seed=0):
    """A_N = pi^N / (N!)^2 E[G(sort eta, sort mu)], eta, mu iid N(0, 1/2)."""
    z = rng.normals(seed, 1, 2 * n * n_samples, stream=rng.STREAM_CONSTANTS)[0]
    z = z.reshape(n_samples, 2 * n) * math.sqrt(0.5)
    eta = np.sort(z[:, :n], axis=1)
    mu = np.sort(z[:, n:], axis=1)
    g = np.ones(n_samples)
    for j, k in combinations(range(n), 2):
        de = eta[:, k] - eta[:, j]
        g *= de * ((mu[:, k] - mu[:, j]) ** 2 + de * de)
    scale = math.pi ** n / math.factorial(n) ** 2
    return Estimate(scale * float(np.mean(g)), scale * float(np.std(g, ddof=1)) / math.sqrt(n_samples),
                    n_samples)


def vicious_constant(n):
    """c_N^0 = 2^{N/2} prod Gamma(j/2) / (pi^{N/2} prod_{j<N} j!)."""
    num = 2.0 ** (n / 2.0) * math.prod(math.gamma(j / 2.0) for j in range(1, n + 1))
    return num / (math.pi ** (n / 2.0) * math.prod(math.factorial(j) for j in range(1, n)))


def constants(n, xi, n_samples=1_000_000, seed=0):
    """phi_N, C_N, A_N, c_N^0 and c_N from the Gaussian-moment formulas; n = 1 is the wall model.

    These are the formula values.  Direct quadrature of the wall survival gives
    C = xi sqrt(2/pi), a third of the formula value, see ``measured_wall_constant``.
    """
    if n == 1:
        c0 = math.sqrt(2.0 / math.pi)
        return Constants(1, xi, 0.5, 3.0 * xi * c0, 0.0, float("nan"), 0.0, c0, 3.0 * c0, 0.0)
    if n not in (2, 3):
        raise ValueError("constants supports N in 1..3")
    a = a_n_monte_carlo(n, n_samples, seed)
    facts = math.prod(math.factorial(j) for j in range(1, n))
    c_scale = 2.0 ** (3 * n * (n - 1) / 4.0) / (math.pi ** n * facts ** 2)
    big_c_scale = xi ** (n * (n - 1) / 2.0) * 2.0 ** (3 * n * (n - 1) / 4.0) / (math.pi ** n * facts)
    return Constants(n, xi, n * (n - 1) / 4.0, big_c_scale * a.mean, big_c_scale * a.std_err,
                     a.mean, a.std_err, vicious_constant(n), c_scale * a.mean, c_scale * a.std_err)


def measured_wall_constant(xi, t, quad=None):
    """sqrt(t) * survival(t, x=0) / K_0(1) for the wall model, by quadrature."""
    s = survival(ModelSpec.wall(xi), t, [0.0], quad)
    k = specfun.k0(1.0)
    return Estimate(math.sqrt(t) * s.value / k, math.sqrt(t) * s.est_error / k, 1)


# --------------------------------------------------------------------------- kernel identities

def chapman_kolmogorov(model, t1, t2, x, z, quad=None):
    """(int Q(t2, z|y) Q(t1, y|x) dy, Q(t1 + t2, z|x)) for the wall or two-particle chain."""
    quad = quad or _DEFAULT_QUAD
    x, z = as_coords(x), as_coords(z)
    if model.kind == WALL:
        lo, hi = sorted((float(x[0]), float(z[0])))
        ys, wy = terminal_nodes(max(t1, t2), lo, model.xi, quad, x_hi=hi)
        a = wall_kernel(t1, ys, x, model.xi, quad, 1)[:, 0]
        b = wall_kernel(t2, [z[0]], ys, model.xi, quad, 1)[0]
        lhs = float(np.sum(wy * a * b))
        rhs = float(wall_kernel(t1 + t2, [z[0]], x, model.xi, quad, 1)[0, 0])
        return lhs, rhs
    if model.n_particles != 2:
        raise ValueError("Chapman-Kolmogorov check supports the two-particle chain")
    # tensor grid in (Y, r') = (y1 + y2, y2 - y1); dy1 dy2 = dY dr' / 2
    xi = model.xi
    big = [x[0] + x[1], z[0] + z[1]]
    sd = quad.box_sigmas * math.sqrt(2.0 * max(t1, t2))
    u, wu = gl_panels(graded_breaks(min(big) - sd, max(big) + sd, 0.5 * math.sqrt(2.0 * min(t1, t2))),
                      quad.order)
    shift = 2.0 * xi * LN2
    rs = sorted((x[1] - x[0] - shift, z[1] - z[0] - shift))
    g, wg = terminal_nodes(2.0 * max(t1, t2), rs[0], 2.0 * xi, quad, x_hi=rs[1])
    g = g + shift
    bY, bR = np.meshgrid(u, g, indexing="ij")
    ys = np.stack([0.5 * (bY - bR).ravel(), 0.5 * (bY + bR).ravel()], axis=1)
    wts = 0.5 * (wu[:, None] * wg[None, :]).ravel()
    first, _ = chain2_kernel(t1, ys, x, xi, quad, level=1)
    second = _chain2_backward(t2, z, ys, model.xi, quad)
    lhs = float(np.sum(wts * first * second))
    rhs = float(chain2_kernel(t1 + t2, z[None, :], x, model.xi, quad, level=1)[0][0])
    return lhs, rhs


def _chain2_backward(t, z, ys, xi, quad):
    """Q_2(t, z | ys[i]) for many starting points, using the kernel's symmetry in (x, y)."""
    big_z, rz = z[0] + z[1], z[1] - z[0]
    big_y, ry = ys[:, 0] + ys[:, 1], ys[:, 1] - ys[:, 0]
    shift = 2.0 * xi * LN2
    uniq, inv = np.unique(ry, return_inverse=True)
    h = wall_kernel(2.0 * t, [rz - shift], uniq - shift, 2.0 * xi, quad, 1)[0]
    return 2.0 * _com_density(t, big_z - big_y) * h[inv]


def smoothed_initial(t, x, xi, center, width, quad=None):
    """int f(y) Q(t, y|x) dy for the wall model with Gaussian f(y) = exp(-(y - center)^2 / 2 width^2)."""
    quad = quad or _DEFAULT_QUAD
    ys, wy = terminal_nodes(t, x, xi, quad)
    q = wall_kernel(t, ys, [x], xi, quad, 1)[:, 0]
    f = np.exp(-((ys - center) ** 2) / (2.0 * width * width))
    return float(np.sum(wy * f * q))

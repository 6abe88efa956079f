"""Class-one GL(N, R) Whittaker functions of the quantum Toda lattice.

Two evaluation routes:

* ``whittaker_n2``: the N = 2 closed form 2 exp((nu1+nu2)(x1+x2)/2) K_{nu2-nu1}(2 exp(-(x2-x1)/2)).
* ``whittaker_givental``: Givental's integral over triangular arrays, done row by
  row.  Row N-1 is integrated by tensor Gauss-Legendre; the rows above it are
  folded into the (N-1)-particle Whittaker function of that row, so

      psi_N(x) = int psi_{N-1}(b) exp(nu_N (sum x - sum b)
                 - sum_k [exp(-(b_k - x_k)) + exp(-(x_{k+1} - b_k))]) db.

  For N = 2 the inner function is exp(nu_1 b) and the integral is one dimensional,
  which makes it an independent check of the closed form.

Spectral parameters are either real or purely imaginary (nu = i k with real k).
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Tuple

import numpy as np

from . import specfun
from .config import QuadratureSpec, as_coords
from .quad import QuadratureError, gl_panels

_DEFAULT_QUAD = QuadratureSpec()
# beyond this distance outside its interlacing interval an entry has weight < exp(-e^6)
_WALL_ZONE = 6.0


@dataclass(frozen=True)
class SpectralParam:
    """nu = values (real) or nu = 1j * values when ``imaginary``."""

    values: Tuple[float, ...]
    imaginary: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in np.atleast_1d(self.values)))

    def __len__(self):
        return len(self.values)

    @property
    def complex_values(self):
        v = np.asarray(self.values, dtype=float)
        return 1j * v if self.imaginary else v.astype(complex)

    @property
    def eigenvalue(self):
        """lambda = -|nu|^2 / 2."""
        return -0.5 * complex(np.sum(self.complex_values ** 2)).real

    @classmethod
    def zero(cls, n):
        return cls((0.0,) * n)


def _as_param(nu, n):
    if nu is None:
        return SpectralParam.zero(n)
    if not isinstance(nu, SpectralParam):
        nu = SpectralParam(nu)
    if len(nu) != n:
        raise ValueError(f"spectral parameter has length {len(nu)}, expected {n}")
    return nu


def vandermonde(x):
    """h_N(x) = prod_{j<k} (x_k - x_j)."""
    x = as_coords(x)
    out = 1.0
    for j in range(len(x)):
        for k in range(j + 1, len(x)):
            out *= x[k] - x[j]
    return out


def _gt_volume(top):
    n = len(top)
    if n == 1:
        return 1.0
    # Row n-1 ranges over the box prod [top_k, top_{k+1}]; the volume below it is a
    # polynomial of degree n-2 in each entry, so n//2 Gauss points per axis integrate it exactly.
    gx, gw = np.polynomial.legendre.leggauss(max(1, n // 2))
    axes = []
    for lo, hi in zip(top[:-1], top[1:]):
        half = 0.5 * (hi - lo)
        axes.append([(0.5 * (hi + lo) + half * xi, half * wi) for xi, wi in zip(gx, gw)])
    total = 0.0
    for combo in product(*axes):
        row = tuple(c[0] for c in combo)
        weight = math.prod(c[1] for c in combo)
        total += weight * _gt_volume(row)
    return total


def gt_volume(x):
    """Volume of Gelfand-Tsetlin patterns with top row x, by iterated exact integration."""
    x = as_coords(x)
    if not np.all(np.diff(x) > 0):
        raise ValueError("gt_volume needs a strictly increasing top row")
    if not 1 <= len(x) <= 6:
        raise ValueError("gt_volume supports 1 <= N <= 6")
    return _gt_volume(tuple(float(v) for v in x))


def whittaker_n2(nu, x, quad=None):
    """N = 2 Whittaker function from Macdonald's function; complex in general."""
    quad = quad or _DEFAULT_QUAD
    nu = _as_param(nu, 2)
    x1, x2 = as_coords(x)
    w = 2.0 * math.exp(-(x2 - x1) / 2.0)
    a, b = nu.values
    if nu.imaginary:
        kval = specfun.bessel_k_imag(b - a, w, quad)
        phase = np.exp(1j * (a + b) * (x1 + x2) / 2.0)
        return complex(2.0 * phase * kval)
    kval = specfun.bessel_k_real(b - a, w, quad)
    return complex(2.0 * math.exp((a + b) * (x1 + x2) / 2.0) * kval)


def _log_psi2(nu, b1, b2):
    """log psi^{(2)}_nu(b1, b2) on arrays (complex for imaginary nu)."""
    a, c = nu.values
    logw = math.log(2.0) - 0.5 * (b2 - b1)
    if nu.imaginary:
        kv = specfun.bessel_k_imag_vec(np.full(logw.shape, c - a), logw)
        with np.errstate(divide="ignore"):
            return math.log(2.0) + 0.5j * (a + c) * (b1 + b2) + np.log(kv.astype(complex))
    if a == c:
        lk = specfun.log_k0(logw)
    else:
        lk = specfun.log_k_real(c - a, np.exp(logw))
    return math.log(2.0) + 0.5 * (a + c) * (b1 + b2) + lk


def _axis(lo, hi, span_lo, span_hi, level, order):
    """Panels for one row entry interlacing [lo, hi]; finer near the soft walls."""
    hw = 0.5 ** level            # wall-zone panel width
    hi_w = 8.0 * hw              # interior panel width; psi is smooth away from the walls
    z = _WALL_ZONE
    edges = [span_lo, lo - z]
    if hi - lo > 2 * z:
        edges += list(np.arange(lo - z, lo + z, hw)) + [lo + z]
        n_int = max(1, int(math.ceil((hi - lo - 2 * z) / hi_w)))
        edges += list(np.linspace(lo + z, hi - z, n_int + 1))
        edges += list(np.arange(hi - z, hi + z, hw)) + [hi + z]
    else:
        n = max(1, int(math.ceil((hi - lo + 2 * z) / hw)))
        edges += list(np.linspace(lo - z, hi + z, n + 1))
    edges.append(span_hi)
    edges = np.unique(np.clip(np.asarray(edges, dtype=float), span_lo, span_hi))
    edges = edges[np.concatenate([[True], np.diff(edges) > 1e-12])]
    return gl_panels(edges, order)


def _row_weight(nodes, lo, hi):
    # clipped so far-tail nodes give a huge negative exponent instead of -inf
    return -(np.exp(np.minimum(lo - nodes, 700.0)) + np.exp(np.minimum(nodes - hi, 700.0)))


def _axes(x, level, quad):
    lam = math.log(1.0 / quad.abs_tol) + 5.0
    span_lo, span_hi = float(x.min()) - lam, float(x.max()) + lam
    return [_axis(x[k], x[k + 1], span_lo, span_hi, level, 8) for k in range(len(x) - 1)]


def _givental(nu, x, level, quad):
    n = len(x)
    nuc = nu.complex_values
    axes = _axes(x, level, quad)
    sx = float(np.sum(x))
    if n == 2:
        b, w = axes[0]
        expo = nuc[0] * b + nuc[1] * (sx - b) + _row_weight(b, x[0], x[1])
        return complex(np.sum(w * np.exp(expo))), len(b)
    if n == 3:
        (b1, w1), (b2, w2) = axes
        sub = SpectralParam(nu.values[:2], nu.imaginary)
        wall2 = _row_weight(b2, x[1], x[2]) + nuc[2] * (sx - b2)
        total = 0.0 + 0.0j
        for lo in range(0, len(b1), 256):
            B1 = b1[lo:lo + 256, None]
            expo = (_log_psi2(sub, B1, b2[None, :]) + wall2[None, :] - nuc[2] * B1
                    + _row_weight(B1, x[0], x[1]))
            total += np.sum(w1[lo:lo + 256, None] * w2[None, :] * np.exp(expo))
        return complex(total), max(len(b1), len(b2))
    if n == 4:
        return _givental4(nu, x, 0.25 * 0.5 ** level, quad)
    raise ValueError("whittaker_givental supports 2 <= N <= 4")


def _wall_matrix(lo, nodes, hi):
    """exp of the interlacing weight; lo and hi broadcast against the node row."""
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    return np.exp(-(np.exp(np.minimum(lo - nodes, 700.0)) + np.exp(np.minimum(nodes - hi, 700.0))))


def _givental4(nu, x, h, quad):
    # Trapezoid rule on one uniform grid for all five integration variables.  The
    # integrand is analytic and dies double-exponentially outside the soft
    # interlacing box, so the rule converges geometrically in 1/h.  For each middle
    # entry c2 of the third row, the two-row integral is a matrix product.
    nuc = nu.complex_values
    depth = 2.0 * (math.log(math.log(1.0 / quad.abs_tol)) + 1.5)
    g = np.arange(float(x.min()) - depth, float(x.max()) + depth + 0.5 * h, h)
    sub = SpectralParam(nu.values[:2], nu.imaginary)
    p2 = np.exp(_log_psi2(sub, g[:, None], g[None, :]) - nuc[2] * (g[:, None] + g[None, :]))
    outer = (np.exp(_row_weight(g, x[0], x[1]))[:, None, None]
             * np.exp(_row_weight(g, x[1], x[2]))[None, :, None]
             * np.exp(_row_weight(g, x[2], x[3]))[None, None, :])
    live = outer.max(axis=(0, 2)) > 1e-300
    total = 0.0 + 0.0j
    for j in np.flatnonzero(live):
        c2 = g[j]
        a = _wall_matrix(g[:, None], g[None, :], c2)      # A[c1, b1]
        b = _wall_matrix(c2, g[None, :], g[:, None])      # B[c3, b2]
        psi3 = h * h * (a @ p2 @ b.T)                     # psi3 up to exp(nu2 * sum c)
        cs = g[:, None] + c2 + g[None, :]
        weight = outer[:, j, :] * np.exp(nuc[2] * cs + nuc[3] * (float(np.sum(x)) - cs))
        total += np.sum(weight * psi3)
    return complex(h ** 3 * total), len(g)


def whittaker_givental(n, nu, x, quad=None, full_output=False):
    """psi_nu^{(N)}(x) from Givental's representation, N in 2..4.

    Returns the value, or ``(value, est_error)`` with ``full_output``.  The error is the
    change under one halving of the panels (of the grid step for N = 4).  N = 4 never
    raises on an unmet tolerance.
    """
    quad = quad or _DEFAULT_QUAD
    x = as_coords(x)
    if len(x) != n:
        raise ValueError("configuration length does not match N")
    if not 2 <= n <= 4:
        raise ValueError("whittaker_givental supports 2 <= N <= 4")
    nu = _as_param(nu, n)
    err = math.inf
    level = 1 if n < 4 else 0
    budget = quad.givental_nodes * 2 ** quad.max_refine
    prev, _ = _givental(nu, x, level, quad)
    cur = prev
    while True:
        level += 1
        if max(len(a[0]) for a in _axes(x, level, quad)) > budget:
            if quad.strict:
                raise QuadratureError(
                    f"Givental quadrature needs more than {budget} nodes per axis (error {err:.3g})")
            break
        cur, _ = _givental(nu, x, level, quad)
        err = abs(cur - prev)
        if err <= max(quad.abs_tol, quad.rel_tol * abs(cur)) or n == 4:
            break
        prev = cur
    return (cur, err) if full_output else cur


@lru_cache(maxsize=65536)
def _whittaker_zero_cached(n, coords, quad):
    return whittaker_givental(n, None, np.asarray(coords), quad).real


def whittaker_zero(n, x, quad=None):
    """psi_0^{(N)}(x), memoised; strictly positive."""
    quad = quad or _DEFAULT_QUAD
    coords = tuple(float(v) for v in as_coords(x))
    return _whittaker_zero_cached(n, coords, quad)


def psi0_n2(x):
    """Vectorised psi_0^{(2)} for arrays of shape (..., 2) from the closed form."""
    x = np.asarray(x, dtype=float)
    gap = x[..., 1] - x[..., 0]
    return 2.0 * np.exp(specfun.log_k0(math.log(2.0) - 0.5 * gap))


def eigen_residual(n, x, h=1e-3, quad=None):
    """|1/2 Laplacian psi_0 - V_N psi_0| / psi_0 at x, xi = 1, by central differences."""
    x = as_coords(x)
    psi = whittaker_zero(n, x, quad)
    lap = 0.0
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        lap += (whittaker_zero(n, x + e, quad) - 2.0 * psi + whittaker_zero(n, x - e, quad)) / h ** 2
    pot = float(np.sum(np.exp(-np.diff(x))))
    return abs(0.5 * lap - pot * psi) / psi


def scaling_ratio(n, x, beta, quad=None):
    """beta^{-N(N-1)/2} psi_0(beta x) prod_{j<N} j! / h_N(x); tends to 1 as beta grows."""
    x = as_coords(x)
    facts = math.prod(math.factorial(j) for j in range(1, n))
    psi = whittaker_zero(n, beta * x, quad)
    return beta ** (-n * (n - 1) / 2) * psi * facts / vandermonde(x)

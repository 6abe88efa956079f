"""Monte Carlo engines: Feynman-Kac and hard-killing survival, conditioned SDEs, exponential functionals.

All randomness comes from ``rng`` keyed by (seed, stream, path, counter), so a
path's trajectory is fixed by its index.  Paths are split into chunks that run on
threads (the kernels release the GIL); results land in per-path arrays and are
reduced with ``math.fsum`` in path order, which makes every estimate independent
of the worker count.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import rng
from .config import CHAIN, WALL, Estimate, ModelSpec, SimConfig, as_coords
from .specfun import k01_scaled

# exp(-746) underflows to exactly 0.0, so a path past this is finished
_DEAD = 746.0
_WALL_KIND = 0
_CHAIN_KIND = 1


@dataclass
class PathEnsemble:
    terminal: np.ndarray
    weights: np.ndarray
    alive: np.ndarray = None
    info: dict = field(default_factory=dict)


def estimate(values):
    """Mean and standard error with a fixed-order compensated sum."""
    values = np.asarray(values, dtype=float)
    n = values.size
    mean = math.fsum(values) / n
    var = math.fsum((values - mean) ** 2) / (n - 1) if n > 1 else 0.0
    return Estimate(mean, math.sqrt(var / n), n)


def _chunks(n_paths, workers):
    size = max(256, -(-n_paths // (8 * workers)))
    return [(p, min(size, n_paths - p)) for p in range(0, n_paths, size)]


def _run_chunked(fn, n_paths, workers):
    """Call fn(path0, count) over path chunks, concurrently when workers > 1."""
    chunks = _chunks(n_paths, workers)
    if workers == 1:
        for c in chunks:
            fn(*c)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for _ in pool.map(lambda c: fn(*c), chunks):
            pass


@njit(cache=True, nogil=True)
def _potential(kind, xi, x):
    if kind == _WALL_KIND:
        return math.exp(-2.0 * x[0] / xi) / (2.0 * xi * xi)
    v = 0.0
    for j in range(x.shape[0] - 1):
        v += math.exp(-(x[j + 1] - x[j]) / xi)
    return v / (xi * xi)


@njit(cache=True, nogil=True)
def _fk_kernel(kind, xi, x0, dt, n_steps, fine, checkpoints, seed, hard, vscale,
               path0, n_paths, weights, terminal):
    """Euler paths with trapezoidal killing integral.

    ``fine`` standard normals are summed per coordinate and step, so runs with
    dt and dt/fine share the same Brownian path.  ``weights[p, c]`` is the weight at
    step ``checkpoints[c]``.
    """
    n = x0.shape[0]
    n_ck = checkpoints.shape[0]
    x = np.empty(n)
    buf = np.empty(2)
    sq = math.sqrt(dt / fine)
    for p in range(n_paths):
        path = path0 + p
        for j in range(n):
            x[j] = x0[j]
        v0 = vscale * _potential(kind, xi, x)
        integral = 0.0
        alive = True
        counter = 0
        spare = False
        ck = 0
        step = 0
        while step < n_steps:
            for j in range(n):
                acc = 0.0
                for m in range(fine):
                    if spare:
                        acc += buf[1]
                        spare = False
                    else:
                        buf[0], buf[1] = rng.normal_pair(seed, rng.STREAM_INCREMENTS, path, counter)
                        counter += 1
                        acc += buf[0]
                        spare = True
                x[j] += sq * acc
            v1 = vscale * _potential(kind, xi, x)
            incr = 0.5 * (v0 + v1) * dt
            v0 = v1
            if hard:
                u, _ = rng.uniform_pair(seed, rng.STREAM_KILL, path, step)
                if u > math.exp(-incr):
                    alive = False
            else:
                integral += incr
                if integral > _DEAD:
                    alive = False
            step += 1
            while ck < n_ck and checkpoints[ck] == step:
                weights[p, ck] = (1.0 if hard else math.exp(-integral)) if alive else 0.0
                ck += 1
            if not alive:
                break
        while ck < n_ck:
            weights[p, ck] = 0.0
            ck += 1
        for j in range(n):
            terminal[p, j] = x[j]


def _model_args(model, x):
    x = as_coords(x)
    if len(x) != model.n_particles:
        raise ValueError("configuration dimension does not match the model")
    return (_WALL_KIND if model.kind == WALL else _CHAIN_KIND), model.xi, x


def _fk_run(model, x, config, times=None, hard=False, vscale=1.0, fine=1):
    kind, xi, x0 = _model_args(model, x)
    if times is None:
        steps = np.array([config.n_steps], dtype=np.int64)
    else:
        steps = np.array([int(round(t / config.dt)) for t in times], dtype=np.int64)
        if np.any(np.diff(steps) <= 0) or steps[0] < 1:
            raise ValueError("checkpoint times must be increasing multiples of dt")
    n_steps = int(steps[-1])
    weights = np.empty((config.n_paths, len(steps)))
    terminal = np.empty((config.n_paths, len(x0)))
    seed = np.uint64(config.seed)

    def work(p0, cnt):
        _fk_kernel(kind, xi, x0, config.dt, n_steps, fine, steps, seed, hard, vscale,
                   p0, cnt, weights[p0:p0 + cnt], terminal[p0:p0 + cnt])

    _run_chunked(work, config.n_paths, config.workers)
    return weights, terminal


def fk_survival(model, x, config, times=None, fine=1):
    """E[exp(-int V)] at the horizon, or a list of Estimates at ``times``."""
    weights, _ = _fk_run(model, x, config, times, fine=fine)
    if times is None:
        return estimate(weights[:, 0])
    return [estimate(weights[:, c]) for c in range(weights.shape[1])]


def hard_kill_survival(model, x, config, times=None, vscale=1.0):
    """Survival with a Bernoulli kill per step, probability 1 - exp(-V dt)."""
    weights, _ = _fk_run(model, x, config, times, hard=True, vscale=vscale)
    if times is None:
        return estimate(weights[:, 0])
    return [estimate(weights[:, c]) for c in range(weights.shape[1])]


def fk_paths(model, x, config, hard=False):
    weights, terminal = _fk_run(model, x, config, hard=hard)
    alive = weights[:, 0] > 0 if hard else None
    return PathEnsemble(terminal, weights[:, 0], alive)


@dataclass
class Histogram:
    edges: list
    mass: np.ndarray
    std_err: np.ndarray
    total: Estimate

    @property
    def density(self):
        vol = np.ones(self.mass.shape)
        for axis, e in enumerate(self.edges):
            shape = [1] * self.mass.ndim
            shape[axis] = -1
            vol = vol * np.diff(e).reshape(shape)
        return self.mass / vol


def fk_density_histogram(model, x, config, bins):
    """Weighted histogram of terminal points; ``bins`` is a list of edge arrays, one per coordinate."""
    ens = fk_paths(model, x, config)
    edges = [np.asarray(b, dtype=float) for b in bins]
    if len(edges) != ens.terminal.shape[1]:
        raise ValueError("need one edge array per coordinate")
    n = len(ens.weights)
    idx = []
    inside = np.ones(n, dtype=bool)
    for j, e in enumerate(edges):
        i = np.searchsorted(e, ens.terminal[:, j], side="right") - 1
        inside &= (i >= 0) & (i < len(e) - 1)
        idx.append(i)
    shape = tuple(len(e) - 1 for e in edges)
    flat = np.ravel_multi_index([i[inside] for i in idx], shape)
    w = ens.weights[inside]
    mass = np.bincount(flat, weights=w, minlength=int(np.prod(shape))) / n
    sq = np.bincount(flat, weights=w * w, minlength=int(np.prod(shape))) / n
    err = np.sqrt(np.maximum(sq - mass * mass, 0.0) / max(n - 1, 1))
    return Histogram(edges, mass.reshape(shape), err.reshape(shape), estimate(ens.weights))


# --------------------------------------------------------------------------- conditioned SDEs

_DRIFT_DYSON = 0
_DRIFT_OCONNELL2 = 1
_DRIFT_TABLE3 = 2
_MAX_DEPTH = 24


@njit(cache=True, nogil=True)
def _drift(kind, xi, x, table, lo, step, out):
    """Drift vector; returns False when it cannot be evaluated."""
    n = x.shape[0]
    if kind == _DRIFT_DYSON:
        for j in range(n):
            s = 0.0
            for k in range(n):
                if k != j:
                    s += 1.0 / (x[j] - x[k])
            out[j] = s
        return True
    if kind == _DRIFT_OCONNELL2:
        r = x[1] - x[0]
        w = 2.0 * math.exp(-r / (2.0 * xi))
        if not math.isfinite(w):
            return False
        k0e, wk1e = k01_scaled(w)
        g = wk1e / k0e / (2.0 * xi)
        out[0] = -g
        out[1] = g
        return True
    # tabulated gradient of log psi_0 in the gaps (units of xi), bilinear
    m = table.shape[1]
    u1 = ((x[1] - x[0]) / xi - lo) / step
    u2 = ((x[2] - x[1]) / xi - lo) / step
    if not (0.0 <= u1 < m - 1 and 0.0 <= u2 < m - 1):
        return False
    i = int(u1)
    j = int(u2)
    a = u1 - i
    b = u2 - j
    f = np.empty(2)
    for c in range(2):
        f[c] = ((1 - a) * (1 - b) * table[c, i, j] + a * (1 - b) * table[c, i + 1, j]
                + (1 - a) * b * table[c, i, j + 1] + a * b * table[c, i + 1, j + 1]) / xi
    out[0] = -f[0]
    out[1] = f[0] - f[1]
    out[2] = f[1]
    return True


@njit(cache=True, nogil=True)
def _needs_split(kind, x, drift, h):
    sh = math.sqrt(h)
    if kind == _DRIFT_DYSON:
        for j in range(x.shape[0] - 1):
            if x[j + 1] - x[j] < 4.0 * sh:
                return True
        return False
    for j in range(x.shape[0]):
        if abs(drift[j]) * h > 0.25 * sh:
            return True
    return False


@njit(cache=True, nogil=True)
def _sde_kernel(kind, xi, table, lo, step_u, x0, dt, n_steps, seed, path0, n_paths,
                terminal, status, splits):
    n = x0.shape[0]
    x = np.empty(n)
    drift = np.empty(n)
    dw = np.empty(n)
    stack_dw = np.empty((_MAX_DEPTH + 2, n))
    stack_h = np.empty(_MAX_DEPTH + 2)
    stack_node = np.empty(_MAX_DEPTH + 2, dtype=np.int64)
    stack_depth = np.empty(_MAX_DEPTH + 2, dtype=np.int64)
    sq = math.sqrt(dt)
    for p in range(n_paths):
        path = path0 + p
        for j in range(n):
            x[j] = x0[j]
        counter = 0
        status[p] = 0
        splits[p] = 0
        for s in range(n_steps):
            for j in range(0, n, 2):
                z0, z1 = rng.normal_pair(seed, rng.STREAM_INCREMENTS, path, counter)
                counter += 1
                dw[j] = sq * z0
                if j + 1 < n:
                    dw[j + 1] = sq * z1
            top = 0
            for j in range(n):
                stack_dw[0, j] = dw[j]
            stack_h[0] = dt
            stack_node[0] = 1
            stack_depth[0] = 0
            top = 1
            while top > 0:
                top -= 1
                h = stack_h[top]
                node = stack_node[top]
                depth = stack_depth[top]
                if not _drift(kind, xi, x, table, lo, step_u, drift):
                    status[p] = 2
                    break
                if depth < _MAX_DEPTH and _needs_split(kind, x, drift, h):
                    # Brownian-bridge midpoint; right half pushed first so the left runs next
                    splits[p] += 1
                    half = 0.5 * h
                    base = ((np.uint64(s) << np.uint64(26)) + np.uint64(node)) << np.uint64(2)
                    left = np.empty(n)
                    for j in range(0, n, 2):
                        z0, z1 = rng.normal_pair(seed, rng.STREAM_BRIDGE, path, base + np.uint64(j // 2))
                        left[j] = 0.5 * stack_dw[top, j] + 0.5 * math.sqrt(h) * z0
                        if j + 1 < n:
                            left[j + 1] = 0.5 * stack_dw[top, j + 1] + 0.5 * math.sqrt(h) * z1
                    for j in range(n):
                        stack_dw[top + 1, j] = left[j]
                        stack_dw[top, j] = stack_dw[top, j] - left[j]
                    stack_h[top] = half
                    stack_h[top + 1] = half
                    stack_node[top] = 2 * node + 1
                    stack_node[top + 1] = 2 * node
                    stack_depth[top] = depth + 1
                    stack_depth[top + 1] = depth + 1
                    top += 2
                    continue
                for j in range(n):
                    x[j] += drift[j] * h + stack_dw[top, j]
                if kind == _DRIFT_DYSON:
                    for j in range(n - 1):
                        if x[j + 1] - x[j] < 1e-8:
                            status[p] = 1
                    if status[p] != 0:
                        break
            if status[p] != 0:
                break
        for j in range(n):
            terminal[p, j] = x[j]


def _sde(kind, xi, table, lo, step_u, x0, config):
    x0 = as_coords(x0)
    n_paths = config.n_paths
    terminal = np.empty((n_paths, len(x0)))
    status = np.empty(n_paths, dtype=np.int64)
    splits = np.empty(n_paths, dtype=np.int64)
    seed = np.uint64(config.seed)

    def work(p0, cnt):
        _sde_kernel(kind, xi, table, lo, step_u, x0, config.dt, config.n_steps, seed, p0, cnt,
                    terminal[p0:p0 + cnt], status[p0:p0 + cnt], splits[p0:p0 + cnt])

    _run_chunked(work, n_paths, config.workers)
    ok = status == 0
    info = {"aborted_collision": int(np.sum(status == 1)), "aborted_drift": int(np.sum(status == 2)),
            "bridge_splits": int(splits.sum())}
    return PathEnsemble(terminal, ok.astype(float), ok, info)


_NO_TABLE = np.zeros((2, 2, 2))


def drift_table3(lo=-6.0, hi=40.0, step=0.05, quad=None):
    """Gradient of log psi_0^{(3)} on a grid of the two gaps (in units of xi).

    Every grid value of psi_0 shares one Givental quadrature grid over the middle
    row, so the whole table is two matrix products; the gradient is the analytic
    derivative of the same quadrature.
    """
    from .quad import gl_panels
    from .whittaker import _log_psi2, SpectralParam
    g = np.arange(lo, hi + 0.5 * step, step)
    b, wb = gl_panels(np.arange(-hi - 12.0, hi + 12.0 + 1e-9, 0.5), 8)
    # fix x2 = 0, x1 = -g1, x3 = g2; row entries b1 in [x1, x2], b2 in [x2, x3]
    logm = _log_psi2(SpectralParam((0.0, 0.0)), b[:, None], b[None, :])
    peak = logm.max()
    m = np.exp(logm - peak) * wb[:, None] * wb[None, :]
    e1 = np.exp(np.minimum(-(b[None, :] + g[:, None]), 700.0))      # e^{-(b1 - x1)}
    c1 = np.exp(np.minimum(b, 700.0))                               # e^{-(x2 - b1)}
    a = np.exp(-e1 - c1[None, :])
    da = a * e1                                                    # d/dg1
    c2 = np.exp(np.minimum(-b, 700.0))                              # e^{-(b2 - x2)}
    e2 = np.exp(np.minimum(b[None, :] - g[:, None], 700.0))          # e^{-(x3 - b2)}
    bb = np.exp(-c2[None, :] - e2)
    db = bb * e2
    psi = a @ m @ bb.T
    f1 = (da @ m @ bb.T) / psi
    f2 = (a @ m @ db.T) / psi
    return np.stack([f1, f2]), lo, step


_TABLE_CACHE = {}


def oconnell_sde(model, x0, config):
    """Euler-Maruyama for the eternally conditioned chain (drift grad log psi_0(x/xi))."""
    if model.kind != CHAIN:
        raise ValueError("the O'Connell process is defined for the chain model")
    if model.n_particles == 2:
        return _sde(_DRIFT_OCONNELL2, model.xi, _NO_TABLE, 0.0, 1.0, x0, config)
    if model.n_particles == 3:
        if "n3" not in _TABLE_CACHE:
            _TABLE_CACHE["n3"] = drift_table3()
        table, lo, step = _TABLE_CACHE["n3"]
        return _sde(_DRIFT_TABLE3, model.xi, table, lo, step, x0, config)
    raise ValueError("oconnell_sde supports N = 2 and N = 3")


def dyson_sde(x0, config):
    """Noncolliding Brownian motion, drift sum_{k != j} 1/(x_j - x_k)."""
    x0 = as_coords(x0)
    if not np.all(np.diff(x0) > 0):
        raise ValueError("dyson_sde needs a strictly ordered start")
    return _sde(_DRIFT_DYSON, 1.0, _NO_TABLE, 0.0, 1.0, x0, config)


# --------------------------------------------------------------------------- functionals

@njit(cache=True, nogil=True)
def _my_kernel(xi, dt, n_steps, seed, path0, n_paths, z_my, pitman, b_end):
    sq = math.sqrt(dt)
    for p in range(n_paths):
        path = path0 + p
        b = 0.0
        m = 0.0
        # trapezoid sum of exp(2B/xi) kept as exp(ref) * acc, ref the running maximum of 2B/xi
        ref = 0.0
        acc = 0.0
        e_prev = 1.0
        counter = 0
        z1 = 0.0
        for s in range(n_steps):
            if s % 2 == 0:
                z0, z1 = rng.normal_pair(seed, rng.STREAM_INCREMENTS, path, counter)
                counter += 1
                b += sq * z0
            else:
                b += sq * z1
            cur = 2.0 * b / xi
            if cur > ref:
                shrink = math.exp(ref - cur)
                acc *= shrink
                e_prev *= shrink
                ref = cur
            e_cur = math.exp(cur - ref)
            acc += 0.5 * dt * (e_prev + e_cur)
            e_prev = e_cur
            if b > m:
                m = b
        z_my[p] = xi * (ref + math.log(acc) - 2.0 * math.log(xi)) - b
        pitman[p] = 2.0 * m - b
        b_end[p] = b


def matsumoto_yor(xi, t, config, with_pitman=False):
    """Samples of Z(t) = xi log((1/xi^2) int_0^t e^{2B/xi} ds) - B(t); n_steps = t/dt."""
    n_steps = max(1, int(round(t / config.dt)))
    dt = t / n_steps
    n = config.n_paths
    z_my = np.empty(n)
    pitman = np.empty(n)
    b_end = np.empty(n)
    seed = np.uint64(config.seed)

    def work(p0, cnt):
        _my_kernel(xi, dt, n_steps, seed, p0, cnt, z_my[p0:p0 + cnt], pitman[p0:p0 + cnt],
                   b_end[p0:p0 + cnt])

    _run_chunked(work, n, config.workers)
    return (z_my, pitman) if with_pitman else z_my


# --------------------------------------------------------------------------- vicious walkers

@njit(cache=True, nogil=True)
def _vicious_kernel(x0, dt, n_steps, checkpoints, seed, path0, n_paths, weights):
    """Independent Brownian motions weighted by the bridge non-crossing probability of each gap."""
    n = x0.shape[0]
    x = np.empty(n)
    prev = np.empty(n)
    sq = math.sqrt(dt)
    n_ck = checkpoints.shape[0]
    for p in range(n_paths):
        path = path0 + p
        for j in range(n):
            x[j] = x0[j]
        w = 1.0
        counter = 0
        ck = 0
        for s in range(n_steps):
            for j in range(n):
                prev[j] = x[j]
            for j in range(0, n, 2):
                z0, z1 = rng.normal_pair(seed, rng.STREAM_INCREMENTS, path, counter)
                counter += 1
                x[j] += sq * z0
                if j + 1 < n:
                    x[j + 1] += sq * z1
            for j in range(n - 1):
                g0 = prev[j + 1] - prev[j]
                g1 = x[j + 1] - x[j]
                if g1 <= 0.0:
                    w = 0.0
                    break
                # gap has variance 2 dt per step
                w *= -math.expm1(-g0 * g1 / dt)
            while ck < n_ck and checkpoints[ck] == s + 1:
                weights[p, ck] = w
                ck += 1
            if w == 0.0:
                break
        while ck < n_ck:
            weights[p, ck] = 0.0
            ck += 1


def vicious_weights(x, config, times):
    x0 = as_coords(x)
    steps = np.array([int(round(t / config.dt)) for t in times], dtype=np.int64)
    weights = np.empty((config.n_paths, len(steps)))
    seed = np.uint64(config.seed)

    def work(p0, cnt):
        _vicious_kernel(x0, config.dt, int(steps[-1]), steps, seed, p0, cnt, weights[p0:p0 + cnt])

    _run_chunked(work, config.n_paths, config.workers)
    return weights

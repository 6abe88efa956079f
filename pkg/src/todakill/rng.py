"""Counter-based random streams (Philox4x32-10) for reproducible Monte Carlo.

Every draw is a pure function of ``(seed, stream, path, counter)``, so a path's
randomness does not depend on how paths are split across workers.
"""
import numpy as np
from numba import njit

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_TWO_PI = 2.0 * np.pi

# stream tags, one per consumer of randomness
STREAM_INCREMENTS = 1
STREAM_KILL = 2
STREAM_BRIDGE = 3
STREAM_CONSTANTS = 4
STREAM_SAMPLES = 5


@njit(cache=True, nogil=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten rounds of Philox4x32; all arguments are uint32 values held in uint64."""
    c0 = np.uint64(c0) & _MASK
    c1 = np.uint64(c1) & _MASK
    c2 = np.uint64(c2) & _MASK
    c3 = np.uint64(c3) & _MASK
    k0 = np.uint64(k0) & _MASK
    k1 = np.uint64(k1) & _MASK
    for r in range(10):
        if r > 0:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> np.uint64(32)
        lo0 = p0 & _MASK
        hi1 = p1 >> np.uint64(32)
        lo1 = p1 & _MASK
        c0, c1, c2, c3 = (hi1 ^ c1 ^ k0), lo1, (hi0 ^ c3 ^ k1), lo0
    return c0, c1, c2, c3


@njit(cache=True, nogil=True)
def _to_unit(a, b):
    # 53-bit uniform on the open interval (0, 1)
    v = (a >> np.uint64(5)) * np.uint64(67108864) + (b >> np.uint64(6))
    return (float(v) + 0.5) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True)
def uniform_pair(seed, stream, path, counter):
    k0 = np.uint64(seed) & _MASK
    k1 = np.uint64(seed) >> np.uint64(32)
    cnt = np.uint64(counter)
    r0, r1, r2, r3 = philox4x32(cnt & _MASK, cnt >> np.uint64(32),
                                np.uint64(path), np.uint64(stream), k0, k1)
    return _to_unit(r0, r1), _to_unit(r2, r3)


@njit(cache=True, nogil=True)
def normal_pair(seed, stream, path, counter):
    u1, u2 = uniform_pair(seed, stream, path, counter)
    rad = np.sqrt(-2.0 * np.log(u1))
    return rad * np.cos(_TWO_PI * u2), rad * np.sin(_TWO_PI * u2)


@njit(cache=True, nogil=True)
def fill_normals(seed, stream, path, counter0, out):
    """Fill ``out`` with standard normals using consecutive counters from ``counter0``."""
    n = out.shape[0]
    c = counter0
    i = 0
    while i < n:
        z0, z1 = normal_pair(seed, stream, path, c)
        out[i] = z0
        if i + 1 < n:
            out[i + 1] = z1
        i += 2
        c += 1
    return c


@njit(cache=True, nogil=True)
def _normals_block(seed, stream, path0, n_paths, n_per_path, out):
    for p in range(n_paths):
        fill_normals(seed, stream, path0 + p, 0, out[p])


def normals(seed, n_paths, n_per_path, stream=STREAM_SAMPLES, path0=0):
    """Array of shape (n_paths, n_per_path); row ``p`` depends only on (seed, stream, path0+p)."""
    out = np.empty((n_paths, n_per_path))
    _normals_block(np.uint64(seed), stream, path0, n_paths, n_per_path, out)
    return out

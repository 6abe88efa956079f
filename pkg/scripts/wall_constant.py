"""Wall-model survival constant: quadrature at growing T next to Monte Carlo.

sqrt(T) N(T, 0) / K_0(1) approaches xi sqrt(2/pi) ~ 0.798 at xi = 1, the
coefficient of the harmonic function xi K_0(e^{-x/xi}) ~ x.  The Gaussian-moment
formula value 3 xi sqrt(2/pi) ~ 2.394 is printed for comparison.
"""
import math

from todakill import simulate, spectral, specfun
from todakill.config import ModelSpec, SimConfig

wall = ModelSpec.wall(1.0)
k = specfun.k0(1.0)
print("T,sqrtT_N_over_K0,quadrature_est_error")
for t in (1e1, 1e2, 1e3, 1e4, 1e5):
    s = spectral.survival(wall, t, [0.0])
    print(f"{t:g},{math.sqrt(t) * s.value / k:.6f},{s.est_error:.2e}")
print(f"# xi sqrt(2/pi) = {math.sqrt(2 / math.pi):.6f}; formula value = {3 * math.sqrt(2 / math.pi):.6f}")

print("T,mc_survival,mc_std_err,quadrature")
for t in (1.0, 4.0):
    est = simulate.fk_survival(wall, [0.0], SimConfig(1e-3, t, 100_000, seed=1))
    print(f"{t:g},{est.mean:.5f},{est.std_err:.5f},{spectral.survival(wall, t, [0.0]).value:.5f}")

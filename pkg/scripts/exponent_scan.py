"""Survival against time for the three benchmark systems, with log-log slopes.

Writes plot-ready CSV to stdout.
"""
import sys

import numpy as np

from todakill import analysis, simulate, spectral
from todakill.config import ModelSpec, SimConfig

paths = int(sys.argv[1]) if len(sys.argv) > 1 else 50_000
print("system,t,value,err")
pts = []
for t in np.geomspace(1e2, 1e4, 7):
    s = spectral.survival(ModelSpec.wall(1.0), t, [0.0])
    pts.append((t, s.value))
    print(f"wall,{t:.6g},{s.value:.6e},{s.est_error:.2e}")
slopes = {"wall": analysis.exponent_fit(pts).slope}
for name, model, x, dt in (("chain2", ModelSpec.chain(2, 0.1), (-0.5, 0.5), 1e-2),
                           ("chain3", ModelSpec.chain(3, 0.1), (-1.0, 0.0, 1.0), 1e-3)):
    times = [round(t / dt) * dt for t in np.geomspace(10, 100, 7)]
    est = simulate.fk_survival(model, x, SimConfig(dt, times[-1], paths, seed=1), times)
    for t, e in zip(times, est):
        print(f"{name},{t:.6g},{e.mean:.6e},{e.std_err:.2e}")
    slopes[name] = analysis.exponent_fit([(t, e.mean, e.std_err) for t, e in zip(times, est)]).slope
for k, v in slopes.items():
    print(f"# {k} slope {v:.4f}")

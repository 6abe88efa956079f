"""The eleven acceptance criteria, one function each.

Every criterion returns a ``CriterionResult``; ``run`` prints one PASS/FAIL line per
criterion.  Criterion 1 is expected to fail: the quadrature survival gives
C = xi sqrt(2/pi), a third of the target constant.  The failure is left visible.
"""
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from . import analysis, simulate, spectral
from .analysis import Check
from .config import Estimate, ModelSpec, SimConfig
from .whittaker import eigen_residual, gt_volume, scaling_ratio, vandermonde


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list
    info: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def line(self):
        parts = "; ".join(f"{c.name}={c.value:.5g} (target {c.target:.5g}, tol {c.tol:g})"
                          + ("" if c.passed else " FAIL") for c in self.checks)
        return (f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.title}: {parts}"
                f"  ({self.seconds:.0f}s)")


def _abs(name, value, target, tol):
    return Check(name, float(value), float(target), tol, abs(value - target) <= tol)


def _rel(name, value, target, tol):
    return Check(name, float(value), float(target), tol, abs(value / target - 1.0) <= tol)


def _zscore(name, a, b, tol=3.0):
    z = (a.mean - b.mean) / math.hypot(a.std_err, b.std_err)
    return Check(name, z, 0.0, tol, abs(z) <= tol)


def criterion_1(workers=1):
    c = spectral.measured_wall_constant(1.0, 1e4)
    info = {"measured": c.mean, "sqrt(2/pi)": math.sqrt(2.0 / math.pi),
            "measured/sqrt(2/pi)": c.mean / math.sqrt(2.0 / math.pi)}
    return [_rel("wall_constant_T1e4", c.mean, 2.3937, 0.05)], info


def _wall_times():
    return np.geomspace(1e2, 1e4, 7)


def _chain_times(dt):
    return [round(t / dt) * dt for t in np.geomspace(10.0, 100.0, 7)]


def criterion_2(workers=1):
    wall = ModelSpec.wall(1.0)
    pts = []
    for t in _wall_times():
        s = spectral.survival(wall, t, [0.0])
        pts.append((t, s.value))
    fit_w = analysis.exponent_fit(pts)

    dt2 = 1e-2
    times2 = _chain_times(dt2)
    est2 = simulate.fk_survival(ModelSpec.chain(2, 0.1), (-0.5, 0.5),
                                SimConfig(dt2, times2[-1], 100_000, seed=21, workers=workers), times2)
    fit2 = analysis.exponent_fit([(t, e.mean, e.std_err) for t, e in zip(times2, est2)])

    dt3 = 1e-3
    times3 = _chain_times(dt3)
    est3 = simulate.fk_survival(ModelSpec.chain(3, 0.1), (-1.0, 0.0, 1.0),
                                SimConfig(dt3, times3[-1], 300_000, seed=31, workers=workers), times3)
    fit3 = analysis.exponent_fit([(t, e.mean, e.std_err) for t, e in zip(times3, est3)])
    checks = [_abs("wall_quadrature_slope", fit_w.slope, -0.5, 0.05),
              _abs("chain2_fk_slope", fit2.slope, -0.5, 0.05),
              _abs("chain3_fk_slope", fit3.slope, -1.5, 0.15)]
    info = {"chain2_slope_se": fit2.slope_std_err, "chain3_slope_se": fit3.slope_std_err}
    return checks, info


def criterion_3(workers=1):
    checks = []
    cases = [("wall", ModelSpec.wall(1.0), (0.0,)), ("chain2", ModelSpec.chain(2, 1.0), (0.0, 1.0))]
    for name, model, x in cases:
        est = simulate.fk_survival(model, x, SimConfig(1e-3, 4.0, 100_000, seed=3, workers=workers),
                                   [1.0, 4.0])
        for t, e in zip((1.0, 4.0), est):
            q = spectral.survival(model, t, x)
            checks.append(_zscore(f"{name}_t={t:g}", e, _as_est(q)))
    return checks, {}


def _as_est(res):
    return Estimate(res.value, res.est_error, 1)


def criterion_4(workers=1):
    checks = []
    lhs, rhs = spectral.chapman_kolmogorov(ModelSpec.wall(1.0), 0.5, 0.5, [0.0], [1.0])
    checks.append(_rel("wall_ck", lhs, rhs, 1e-3))
    lhs, rhs = spectral.chapman_kolmogorov(ModelSpec.chain(2, 1.0), 0.5, 0.5, (0.0, 1.0), (0.3, 1.5))
    checks.append(_rel("chain2_ck", lhs, rhs, 1e-3))
    return checks, {}


def _chamber_points(n, count, seed, lo=-2.0, hi=2.0):
    g = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        p = np.sort(g.uniform(lo, hi, n))
        if np.all(np.diff(p) > 0.05):
            out.append(p)
    return out


def criterion_5(workers=1):
    worst = {}
    for n in (2, 3):
        worst[n] = max(eigen_residual(n, p) for p in _chamber_points(n, 10, seed=50 + n))
    return [_abs(f"psi0_residual_n{n}", worst[n], 0.0, 1e-3) for n in (2, 3)], {}


def criterion_6(workers=1):
    checks = [_rel("scaling_n2_beta50", scaling_ratio(2, (-1.0, 1.0), 50.0), 1.0, 0.02),
              _rel("scaling_n3_beta30", scaling_ratio(3, (-3.0, 0.0, 3.0), 30.0), 1.0, 0.05)]
    worst = 0.0
    for n in (2, 3, 4):
        facts = math.prod(math.factorial(j) for j in range(1, n))
        for p in _chamber_points(n, 5, seed=60 + n):
            v = vandermonde(p)
            worst = max(worst, abs(gt_volume(p) * facts - v) / abs(v))
    checks.append(_abs("gt_volume_vs_vandermonde", worst, 0.0, 1e-10))
    return checks, {"scaling_n3_unit_spacing_beta50": scaling_ratio(3, (-1.0, 0.0, 1.0), 50.0)}


def criterion_7(workers=1):
    model = ModelSpec.chain(2, 1.0)
    x = (-0.05, 0.05)
    checks = []
    for y in [(0.0, 1.0), (-1.0, 1.0), (0.5, 2.0)]:
        q = spectral.q_chain(400.0, y, x, model).value
        a = spectral.asymptotic_q_chain(400.0, y, x, model).value
        checks.append(_abs(f"long_time_ratio_y={y}", q / a, 1.0, 0.05))
    return checks, {}


def criterion_8(workers=1):
    return analysis.xi_zero_suite(xi=0.02, n_paths=100_000, seed=8, dt=1e-4, workers=workers), {}


def criterion_9(workers=1):
    model = ModelSpec.chain(2, 1.0)
    x0 = (0.0, 1.0)
    ens = simulate.oconnell_sde(model, x0, SimConfig(1e-3, 1.0, 100_000, seed=9, workers=workers))
    term = ens.terminal[ens.alive]
    gaps, cdf = spectral.conditioned_gap_cdf(1.0, 1.0, 1.0)
    ks_gap = analysis.distribution_distance(term[:, 1] - term[:, 0], (gaps, cdf))
    ks_com = analysis.distribution_distance(term.sum(axis=1), norm(loc=1.0, scale=math.sqrt(2.0)).cdf)
    checks = [_abs("oconnell_gap_ks", ks_gap, 0.0, 0.02),
              _abs("oconnell_center_ks", ks_com, 0.0, 0.02),
              _abs("normalization_wall", spectral.normalization(ModelSpec.wall(1.0), 1.0, [0.0]).value,
                   1.0, 1e-3),
              _abs("normalization_chain2", spectral.normalization(model, 1.0, x0).value, 1.0, 1e-3)]
    return checks, dict(ens.info)


def criterion_10(workers=1):
    a = spectral.a_n_monte_carlo(2, 1_000_000, seed=10)
    v = analysis.vicious_constant(gap=1.0, horizon=100.0, n_paths=1_000_000, seed=10, workers=workers)
    checks = [_rel("a2_mc_vs_closed_form", a.mean, spectral.a2_closed_form(), 0.01),
              _abs("vicious_constant_rel_std_err", v["std_err"] / v["measured"], 0.0, 0.03),
              _rel("vicious_constant_vs_erf_oracle", v["measured"], v["erf_oracle"], 0.03)]
    info = {"vicious_measured": v["measured"], "closed_form_c2": v["closed_form"],
            "ratio_to_closed_form": v["ratio_to_closed_form"]}
    return checks, info


DETERMINISM_RUNS = {
    "fk_survival_scan": ["survival", "--model", "chain", "--n", "2", "--xi", "1", "--x", "0,1", "--t", "1,2,4",
     "--method", "mc", "--paths", "20000", "--dt", "1e-3", "--seed", "11"],
    "hardkill_chain3": ["simulate", "--model", "chain", "--n", "3", "--xi", "0.5", "--x0=-1,0,1", "--t", "1",
     "--dt", "1e-3", "--paths", "20000", "--scheme", "hardkill", "--seed", "11"],
    "oconnell_histogram": ["simulate", "--model", "chain", "--n", "2", "--xi", "1", "--x0", "0,1", "--t", "1",
     "--dt", "1e-3", "--paths", "20000", "--process", "oconnell", "--seed", "11"],
}


def criterion_11(workers=1):
    from .cli import run_to_text
    checks = []
    other = 4 if workers == 1 else 1
    for name, argv in DETERMINISM_RUNS.items():
        a = run_to_text(argv + ["--workers", str(workers)])
        b = run_to_text(argv + ["--workers", str(other)])
        checks.append(Check(f"{name}_identical", float(a != b), 0.0, 0.0, a == b))
    return checks, {}


CRITERIA = {
    1: ("wall constant at T=1e4", criterion_1),
    2: ("survival exponents", criterion_2),
    3: ("Monte Carlo vs quadrature survival", criterion_3),
    4: ("Chapman-Kolmogorov", criterion_4),
    5: ("ground-state eigenfunction residual", criterion_5),
    6: ("Whittaker scaling limit and GT volume", criterion_6),
    7: ("long-time asymptotic density", criterion_7),
    8: ("xi -> 0 limits", criterion_8),
    9: ("conditioned-process sampling", criterion_9),
    10: ("constants", criterion_10),
    11: ("determinism across worker counts", criterion_11),
}


def run_criterion(number, workers=1):
    title, fn = CRITERIA[number]
    t0 = time.perf_counter()
    checks, info = fn(workers)
    return CriterionResult(number, title, checks, info, time.perf_counter() - t0)


def run(numbers=None, workers=1, echo=print):
    results = []
    for n in numbers or sorted(CRITERIA):
        r = run_criterion(n, workers)
        echo(r.line())
        results.append(r)
    return results

"""Command line harness: ``python -m todakill <subcommand> ...``.

Flags and a flat JSON ``--config`` file share one table of parameters per
subcommand.  Resolution order is flag, then ``TODA_WORKERS`` (workers only), then
the config file, then the default.  Exit codes: 0 ok, 2 invalid input, 3 a
numerical tolerance was not met, 4 I/O failure.

Negative coordinates must be attached with '=', as in ``--x0=-1,0,1``.
"""
import argparse
import json
import math
import os
import sys

import numpy as np

from . import acceptance, analysis, output, simulate, spectral, specfun, whittaker
from .config import ModelSpec, QuadratureSpec, SimConfig
from .quad import QuadratureError

EXIT_OK, EXIT_INVALID, EXIT_TOLERANCE, EXIT_IO = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _bad(flag, why):
    return CliError(EXIT_INVALID, f"--{flag.replace('_', '-')}: {why}")


# --------------------------------------------------------------------------- value parsers
# each takes (flag, raw) where raw comes from the command line (str) or JSON (any)

def _float(flag, raw, lo=-math.inf, hi=math.inf, open_lo=False):
    try:
        v = float(raw)
    except (TypeError, ValueError):
        raise _bad(flag, f"expected a number, got {raw!r}") from None
    if not math.isfinite(v) or v < lo or v > hi or (open_lo and v == lo):
        bound = f"> {lo:g}" if open_lo else f">= {lo:g}"
        raise _bad(flag, f"{v!r} out of range (must be finite, {bound}, <= {hi:g})")
    return v


def positive(flag, raw):
    return _float(flag, raw, 0.0, open_lo=True)


def nonneg(flag, raw):
    return _float(flag, raw, 0.0)


def number(flag, raw):
    return _float(flag, raw)


def _int(flag, raw, lo, hi=2**64 - 1):
    if isinstance(raw, float) and raw.is_integer():
        raw = int(raw)
    try:
        v = int(raw)
    except (TypeError, ValueError):
        raise _bad(flag, f"expected an integer, got {raw!r}") from None
    if not lo <= v <= hi:
        raise _bad(flag, f"{v} out of range [{lo}, {hi}]")
    return v


def count(flag, raw):
    return _int(flag, raw, 1)


def seed(flag, raw):
    return _int(flag, raw, 0)


def _split(raw, sep=","):
    if isinstance(raw, (list, tuple)):
        return list(raw)
    return [s for s in str(raw).split(sep) if s.strip()]


def coords(flag, raw):
    vals = [number(flag, v) for v in _split(raw)]
    if not vals:
        raise _bad(flag, "empty coordinate list")
    return vals


def points(flag, raw):
    """Several configurations separated by ';' (or a JSON list of lists)."""
    if isinstance(raw, (list, tuple)) and raw and isinstance(raw[0], (list, tuple)):
        return [coords(flag, p) for p in raw]
    if isinstance(raw, (list, tuple)):
        return [coords(flag, raw)]
    return [coords(flag, p) for p in str(raw).split(";") if p.strip()]


def positive_list(flag, raw):
    vals = sorted(positive(flag, v) for v in _split(raw))
    if not vals:
        raise _bad(flag, "empty list")
    return vals


def number_list(flag, raw):
    return [number(flag, v) for v in _split(raw)]


def int_list(flag, raw):
    return [_int(flag, v, 1, 11) for v in _split(raw)]


def boolean(flag, raw):
    if isinstance(raw, bool):
        return raw
    s = str(raw).lower()
    if s in ("1", "true", "yes"):
        return True
    if s in ("0", "false", "no"):
        return False
    raise _bad(flag, f"expected true/false, got {raw!r}")


def choice(*options):
    def parse(flag, raw):
        if raw not in options:
            raise _bad(flag, f"{raw!r} is not one of {', '.join(options)}")
        return raw
    return parse


def text(flag, raw):
    return None if raw is None else str(raw)


# --------------------------------------------------------------------------- parameter tables

COMMON = {
    "seed": (seed, 0, "RNG seed"),
    "workers": (count, 1, "threads for Monte Carlo (TODA_WORKERS if absent)"),
    "out": (text, None, "output file, stdout by default"),
}
MODEL = {
    "model": (choice("wall", "chain"), "wall", "killing model"),
    "n": (lambda f, r: _int(f, r, 1, 6), None, "particle count (chain)"),
    "xi": (positive, 1.0, "interaction length"),
}
PARAMS = {
    "eval": {
        "fn": (choice("bessel_k_real", "bessel_k_imag", "kt", "whittaker_n2", "whittaker",
                      "whittaker_zero", "gt_volume", "vandermonde", "sklyanin"), "bessel_k_real",
               "function to evaluate"),
        "nu": (number_list, None, "order(s), or the spectral parameter (zero by default)"),
        "z": (positive_list, [1.0], "argument(s)"),
        "x": (points, None, "configurations 'a,b;c,d'"),
        "imaginary": (boolean, False, "spectral parameter is i*nu"),
        "tol": (positive, 1e-10, "absolute quadrature tolerance"),
    },
    "density": {
        **MODEL,
        "kind": (choice("q", "conditioned", "finite"), "q", "transition, eternal or finite-horizon conditioned"),
        "t": (positive, 1.0, "time"),
        "x": (coords, [0.0], "start"),
        "y": (points, [[1.0]], "end points 'a,b;c,d'"),
        "horizon": (positive, None, "conditioning horizon T (kind=finite)"),
        "s": (nonneg, 0.0, "start time s (kind=finite)"),
        "mode": (choice("factorized", "full", "mc_assisted"), "factorized", "chain quadrature route"),
        "samples": (count, 100_000, "inner Monte Carlo samples (mc_assisted)"),
        "tol": (positive, 1e-10, "absolute quadrature tolerance"),
    },
    "survival": {
        **MODEL,
        "x": (coords, [0.0], "start"),
        "t": (positive_list, [1.0], "time(s)"),
        "method": (choice("quadrature", "mc"), "quadrature", "evaluation route"),
        "paths": (count, 100_000, "Monte Carlo paths"),
        "dt": (positive, 1e-3, "time step"),
        "scheme": (choice("fk", "hardkill"), "fk", "Monte Carlo killing scheme"),
        "tol": (positive, 1e-10, "absolute quadrature tolerance"),
    },
    "simulate": {
        **MODEL,
        "x0": (coords, [0.0], "start"),
        "t": (positive_list, [1.0], "horizon, or checkpoint times"),
        "dt": (positive, 1e-3, "time step"),
        "paths": (count, 100_000, "paths"),
        "scheme": (choice("fk", "hardkill"), "fk", "killing scheme (process=killed)"),
        "process": (choice("killed", "oconnell", "dyson", "matsumoto_yor"), "killed", "what to simulate"),
        "bins": (lambda f, r: _int(f, r, 2, 100_000), 50, "histogram bins (diffusions)"),
    },
    "limits": {
        "xi": (positive, 0.02, "interaction length"),
        "paths": (lambda f, r: _int(f, r, 1000), 100_000, "Monte Carlo paths"),
        "dt": (positive, 1e-4, "time step of the functional"),
        "format": (choice("json", "text"), "json", "report format"),
    },
    "fit": {
        **MODEL,
        "x": (coords, [0.0], "start"),
        "t": (positive_list, None, "times (at least four)"),
        "method": (choice("quadrature", "mc"), "quadrature", "survival route"),
        "paths": (count, 100_000, "Monte Carlo paths"),
        "dt": (positive, 1e-3, "time step"),
        "tol": (positive, 0.05, "allowed slope deviation"),
        "format": (choice("json", "text"), "json", "report format"),
    },
    "selftest": {
        "tier": (choice("fast", "acceptance"), "fast", "which suite"),
        "criteria": (int_list, None, "acceptance criteria to run (default all)"),
        "format": (choice("json", "text"), "text", "report format"),
    },
}


def build_parser():
    parser = argparse.ArgumentParser(prog="todakill", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, table in PARAMS.items():
        p = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        for key, (_, default, help_) in {**table, **COMMON}.items():
            p.add_argument("--" + key.replace("_", "-"), dest=key, help=f"{help_} (default {default})")
        p.add_argument("--config", dest="config", help="flat JSON file of parameters")
        p.add_argument("--dump-config", dest="dump_config", action="store_true",
                       help="print the resolved parameters as JSON and exit")
    return parser


def resolve(command, given, env=None):
    """Merge defaults, config file, TODA_WORKERS and flags into a validated dict."""
    env = os.environ if env is None else env
    table = {**PARAMS[command], **COMMON}
    raw = {k: d for k, (_, d, _) in table.items()}
    if given.get("config"):
        try:
            with open(given["config"], encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as e:
            raise CliError(EXIT_IO, f"--config: {e}") from None
        except json.JSONDecodeError as e:
            raise CliError(EXIT_INVALID, f"--config: not valid JSON ({e})") from None
        if not isinstance(loaded, dict):
            raise CliError(EXIT_INVALID, "--config: expected a JSON object")
        unknown = sorted(set(loaded) - set(table) - {"command"})
        if unknown:
            raise CliError(EXIT_INVALID, f"--config: unknown key(s) {', '.join(unknown)}")
        if loaded.get("command", command) != command:
            raise CliError(EXIT_INVALID, f"--config: written for {loaded['command']!r}, not {command!r}")
        raw.update({k: v for k, v in loaded.items() if k != "command"})
    if "workers" not in given and env.get("TODA_WORKERS"):
        raw["workers"] = env["TODA_WORKERS"]
    raw.update({k: v for k, v in given.items() if k in table})
    params = {}
    for key, (parse, _, _) in table.items():
        params[key] = None if raw[key] is None else parse(key, raw[key])
    return params


# --------------------------------------------------------------------------- subcommands

def _model(p, dims):
    if p["model"] == "wall":
        if p["n"] not in (None, 1):
            raise _bad("n", "the wall model has one particle")
        return ModelSpec.wall(p["xi"])
    n = p["n"] or dims
    if n < 2:
        raise _bad("n", "the chain needs at least two particles")
    return ModelSpec.chain(n, p["xi"])


def _check_dims(flag, x, model):
    if len(x) != model.n_particles:
        raise _bad(flag, f"expected {model.n_particles} coordinate(s), got {len(x)}")


def _quad(p):
    return QuadratureSpec(abs_tol=p["tol"])


def _row(params, value, err, method, seed_):
    return {**params, "value": float(value), "err": float(err), "method": method, "seed": seed_}


def cmd_eval(p):
    fn, quad = p["fn"], _quad(p)
    rows, names = [], []
    if fn in ("bessel_k_real", "bessel_k_imag", "kt"):
        names = ["nu", "z"]
        for nu in p["nu"] or [0.0]:
            for z in p["z"]:
                if fn == "kt":
                    v, e, method = specfun.kt(nu, math.log(z)), 0.0, "kt"
                else:
                    f = specfun.bessel_k_real if fn == "bessel_k_real" else specfun.bessel_k_imag
                    v, info = f(nu, z, quad, full_output=True)
                    e, method = info["est_error"], info["flag"]
                rows.append(_row({"nu": nu, "z": z}, v, e, method, p["seed"]))
        return names, rows, "est_error"
    if p["x"] is None:
        raise _bad("x", f"required for fn={fn}")
    n = len(p["x"][0])
    if any(len(x) != n for x in p["x"]):
        raise _bad("x", "all configurations must have the same length")
    names = [f"x_{j + 1}" for j in range(n)]
    for x in p["x"]:
        params = dict(zip(names, x))
        if fn == "sklyanin":
            rows.append(_row(params, spectral.sklyanin_density(x), 0.0, "closed_form", p["seed"]))
        elif fn == "vandermonde":
            rows.append(_row(params, whittaker.vandermonde(x), 0.0, "closed_form", p["seed"]))
        elif fn == "gt_volume":
            try:
                rows.append(_row(params, whittaker.gt_volume(x), 0.0, "gauss_legendre", p["seed"]))
            except ValueError as e:
                raise _bad("x", str(e)) from None
        else:
            nu = None if fn == "whittaker_zero" else p["nu"]
            if nu is not None and len(nu) != n:
                raise _bad("nu", f"expected {n} entries")
            param = whittaker.SpectralParam(nu if nu is not None else (0.0,) * n, p["imaginary"])
            if fn == "whittaker_n2":
                if n != 2:
                    raise _bad("x", "whittaker_n2 needs two coordinates")
                v, e, method = whittaker.whittaker_n2(param, x, quad), 0.0, "bessel"
            else:
                if not 2 <= n <= 4:
                    raise _bad("x", "Whittaker functions are available for 2 <= N <= 4")
                v, e = whittaker.whittaker_givental(n, param, x, quad, full_output=True)
                method = "givental"
            rows.append(_row({**params, "part": "re"}, complex(v).real, e, method, p["seed"]))
            if p["imaginary"]:
                rows.append(_row({**params, "part": "im"}, complex(v).imag, e, method, p["seed"]))
    if fn in ("whittaker", "whittaker_n2", "whittaker_zero"):
        names = names + ["part"]
    return names, rows, "est_error"


def cmd_density(p):
    model = _model(p, len(p["x"]))
    _check_dims("x", p["x"], model)
    quad = _quad(p)
    names = [f"y_{j + 1}" for j in range(model.n_particles)]
    rows = []
    kw = {}
    if model.kind == "chain" and model.n_particles == 3:
        if p["mode"] != "mc_assisted":
            raise _bad("mode", "three particles need mode=mc_assisted")
        kw = {"mode": "mc_assisted", "n_samples": p["samples"], "seed": p["seed"]}
    elif model.kind == "chain" and model.n_particles > 3:
        raise _bad("n", "densities are available for N <= 3")
    elif model.kind == "chain":
        kw = {"mode": p["mode"]}
    for y in p["y"]:
        _check_dims("y", y, model)
        if p["kind"] == "q":
            if model.kind == "wall":
                r = spectral.q_wall(p["t"], y[0], p["x"][0], model.xi, quad)
            else:
                r = spectral.q_chain(p["t"], y, p["x"], model, quad, **kw)
        elif p["kind"] == "conditioned":
            r = spectral.conditioned_density_infinite(model, p["t"], y, p["x"], quad, **kw)
        else:
            if p["horizon"] is None:
                raise _bad("horizon", "required for kind=finite")
            if model.n_particles > 2:
                raise _bad("kind", "finite-horizon densities need N <= 2")
            if not p["s"] < p["t"] <= p["horizon"]:
                raise _bad("t", "need s < t <= horizon")
            r = spectral.conditioned_density_finite(model, p["horizon"], p["s"], p["x"], p["t"], y, quad)
        rows.append(_row(dict(zip(names, y)), r.value, r.est_error, r.method, p["seed"]))
    return names, rows, "est_error"


def _sim_config(p, horizon):
    return SimConfig(p["dt"], horizon, p["paths"], p["seed"], p.get("scheme", "fk"), p["workers"])


def _survival_rows(p, model, x, times):
    if p["method"] == "quadrature":
        if model.kind == "chain" and model.n_particles > 2:
            raise _bad("method", "quadrature survival needs N <= 2; use --method mc")
        out = []
        for t in times:
            r = spectral.survival(model, t, x, _quad(p))
            out.append(_row({"t": t}, r.value, r.est_error, r.method, p["seed"]))
        return out, "est_error"
    _check_times(times, p["dt"])
    cfg = _sim_config(p, times[-1])
    run = simulate.hard_kill_survival if p["scheme"] == "hardkill" else simulate.fk_survival
    est = run(model, x, cfg, times)
    return [_row({"t": t}, e.mean, e.std_err, p["scheme"], p["seed"]) for t, e in zip(times, est)], "std_err"


def _check_times(times, dt):
    for t in times:
        if abs(t / dt - round(t / dt)) > 1e-9 * t / dt:
            raise _bad("t", f"{t!r} is not a multiple of dt={dt!r}")


def cmd_survival(p):
    model = _model(p, len(p["x"]))
    _check_dims("x", p["x"], model)
    rows, err = _survival_rows(p, model, p["x"], p["t"])
    return ["t"], rows, err


def _histogram_rows(samples, bins, method, seed_, labels):
    rows = []
    n = samples.shape[0]
    for j, label in enumerate(labels):
        col = samples[:, j]
        edges = np.linspace(col.min(), col.max(), bins + 1)
        counts, _ = np.histogram(col, edges)
        width = np.diff(edges)
        for lo, hi, c, w in zip(edges[:-1], edges[1:], counts, width):
            dens = c / (n * w)
            err = math.sqrt(c) / (n * w)
            rows.append(_row({"coord": label, "bin_lo": float(lo), "bin_hi": float(hi)}, dens, err,
                             method, seed_))
    return ["coord", "bin_lo", "bin_hi"], rows


def cmd_simulate(p):
    proc = p["process"]
    if proc == "matsumoto_yor":
        if len(p["t"]) != 1:
            raise _bad("t", "matsumoto_yor takes one time")
        z = simulate.matsumoto_yor(p["xi"], p["t"][0], _sim_config(p, p["t"][0]))
        names, rows = _histogram_rows(z[:, None], p["bins"], proc, p["seed"], ["z"])
        return names, rows, "std_err"
    if len(p["t"]) != 1 and proc != "killed":
        raise _bad("t", f"{proc} takes one time")
    if proc == "dyson":
        ens = simulate.dyson_sde(p["x0"], _sim_config(p, p["t"][0]))
    else:
        model = _model(p, len(p["x0"]))
        _check_dims("x0", p["x0"], model)
        if proc == "killed":
            p = {**p, "method": "mc"}
            rows, err = _survival_rows(p, model, p["x0"], p["t"])
            return ["t"], rows, err
        if model.kind != "chain":
            raise _bad("model", "the O'Connell process needs the chain model")
        ens = simulate.oconnell_sde(model, p["x0"], _sim_config(p, p["t"][0]))
    term = ens.terminal[ens.alive]
    if len(term) == 0:
        raise CliError(EXIT_TOLERANCE, "every path aborted")
    labels = [f"x_{j + 1}" for j in range(term.shape[1])]
    names, rows = _histogram_rows(term, p["bins"], proc, p["seed"], labels)
    return names, rows, "std_err"


def _report(prov, checks, fmt):
    if fmt == "json":
        return output.json_text(prov, checks)
    return analysis.format_report(checks) + "\n"


def cmd_limits(p):
    checks = analysis.xi_zero_suite(p["xi"], p["paths"], p["seed"], p["dt"], p["workers"])
    return checks


def cmd_fit(p):
    model = _model(p, len(p["x"]))
    _check_dims("x", p["x"], model)
    times = p["t"]
    if times is None or len(times) < 4:
        raise _bad("t", "give at least four times")
    rows, _ = _survival_rows(p, model, p["x"], times)
    pts = [(r["t"], r["value"], r["err"]) if p["method"] == "mc" else (r["t"], r["value"]) for r in rows]
    if any(pt[1] <= 0 for pt in pts):
        raise CliError(EXIT_TOLERANCE, "a survival estimate is zero; use more paths or earlier times")
    fit = analysis.exponent_fit(pts)
    n = model.n_particles
    phi = 0.5 if model.kind == "wall" else n * (n - 1) / 4.0
    return [analysis.Check("slope", fit.slope, -phi, p["tol"], abs(fit.slope + phi) <= p["tol"]),
            analysis.Check("slope_std_err", fit.slope_std_err, 0.0, p["tol"], True),
            analysis.Check("r_squared", fit.r_squared, 1.0, 1.0, True)]


def fast_checks():
    """Forced identities; each must hold to rounding."""
    checks = []

    def add(name, value, target, tol):
        checks.append(analysis.Check(name, float(value), float(target), tol, abs(value - target) <= tol))

    t, x, y = 0.7, (0.1, 0.9), (-0.2, 1.3)

    def p(a, b):
        return math.exp(-(a - b) ** 2 / (2 * t)) / math.sqrt(2 * math.pi * t)

    add("km_determinant_n2", analysis.km_determinant(t, y, x),
        p(y[0], x[0]) * p(y[1], x[1]) - p(y[1], x[0]) * p(y[0], x[1]), 1e-14)
    add("vandermonde_n3", whittaker.vandermonde((0.0, 1.0, 3.0)), 6.0, 0.0)
    add("gt_volume_n3", whittaker.gt_volume((0.0, 1.0, 3.0)) * 2, 6.0, 1e-12)
    add("bessel_half_order", specfun.bessel_k_real(0.5, 1.3),
        math.sqrt(math.pi / 2.6) * math.exp(-1.3), 1e-10)
    add("bessel_symmetry", specfun.bessel_k_real(-0.7, 2.0), specfun.bessel_k_real(0.7, 2.0), 0.0)
    add("whittaker_n2_vs_givental",
        whittaker.whittaker_givental(2, None, (0.0, 1.0)).real / whittaker.whittaker_n2(None, (0.0, 1.0)).real,
        1.0, 1e-8)
    add("wall_decay_rate_origin", spectral.decay_rate(ModelSpec.wall(0.5), [0.0]), 2.0, 1e-15)
    add("a2_closed_form", spectral.a2_closed_form(), 3 * math.sqrt(2) / 4 * math.pi ** 1.5, 0.0)
    fit = analysis.exponent_fit([(t_, 3.0 * t_ ** -0.75) for t_ in (1.0, 2.0, 4.0, 8.0)])
    add("exponent_fit_power_law", fit.slope, -0.75, 1e-12)
    cfg = SimConfig(1e-2, 0.5, 3000, seed=5)
    a = simulate.fk_survival(ModelSpec.chain(2, 1.0), (0.0, 1.0), cfg)
    b = simulate.fk_survival(ModelSpec.chain(2, 1.0), (0.0, 1.0), SimConfig(1e-2, 0.5, 3000, seed=5, workers=3))
    add("fk_worker_independence", a.mean - b.mean, 0.0, 0.0)
    return checks


def cmd_selftest(p, echo):
    if p["tier"] == "fast":
        return fast_checks()
    results = acceptance.run(p["criteria"], p["workers"], echo=echo)
    checks = []
    for r in results:
        checks += [analysis.Check(f"c{r.number}_{c.name}", c.value, c.target, c.tol, c.passed) for c in r.checks]
    return checks


# --------------------------------------------------------------------------- entry points

TABLE_COMMANDS = {"eval": cmd_eval, "density": cmd_density, "survival": cmd_survival,
                  "simulate": cmd_simulate}


def execute(argv, env=None, echo=None):
    """Run one command; returns (text, exit_code, params).  Raises CliError on bad input."""
    echo = echo or print
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    command = ns.pop("command")
    dump = ns.pop("dump_config", False)
    params = resolve(command, ns, env)
    if dump:
        keep = {k: v for k, v in params.items() if k not in ("out",)}
        return json.dumps({"command": command, **keep}, indent=2, sort_keys=True) + "\n", EXIT_OK, {}
    prov = output.provenance(command, params)
    try:
        if command in TABLE_COMMANDS:
            names, rows, err_name = TABLE_COMMANDS[command](params)
            return output.csv_text(names, rows, prov, err_name), EXIT_OK, params
        if command == "limits":
            checks = cmd_limits(params)
        elif command == "fit":
            checks = cmd_fit(params)
        else:
            checks = cmd_selftest(params, echo)
    except QuadratureError as e:
        raise CliError(EXIT_TOLERANCE, f"quadrature tolerance not met: {e}") from None
    except ValueError as e:
        raise CliError(EXIT_INVALID, str(e)) from None
    code = EXIT_OK if all(c.passed for c in checks) else EXIT_TOLERANCE
    return _report(prov, checks, params["format"]), code, params


def run_to_text(argv, env=None):
    return execute(argv, env)[0]


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        text_, code, params = execute(argv)
        output.write_text(params.get("out"), text_)
    except CliError as e:
        print(f"todakill: {e}", file=sys.stderr)
        return e.code
    except OSError as e:
        print(f"todakill: {e}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())

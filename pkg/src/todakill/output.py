"""CSV and JSON emission with a provenance header.

The header records the package version, the resolved parameters and the seed.
The worker count is left out on purpose: it must not change a single byte.
"""
import csv
import io
import json
import sys

from . import __version__

EXCLUDED_FROM_PROVENANCE = ("workers", "out", "config", "dump_config")


def provenance(command, params):
    kept = {k: v for k, v in sorted(params.items()) if k not in EXCLUDED_FROM_PROVENANCE}
    return {"artifact": "todakill", "version": __version__, "command": command,
            "seed": params.get("seed"), "params": kept}


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_text(param_names, rows, prov, err_name="est_error"):
    """rows are dicts with the parameter keys plus value, err, method and seed."""
    buf = io.StringIO()
    buf.write("# " + json.dumps(prov, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(param_names) + ["value", err_name, "method", "seed"])
    for r in rows:
        w.writerow([_fmt(r[p]) for p in param_names]
                   + [_fmt(r["value"]), _fmt(r["err"]), r["method"], _fmt(r["seed"])])
    return buf.getvalue()


def json_text(prov, checks):
    body = {"provenance": prov, "checks": [c.as_dict() for c in checks]}
    return json.dumps(body, indent=2, sort_keys=True, default=float) + "\n"


def write_text(path, text):
    """Write to ``path`` or stdout when path is None or '-'."""
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)

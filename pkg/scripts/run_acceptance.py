"""Run the acceptance criteria and print one PASS/FAIL line each.

    python scripts/run_acceptance.py [--criteria 1,4,7] [--workers 4] [--json report.json]
"""
import argparse
import json
import sys

from todakill import acceptance


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--criteria", default="", help="comma-separated numbers, default all")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--json", default=None, help="also write checks and info here")
    args = ap.parse_args()
    numbers = [int(c) for c in args.criteria.split(",") if c] or None
    results = acceptance.run(numbers, args.workers, echo=lambda line: print(line, flush=True))
    if args.json:
        body = [{"criterion": r.number, "title": r.title, "passed": r.passed, "seconds": r.seconds,
                 "checks": [c.as_dict() for c in r.checks], "info": r.info} for r in results]
        with open(args.json, "w") as fh:
            json.dump(body, fh, indent=2, default=float)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return 0 if passed == len(results) else 3


if __name__ == "__main__":
    sys.exit(main())

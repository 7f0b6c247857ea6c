"""Run the reference experiments and print one PASS/FAIL line each.

    python3 scripts/run_checks.py                 # everything at full size
    python3 scripts/run_checks.py --only disk-convergence --json out.json
"""
import argparse
import json
import sys

from cavitor import experiments as ex

CHECKS = {
    "square-persistent-error": ex.square_persistent_error,
    "disk-convergence": ex.disk_sweep,
    "bessel-zero-gaps": ex.zero_gap_suite,
    "coupling-integral": ex.coupling_integral_checks,
    "coincidences": ex.coincidence_checks,
    "energy-cross-validation": ex.energy_and_cross_validation,
    "partial-data-signature": ex.partial_data_signature,
}


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--only", nargs="*", choices=list(CHECKS))
    p.add_argument("--json", help="write all values here")
    a = p.parse_args()
    results = []
    for name in a.only or CHECKS:
        res = CHECKS[name]()
        print(res.line(), flush=True)
        results.append(res)
    if a.json:
        with open(a.json, "w") as fh:
            json.dump([{"name": r.name, "passed": r.passed, "seconds": r.seconds, "values": r.values}
                       for r in results], fh, indent=2, default=str)
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())

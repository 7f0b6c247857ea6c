"""Tabulate |I(lam, nu, eps)| over eps for several cutoffs to see how fast the
non-coinciding coupling integral decays.

    python3 scripts/cutoff_decay.py --lam 1 --nu 1.5 --out decay.csv
"""
import argparse

import numpy as np

from cavitor import analysis, io
from cavitor.cutoff import parse_cutoff


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--nu", type=float, default=1.5)
    p.add_argument("--cutoffs", default="bump:0.5,bump:0.3,bump:0.1,poly5:0.5")
    p.add_argument("--eps", default="0.08,0.04,0.02,0.01,0.005")
    p.add_argument("--out", default="decay.csv")
    a = p.parse_args()
    eps = [float(e) for e in a.eps.split(",")]
    rows = []
    for spec in a.cutoffs.split(","):
        cut = parse_cutoff(spec)
        vals = [analysis.coupling_integral(a.lam, a.nu, e, cut) for e in eps]
        for e, v, nxt in zip(eps, vals, vals[1:] + [np.nan]):
            rows.append({"cutoff": spec, "eps": e, "I": v, "halving_factor": abs(v) / abs(nxt) if nxt else np.nan})
        print(spec, " ".join(f"{abs(v):.3e}" for v in vals))
    io.write_csv(a.out, rows)


if __name__ == "__main__":
    main()

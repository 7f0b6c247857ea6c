"""Disk T-doubling sweep with the three-bump phantom; writes a metrics CSV.

    python3 scripts/disk_sweep.py --source fdtd --T 5.3,10.6,21.2,42.4 --out disk_sweep.csv
"""
import argparse

from cavitor import experiments as ex
from cavitor import io


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--source", choices=["fdtd", "spectral"], default="fdtd")
    p.add_argument("--T", default="5.3,10.6,21.2,42.4")
    p.add_argument("--resolution", default="128,256")
    p.add_argument("--detectors", type=int, default=1024)
    p.add_argument("--out", default="disk_sweep.csv")
    a = p.parse_args()
    Ts = [float(t) for t in a.T.split(",")]
    res = ex.disk_sweep(Ts, a.source, tuple(int(v) for v in a.resolution.split(",")), a.detectors)
    print(res.line())
    v = res.values
    io.write_csv(a.out, [{"T": t, "l2w_rel": x, "h1_rel": y} for t, x, y in zip(v["T"], v["l2w_rel"], v["h1_rel"])])


if __name__ == "__main__":
    main()

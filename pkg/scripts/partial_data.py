"""Right-side-only versus full-boundary reconstruction on the square, with the modal make-up of
both residuals.

    python3 scripts/partial_data.py --T 490 --n 256
"""
import argparse

from cavitor import experiments as ex


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--T", type=float, default=490.0)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--cap", type=float, default=60.0)
    a = p.parse_args()
    res = ex.partial_data_signature(a.n, a.T, a.cap)
    print(res.line())
    for name, v in res.values.items():
        print(f"  {name}: L2 rel {v['l2w_rel']:.4f}, H1 rel {v['h1_rel']:.4f}, captured {v['captured']:.4f}")
        for idx, share in v["top"]:
            print(f"    mode {idx}: {share:.4f}")


if __name__ == "__main__":
    main()

"""Compare polar-FDTD boundary traces with the series solution on the disk.

    python3 scripts/cross_validate_disk.py --T 10.6 --cap 75 --resolution 128,256
"""
import argparse
import math

import numpy as np
from scipy.interpolate import CubicSpline

from cavitor import basis, fdtd, phantom, recording, spectral
from cavitor.grids import PolarGrid


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--T", type=float, default=10.6)
    p.add_argument("--cap", type=float, default=75.0)
    p.add_argument("--samples", type=int, default=2048)
    p.add_argument("--resolution", default="128,256")
    p.add_argument("--detectors", type=int, default=1024)
    a = p.parse_args()
    spec = phantom.three_bumps()
    det = recording.disk_detectors(a.detectors)
    state = spectral.project_initial(spec, basis.enumerate_modes(basis.DISK, "neumann", a.cap))
    dt = a.T / a.samples
    ref = spectral.record_boundary(state, det, dt, a.T)
    grid = PolarGrid(*(int(v) for v in a.resolution.split(",")))
    rec = fdtd.forward_run(grid, phantom.render(spec, grid), None, a.T, det, record_every=8)
    trace = CubicSpline(rec.times, rec.samples, axis=1)(ref.times)
    rel = np.linalg.norm(trace - ref.samples) / np.linalg.norm(ref.samples)
    print(f"cap {a.cap:g} ({len(state.modes)} modes, tail {state.tail / spec.exact_norms()[1]:.1e}), "
          f"grid {grid.nr}x{grid.ntheta}: relative L2 trace difference {rel:.4f}")


if __name__ == "__main__":
    main()

"""Gradual time reversal: gate the recording with ``alpha(t/T)``, run the solver backward from
zero terminal data, and score the result against a phantom when one is known."""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis, fdtd
from .cutoff import CutoffProfile
from .grids import CartesianGrid, PolarGrid
from .recording import BoundaryRecording

BACKENDS = ("cartesian-fdtd", "polar-fdtd")


class ReconstructionError(ValueError):
    pass


def gate_recording(rec: BoundaryRecording, cutoff: CutoffProfile, T: float) -> BoundaryRecording:
    """Multiply sample ``j`` by ``alpha(j dt / T)`` and drop samples after the first one at or past ``T``."""
    if T <= 0:
        raise ReconstructionError("T must be positive")
    if T > rec.duration * (1 + 1e-12):
        raise ReconstructionError(f"T = {T} exceeds the recording duration {rec.duration}")
    last = min(rec.n_samples - 1, int(math.ceil(T / rec.dt - 1e-9)))
    t = rec.times[: last + 1]
    gate = cutoff(t / T)
    return rec.with_samples(rec.samples[:, : last + 1] * gate, gated_T=T, cutoff=cutoff.spec())


def backend_for(grid) -> str:
    return "polar-fdtd" if isinstance(grid, PolarGrid) else "cartesian-fdtd"


def residual_metrics(v: np.ndarray, f: np.ndarray, grid) -> dict:
    r = v - f
    l2f, semif, h1f = analysis.norms(f, grid)
    l2r, semir, h1r = analysis.norms(r, grid)
    return {
        "l2w": l2r, "h1_semi": semir, "h1": h1r,
        "l2w_rel": l2r / l2f if l2f else math.inf,
        "h1_rel": h1r / h1f if h1f else math.inf,
        "energy_res": (semir / semif) ** 2 if semif else math.inf,
    }


@dataclass
class ReconstructionReport:
    field: np.ndarray
    grid: object
    T: float
    cutoff: CutoffProfile
    phantom: np.ndarray | None = None
    metrics: dict = field(default_factory=dict)
    decomposition: list | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def eps(self) -> float:
        return 1.0 / self.T

    @property
    def residual(self) -> np.ndarray | None:
        return None if self.phantom is None else self.field - self.phantom


def gradual_time_reversal(rec: BoundaryRecording, cutoff: CutoffProfile, T: float, grid,
                          phantom: np.ndarray | None = None, dt: float | None = None,
                          backend: str | None = None, provenance: dict | None = None) -> ReconstructionReport:
    expected = backend_for(grid)
    if backend is not None and backend != expected:
        raise ReconstructionError(f"backend {backend!r} does not fit a {grid.kind} grid")
    t0 = time.perf_counter()
    gated = gate_recording(rec, cutoff, T)
    v = fdtd.reversal_run(grid, gated, T=T, dt=dt)
    prov = {
        "T": T, "eps": 1.0 / T, "cutoff": cutoff.spec(), "backend": expected, "grid": grid.describe(),
        "dt": dt if dt is not None else fdtd.n_steps(T, fdtd.cfl_limit(grid))[1],
        "recording": {"n_detectors": rec.n_detectors, "dt": rec.dt, "duration": rec.duration,
                      "sides": list(rec.sides) if rec.sides else None, **rec.meta},
        **(provenance or {}),
    }
    report = ReconstructionReport(v, grid, T, cutoff, phantom, provenance=prov)
    if phantom is not None:
        report.metrics = residual_metrics(v, phantom, grid)
    report.provenance["seconds"] = time.perf_counter() - t0
    return report


def worker_count() -> int:
    env = os.environ.get("CAVITOR_THREADS")
    n = int(env) if env else (os.cpu_count() or 1)
    return max(1, n)


def _one(args):
    return gradual_time_reversal(*args)


def sweep_T(rec: BoundaryRecording, cutoff: CutoffProfile, T_list, grid,
            phantom: np.ndarray | None = None, workers: int | None = None) -> list[ReconstructionReport]:
    """Independent reconstructions for each ``T`` (ascending), run in parallel when allowed."""
    T_list = [float(t) for t in T_list]
    if not T_list:
        raise ReconstructionError("empty T list")
    if sorted(T_list) != T_list:
        raise ReconstructionError("T list must be ascending")
    if T_list[-1] > rec.duration * (1 + 1e-12):
        raise ReconstructionError(f"largest T {T_list[-1]} exceeds the recording duration {rec.duration}")
    workers = min(workers or worker_count(), len(T_list))
    jobs = [(rec, cutoff, T, grid, phantom) for T in T_list]
    if workers == 1:
        return [_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_one, jobs))


def metrics_rows(reports: list[ReconstructionReport]) -> list[dict]:
    return [{"T": r.T, "l2w_rel": r.metrics.get("l2w_rel", math.nan), "h1_rel": r.metrics.get("h1_rel", math.nan),
             "energy_res": r.metrics.get("energy_res", math.nan)} for r in reports]

"""Reference experiments with pass/fail thresholds, shared by the acceptance tests and the
scripts in ``scripts/``. Each returns a :class:`CheckResult`."""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import analysis, basis, fdtd, phantom, reconstruct, recording, specfun, spectral
from .cutoff import make_cutoff, parse_cutoff
from .grids import CartesianGrid, PolarGrid

SQ, DISK = basis.SQUARE, basis.DISK


@dataclass
class CheckResult:
    name: str
    passed: bool
    summary: str
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{self.name} {'PASS' if self.passed else 'FAIL'}: {self.summary} ({self.seconds:.1f}s)"


def _timed(fn):
    def run(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res

    run.__name__, run.__doc__ = fn.__name__, fn.__doc__
    return run


def _quiet_render(spec, grid, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return phantom.render(spec, grid, **kw)


# ---------------------------------------------------------------- square, single mode

@_timed
def square_persistent_error(n: int = 256, T: float = 100 * math.pi, cutoff: str = "bump:0.5",
                            tol: float = 0.10) -> CheckResult:
    """Full-data reversal of ``phi_{1,2}`` on the square converges to ``f + Err``,
    ``Err = (64 / 9 pi^3) sin 2x sin y``; the H1 distance must be below ``tol * ||Err||``."""
    spec = phantom.eigenmode(SQ, 1, 2)
    state = spectral.project_initial(spec, basis.enumerate_modes(SQ, "neumann", 20))
    det = recording.rectangle_detectors(SQ)
    rec = spectral.record_boundary(state, det, spectral.default_dt(20, T), T)
    grid = CartesianGrid(n, n, math.pi, math.pi)
    f = _quiet_render(spec, grid)
    rep = reconstruct.gradual_time_reversal(rec, parse_cutoff(cutoff), T, grid, f)
    X = grid.points()
    err = 64 / (9 * math.pi**3) * np.sin(2 * X[..., 0]) * np.sin(X[..., 1])
    err_h1 = analysis.norms(err, grid)[2]
    dist = analysis.norms(rep.residual - err, grid)[2]
    rel = dist / err_h1
    return CheckResult("square-persistent-error", rel < tol,
                       f"H1 distance to Err = {rel:.3e} of ||Err||_H1 = {err_h1:.4f} (limit {tol})",
                       {"relative_distance": rel, "err_h1": err_h1, **rep.metrics})


# ---------------------------------------------------------------- disk sweep

def disk_recording(T: float, source: str = "fdtd", resolution=(128, 256), n_detectors: int = 1024,
                   record_every: int = 4):
    """Boundary data of the three-bump disk phantom up to ``T``."""
    spec = phantom.three_bumps(DISK)
    det = recording.disk_detectors(n_detectors)
    if source == "spectral":
        cap = spectral.choose_cap(spec)
        state = spectral.project_initial(spec, basis.enumerate_modes(DISK, "neumann", cap))
        return spectral.record_boundary(state, det, spectral.default_dt(cap, T), T)
    grid = PolarGrid(*resolution)
    return fdtd.forward_run(grid, phantom.render(spec, grid), None, T, det, record_every=record_every)


@_timed
def disk_sweep(T_list=(5.3, 10.6, 21.2, 42.4), source: str = "fdtd", resolution=(128, 256),
               n_detectors: int = 1024, workers: int | None = None, final_h1: float = 0.05) -> CheckResult:
    """Errors fall monotonically along the T-doubling sweep and end below ``final_h1`` in H1."""
    rec = disk_recording(max(T_list), source, resolution, n_detectors)
    grid = PolarGrid(*resolution)
    f = phantom.render(phantom.three_bumps(DISK), grid)
    reps = reconstruct.sweep_T(rec, make_cutoff(), list(T_list), grid, f, workers=workers)
    l2 = [r.metrics["l2w_rel"] for r in reps]
    h1 = [r.metrics["h1_rel"] for r in reps]
    mono = all(b < a for a, b in zip(l2, l2[1:])) and all(b < a for a, b in zip(h1, h1[1:]))
    ok = l2[1] < l2[0] and mono and h1[-1] < final_h1
    table = ", ".join(f"T={t:g}: L2 {a:.4f} H1 {b:.4f}" for t, a, b in zip(T_list, l2, h1))
    return CheckResult("disk-convergence", ok, f"{source} data; {table}",
                       {"T": list(T_list), "l2w_rel": l2, "h1_rel": h1, "monotone": mono})


# ---------------------------------------------------------------- Bessel zero gaps

@_timed
def zero_gap_suite(m_max: int = 50, k_max: int = 100, residual_tol: float = 1e-10) -> CheckResult:
    rep = specfun.verify_zero_gaps(m_max, k_max)
    ok = rep.ok and rep.max_residual <= residual_tol
    return CheckResult("bessel-zero-gaps", ok,
                       f"{rep.n_checks} checks, {len(rep.violations)} violations, max root residual "
                       f"{rep.max_residual:.1e}, order-0 cross constant {rep.m0_constant:.4f}",
                       {"checks": rep.n_checks, "violations": len(rep.violations),
                        "max_residual": rep.max_residual, "m0_constant": rep.m0_constant})


# ---------------------------------------------------------------- coupling integral

@_timed
def coupling_integral_checks(cutoff: str = "bump:0.5") -> CheckResult:
    """``I(sqrt5, sqrt5, 0.01) = -sqrt5`` to 1e-6, and ``|I(1, 1.5, eps)|`` shrinks at least
    eightfold when ``eps`` halves from 0.02 to 0.01."""
    cut = parse_cutoff(cutoff)
    lam = math.sqrt(5)
    coinc = analysis.coupling_integral(lam, lam, 0.01, cut)
    i2 = analysis.coupling_integral(1.0, 1.5, 0.02, cut)
    i1 = analysis.coupling_integral(1.0, 1.5, 0.01, cut)
    ratio = abs(i2) / abs(i1)
    ok_a = abs(coinc + lam) < 1e-6
    ok_b = ratio >= 8.0
    return CheckResult("coupling-integral", ok_a and ok_b,
                       f"I(sqrt5,sqrt5,0.01)+sqrt5 = {coinc + lam:.1e} ({'ok' if ok_a else 'bad'}); "
                       f"|I(eps=0.02)|/|I(eps=0.01)| = {ratio:.3f} (need >= 8, {'ok' if ok_b else 'bad'})",
                       {"coincident": coinc, "I_0.02": i2, "I_0.01": i1, "ratio": ratio,
                        "coincident_ok": ok_a, "decay_ok": ok_b})


# ---------------------------------------------------------------- coincidences

@_timed
def coincidence_checks(cap: float = 20.0) -> CheckResult:
    neu = basis.enumerate_modes(SQ, "neumann", cap)
    recs = {(r.neumann_index, r.reversal_index): r
            for r in basis.detect_coincidences(neu, basis.enumerate_modes(SQ, "dirichlet", cap))}
    c12 = recs.get(((1, 2), (2, 1)))
    ok1 = c12 is not None and abs(c12.coupling + 32 / (9 * math.pi**2)) < 1e-8
    ok2 = ((8, 1), (7, 4)) in recs
    mixed = basis.detect_coincidences(neu, basis.enumerate_modes(SQ, "mixed", cap))
    rect = basis.parse_geometry("rectangle-pi:1,2")
    rr = basis.nonzero(basis.detect_coincidences(basis.enumerate_modes(rect, "neumann", cap),
                                                 basis.enumerate_modes(rect, "dirichlet", cap)))
    ok = ok1 and ok2 and not mixed and not rr
    return CheckResult("coincidences", ok,
                       f"((1,2),(2,1)) coupling {c12.coupling if c12 else float('nan'):.10f}; "
                       f"((8,1),(7,4)) flagged: {ok2}; mixed-BC hits: {len(mixed)}; "
                       f"pi x pi*sqrt2 coupled hits: {len(rr)}",
                       {"coupling_12": c12.coupling if c12 else None, "flag_81_74": ok2,
                        "mixed": len(mixed), "rectangle_coupled": len(rr)})


# ---------------------------------------------------------------- energy and cross-validation

def _trace_error(n: int, T: float, per_side: int = 64) -> float:
    spec = phantom.eigenmode(SQ, 1, 2)
    grid = CartesianGrid(n, n, math.pi, math.pi)
    det = recording.rectangle_detectors(SQ, per_side=per_side)
    rec = fdtd.forward_run(grid, _quiet_render(spec, grid), None, T, det)
    state = spectral.project_initial(spec, basis.enumerate_modes(SQ, "neumann", 3))
    ref = spectral.record_boundary(state, det, rec.dt, T * (1 + 1e-12))
    return float(np.linalg.norm(rec.samples - ref.samples) / np.linalg.norm(ref.samples))


@_timed
def energy_and_cross_validation(n: int = 256, traversals: int = 10) -> CheckResult:
    T = traversals * math.pi * math.sqrt(2)
    spec = phantom.three_bumps(SQ)
    state = spectral.project_initial(spec, basis.enumerate_modes(SQ, "neumann", 40))
    E = [spectral.evolve(state, t).instantaneous_energy() for t in np.linspace(0, 1000, 11)]
    spec_drift = (max(E) - min(E)) / state.energy

    grid = CartesianGrid(n, n, math.pi, math.pi)
    steps, dt = fdtd.n_steps(T, fdtd.cfl_limit(grid))
    st = fdtd.Stepper(grid, dt, phantom.render(spec, grid))
    st.first()
    e0 = fdtd.discrete_energy(grid, st.state.u, st.state.u_prev, dt, st.lap)
    lo = hi = e0
    for k in range(steps - 1):
        st.step()
        if k % 50 == 0:
            e = fdtd.discrete_energy(grid, st.state.u, st.state.u_prev, dt, st.lap)
            lo, hi = min(lo, e), max(hi, e)
    fdtd_drift = (hi - lo) / e0

    trace = _trace_error(n, T)
    coarse, fine = _trace_error(n // 4, T), _trace_error(n // 2, T)
    factor = coarse / fine
    ok = spec_drift < 1e-12 and fdtd_drift < 1e-3 and trace < 0.01 and factor >= 3
    return CheckResult("energy-cross-validation", ok,
                       f"series energy spread {spec_drift:.1e}; FDTD drift {fdtd_drift:.1e} over {traversals} "
                       f"traversals; trace error at {n}^2 {trace:.2e}; refinement factor {factor:.2f}",
                       {"spectral_drift": spec_drift, "fdtd_drift": fdtd_drift, "trace_error": trace,
                        "refinement_factor": factor})


# ---------------------------------------------------------------- partial data

@_timed
def partial_data_signature(n: int = 256, T: float = 490.0, cap: float = 60.0, ratio: float = 2.0) -> CheckResult:
    """Right-side-only data leave a residual dominated by slow near-vertical modes (``m >= 2k``);
    full data do not."""
    grid = CartesianGrid(n, n, math.pi, math.pi)
    f = phantom.render(phantom.three_bumps(SQ), grid)
    det = recording.rectangle_detectors(SQ, per_side=n)
    full = fdtd.forward_run(grid, f, None, T, det)
    right = recording.on_boundary(SQ, det, ("right",))
    part = recording.BoundaryRecording(SQ, det[right], full.dt, full.samples[right], ("right",), dict(full.meta))
    cut = make_cutoff()
    out = {}
    for name, rec, bc in (("partial", part, "mixed"), ("full", full, "dirichlet")):
        rep = reconstruct.gradual_time_reversal(rec, cut, T, grid, f)
        table = analysis.decompose_residual(rep.residual, grid, basis.enumerate_modes(SQ, bc, cap))
        out[name] = {"slow_share": analysis.slow_share(table, ratio),
                     "captured": sum(r.share for r in table), **rep.metrics,
                     "top": [(r.index, r.share) for r in table[:5]]}
    p, q = out["partial"]["slow_share"], out["full"]["slow_share"]
    ok = p > 0.5 and not q > 0.5
    return CheckResult("partial-data-signature", ok,
                       f"slow-mode share (m >= {ratio:g}k): right-side data {p:.3f}, full data {q:.3f}",
                       out)

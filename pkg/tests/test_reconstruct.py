import math
import warnings

import numpy as np
import pytest

from cavitor import basis, fdtd, phantom, reconstruct, recording
from cavitor.cutoff import make_cutoff
from cavitor.grids import CartesianGrid, PolarGrid

SQ = basis.SQUARE
CUT = make_cutoff("bump", 0.5)


def square_data(n=24, T=8.0, sides=None):
    g = CartesianGrid(n, n, math.pi, math.pi)
    f = phantom.render(phantom.three_bumps(SQ), g, margin_cells=1)
    det = recording.rectangle_detectors(SQ, sides or recording.SIDES, n)
    return g, f, fdtd.forward_run(g, f, None, T, det, sides=sides)


def test_gate_recording():
    det = recording.disk_detectors(8)
    rec = recording.BoundaryRecording(basis.DISK, det, 0.1, np.ones((8, 101)))
    gated = reconstruct.gate_recording(rec, CUT, 4.05)
    assert gated.n_samples == 42  # the first sample at or past T is kept
    assert np.all(gated.samples[:, :21] == 1.0)
    assert np.all(gated.samples[:, -1] == 0.0)
    assert gated.meta["gated_T"] == 4.05
    with pytest.raises(reconstruct.ReconstructionError):
        reconstruct.gate_recording(rec, CUT, 10.5)
    with pytest.raises(reconstruct.ReconstructionError):
        reconstruct.gate_recording(rec, CUT, 0.0)


def test_residual_metrics():
    g = PolarGrid(16, 32)
    f = phantom.render(phantom.three_bumps(), g, margin_cells=1)
    m = reconstruct.residual_metrics(f, f, g)
    assert m["l2w"] == 0.0 and m["h1_rel"] == 0.0
    m = reconstruct.residual_metrics(np.zeros(g.shape), f, g)
    assert m["l2w_rel"] == pytest.approx(1.0) and m["energy_res"] == pytest.approx(1.0)


def test_error_decreases_with_T():
    g, f, rec = square_data(T=16.0)
    reps = reconstruct.sweep_T(rec, CUT, [4.0, 16.0], g, f, workers=1)
    assert reps[1].metrics["l2w_rel"] < reps[0].metrics["l2w_rel"]
    assert reps[1].eps == pytest.approx(1 / 16.0)
    assert np.array_equal(reps[1].residual, reps[1].field - f)
    assert reps[0].provenance["backend"] == "cartesian-fdtd"


def test_sweep_is_independent_of_worker_count():
    g, f, rec = square_data(n=16, T=3.0)
    one = reconstruct.sweep_T(rec, CUT, [1.5, 3.0], g, f, workers=1)
    two = reconstruct.sweep_T(rec, CUT, [1.5, 3.0], g, f, workers=2)
    for a, b in zip(one, two):
        assert np.max(np.abs(a.field - b.field)) <= 1e-12


def test_sweep_argument_checks():
    g, f, rec = square_data(n=12, T=2.0)
    with pytest.raises(reconstruct.ReconstructionError):
        reconstruct.sweep_T(rec, CUT, [2.0, 1.0], g)
    with pytest.raises(reconstruct.ReconstructionError):
        reconstruct.sweep_T(rec, CUT, [], g)
    with pytest.raises(reconstruct.ReconstructionError):
        reconstruct.sweep_T(rec, CUT, [3.0], g)
    with pytest.raises(reconstruct.ReconstructionError):
        reconstruct.gradual_time_reversal(rec, CUT, 1.0, g, backend="polar-fdtd")


def test_partial_data_reconstruction_runs():
    g, f, rec = square_data(n=16, T=6.0, sides=("right",))
    assert rec.sides == ("right",)
    rep = reconstruct.gradual_time_reversal(rec, CUT, 6.0, g, f)
    assert 0 < rep.metrics["l2w_rel"] < 1.5
    assert rep.provenance["recording"]["sides"] == ["right"]


def test_same_grid_data_uses_samples_directly(monkeypatch):
    # forward dt equals reversal dt: the reversal reads the recorded samples without interpolation
    g, f, rec = square_data(n=16, T=4.0)
    gated = reconstruct.gate_recording(rec, CUT, 4.0)
    ref = fdtd.reversal_run(g, gated, T=4.0)

    def boom(*a, **k):
        raise AssertionError("time interpolation used")

    monkeypatch.setattr(fdtd, "_windowed_spline", boom)
    np.testing.assert_array_equal(fdtd.reversal_run(g, gated, T=4.0), ref)
    # values between samples do need the spline
    with pytest.raises(AssertionError, match="time interpolation"):
        fdtd.reversal_run(g, gated, T=4.0, dt=4.0 / (round(4.0 / gated.dt) + 1))

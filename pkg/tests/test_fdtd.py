import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavitor import basis, fdtd, phantom, recording, spectral
from cavitor.grids import CartesianGrid, PolarGrid, ResolutionError
from cavitor.specfun import bessel_j, bessel_prime_zero

SQ = basis.SQUARE


def small_grids():
    return [CartesianGrid(24, 18, math.pi, 2.0), PolarGrid(12, 32)]


@pytest.mark.parametrize("grid", small_grids(), ids=["cartesian", "polar"])
def test_constant_is_harmonic(grid):
    lap = fdtd.Laplacian(grid)
    assert np.max(np.abs(lap(np.full(grid.shape, 3.7)))) < 1e-11


@pytest.mark.parametrize("grid", small_grids(), ids=["cartesian", "polar"])
def test_weighted_operator_is_symmetric(grid):
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal((2, *grid.shape))
    if isinstance(grid, PolarGrid):
        u[0] = u[0, 0]
        v[0] = v[0, 0]
    lap, w = fdtd.Laplacian(grid), grid.weights()
    a, b = np.sum(w * u * lap(v)), np.sum(w * v * lap(u))
    assert a == pytest.approx(b, rel=1e-12)
    assert np.sum(w * u * lap(u)) < 0


def test_weights_integrate_area():
    assert CartesianGrid(10, 7, 2.0, 3.0).weights().sum() == pytest.approx(6.0, rel=1e-14)
    assert PolarGrid(9, 20).weights().sum() == pytest.approx(math.pi, rel=1e-13)


def test_cartesian_cosines_are_exact_eigenvectors():
    g = CartesianGrid(40, 30, math.pi, math.pi)
    X, Y = np.meshgrid(g.x, g.y, indexing="ij")
    u = np.cos(3 * X) * np.cos(2 * Y)
    lam2 = (4 / g.hx**2) * math.sin(3 * g.hx / 2) ** 2 + (4 / g.hy**2) * math.sin(2 * g.hy / 2) ** 2
    np.testing.assert_allclose(fdtd.Laplacian(g)(u), -lam2 * u, atol=1e-9)


def test_polar_harmonic_function_interior():
    errs = []
    for nr in (16, 32, 64):
        g = PolarGrid(nr, 4 * nr)
        P = g.points()
        u = P[..., 0] ** 2 - P[..., 1] ** 2 + P[..., 0]
        errs.append(np.max(np.abs(fdtd.Laplacian(g)(u)[1:-1])))
    assert errs[0] < 0.03
    assert errs[0] / errs[1] > 2 and errs[1] / errs[2] > 2


def test_polar_origin_update():
    g = PolarGrid(16, 32)
    P = g.points()
    u = P[..., 0] ** 2 + P[..., 1] ** 2  # Laplacian 4
    assert fdtd.Laplacian(g)(u)[0, 0] == pytest.approx(4.0, rel=1e-12)


def test_polar_resolution_limits():
    with pytest.raises(ResolutionError):
        PolarGrid(4, 64)
    with pytest.raises(ResolutionError):
        PolarGrid(16, 8)


def test_cfl():
    g = CartesianGrid(32, 32, math.pi, math.pi)
    lim = fdtd.cfl_limit(g)
    assert lim == pytest.approx(0.9 * (math.pi / 32) / math.sqrt(2))
    with pytest.raises(fdtd.CFLError):
        fdtd.Stepper(g, 1.01 * lim, np.zeros(g.shape))
    assert fdtd.n_steps(1.0, 0.3) == (4, 0.25)


def test_variable_speed_lowers_cfl():
    c = np.ones((33, 33))
    c[10:20, 10:20] = 2.0
    g = CartesianGrid(32, 32, math.pi, math.pi, c)
    assert g.c_max == 2.0 and fdtd.cfl_limit(g) == pytest.approx(fdtd.cfl_limit(CartesianGrid(32, 32, math.pi, math.pi)) / 2)


@pytest.mark.parametrize("grid", [CartesianGrid(48, 48, math.pi, math.pi), PolarGrid(24, 64)], ids=["cartesian", "polar"])
def test_discrete_energy_conserved(grid):
    spec = phantom.three_bumps(basis.DISK if isinstance(grid, PolarGrid) else SQ)
    f = phantom.render(spec, grid, margin_cells=1)
    steps, dt = fdtd.n_steps(6.0, fdtd.cfl_limit(grid))
    st_ = fdtd.Stepper(grid, dt, f)
    st_.first()
    e0 = fdtd.discrete_energy(grid, st_.state.u, st_.state.u_prev, dt)
    es = []
    for _ in range(steps):
        st_.step()
        es.append(fdtd.discrete_energy(grid, st_.state.u, st_.state.u_prev, dt))
    assert max(abs(e - e0) for e in es) < 1e-11 * e0
    # and it approximates the continuous energy ||grad f||^2 (coarse grid: about 6 cells per radius)
    assert e0 == pytest.approx(spec.exact_norms()[1], rel=0.1)


def test_constant_initial_data_gives_constant_recording():
    g = CartesianGrid(20, 20, math.pi, math.pi)
    det = recording.rectangle_detectors(SQ, per_side=8)
    rec = fdtd.forward_run(g, np.full(g.shape, 2.5), None, 3.0, det)
    assert np.max(np.abs(rec.samples - 2.5)) < 1e-13


def test_forward_run_is_deterministic():
    g = PolarGrid(16, 32)
    f = phantom.render(phantom.three_bumps(), g, margin_cells=0.5)
    det = recording.disk_detectors(40)
    a = fdtd.forward_run(g, f, None, 1.0, det)
    b = fdtd.forward_run(g, f, None, 1.0, det)
    assert np.array_equal(a.samples, b.samples)


def _trace_error(n, T=4.0):
    g = CartesianGrid(n, n, math.pi, math.pi)
    spec = phantom.eigenmode(SQ, 1, 2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        f = phantom.render(spec, g)
    det = recording.rectangle_detectors(SQ, per_side=16)
    rec = fdtd.forward_run(g, f, None, T, det)
    state = spectral.project_initial(spec, basis.enumerate_modes(SQ, "neumann", 3))
    ref = spectral.record_boundary(state, det, rec.dt, T * (1 + 1e-12))
    return np.linalg.norm(rec.samples - ref.samples) / np.linalg.norm(ref.samples)


def test_second_order_convergence_against_series():
    e1, e2 = _trace_error(24), _trace_error(48)
    assert e1 / e2 >= 3.0
    assert e2 < 0.01


def test_polar_standing_mode_frequency():
    lam = bessel_prime_zero(0, 2)
    g = PolarGrid(64, 128)
    f = bessel_j(0, lam * g.r)[:, None] * np.ones(g.shape)
    steps, dt = fdtd.n_steps(4 * 2 * math.pi / lam, fdtd.cfl_limit(g))
    vals = []
    fdtd.forward_run(g, f, dt, steps * dt, recording.disk_detectors(4),
                     on_step=lambda s: vals.append(s.u[0, 0]))
    v = np.array(vals)
    t = (np.arange(len(v)) + 1) * dt
    cross = np.flatnonzero(np.sign(v[:-1]) != np.sign(v[1:]))
    tz = t[cross] - v[cross] * dt / (v[cross + 1] - v[cross])
    period = 2 * np.mean(np.diff(tz))
    assert 2 * math.pi / period == pytest.approx(lam, rel=0.01)


def test_reversal_of_zero_data_is_zero():
    g = CartesianGrid(16, 16, math.pi, math.pi)
    det = recording.rectangle_detectors(SQ, per_side=16)
    rec = recording.BoundaryRecording(SQ, det, 0.05, np.zeros((len(det), 41)))
    assert not np.any(fdtd.reversal_run(g, rec, T=2.0))
    with pytest.raises(ValueError):
        fdtd.reversal_run(g, rec, T=1.0, dt=0.3)
    with pytest.raises(ValueError):
        fdtd.reversal_run(g, rec, T=5.0)


def test_reversal_imposes_boundary_data():
    # data equal to a time-independent harmonic function is reproduced in the interior
    g = CartesianGrid(20, 20, math.pi, math.pi)
    det = recording.rectangle_detectors(SQ, per_side=20)
    h = det[:, 0] - det[:, 1] + 1.0
    rec = recording.BoundaryRecording(SQ, det, 0.01, np.repeat(h[:, None], 301, axis=1))
    X, Y = np.meshgrid(g.x, g.y, indexing="ij")
    v = fdtd.reversal_run(g, rec, T=3.0)
    I, J = g.boundary_nodes()
    np.testing.assert_allclose(v[I, J], (X - Y + 1)[I, J], atol=1e-12)


@given(n=st.integers(8, 20), a=st.floats(0.5, 3.0), b=st.floats(0.5, 3.0))
def test_cartesian_energy_property(n, a, b):
    g = CartesianGrid(n, n + 3, a, b)
    rng = np.random.default_rng(n)
    f = rng.standard_normal(g.shape)
    steps, dt = fdtd.n_steps(1.0, fdtd.cfl_limit(g))
    s = fdtd.Stepper(g, dt, f)
    s.first()
    e0 = fdtd.discrete_energy(g, s.state.u, s.state.u_prev, dt)
    for _ in range(steps):
        s.step()
    e1 = fdtd.discrete_energy(g, s.state.u, s.state.u_prev, dt)
    assert e1 == pytest.approx(e0, rel=1e-10)

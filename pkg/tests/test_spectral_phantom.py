import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from cavitor import basis, phantom, recording, spectral
from cavitor.grids import CartesianGrid, PolarGrid, ResolutionError

SQ, DISK = basis.SQUARE, basis.DISK


# ---------------------------------------------------------------- phantoms

@pytest.mark.parametrize("p,R", [(2, 0.3), (3, 0.25), (5, 0.7)])
def test_bump_hankel_transform_matches_quadrature(p, R):
    b = phantom.Bump((0.0, 0.0), R, 1.0, p)
    for lam in (0.0, 1.3, 7.7, 31.0):
        ref, _ = integrate.quad(lambda r: 2 * math.pi * r * (1 - (r / R) ** 2) ** p * special.j0(lam * r), 0, R,
                                epsabs=1e-14, limit=200)
        assert b.hankel(lam)[0] == pytest.approx(ref, abs=1e-12)


def test_bump_norms_match_quadrature():
    b = phantom.Bump((0.1, 0.2), 0.4, 1.7, 3)
    l2, _ = integrate.quad(lambda r: 2 * math.pi * r * b.amplitude**2 * (1 - (r / b.radius) ** 2) ** 6, 0, b.radius)
    g2, _ = integrate.quad(lambda r: 2 * math.pi * r * (b.amplitude * 6 * r / b.radius**2
                                                      * (1 - (r / b.radius) ** 2) ** 2) ** 2, 0, b.radius)
    assert b.l2_sq == pytest.approx(l2, rel=1e-12)
    assert b.grad_sq == pytest.approx(g2, rel=1e-12)


@pytest.mark.parametrize("geom,grid", [(DISK, PolarGrid(96, 192)), (SQ, CartesianGrid(160, 160, math.pi, math.pi))],
                         ids=["disk", "square"])
def test_exact_coefficients_match_grid_quadrature(geom, grid):
    spec = phantom.three_bumps(geom)
    modes = basis.enumerate_modes(geom, "neumann", 12)
    exact = spec.coefficients(modes)
    num = spectral.project_initial(phantom.render(spec, grid), modes, grid).initial
    assert np.max(np.abs(exact - num)) < 2e-3 * np.max(np.abs(exact))


def test_default_phantoms():
    d = phantom.three_bumps()
    assert [b.center for b in d.bumps] == [(0.0, 0.35), (-0.3, -0.2), (0.3, -0.2)]
    assert [b.amplitude for b in d.bumps] == [1.0, 0.8, 0.6]
    assert d.disjoint
    s = phantom.three_bumps(SQ)
    assert all(phantom._clearance(SQ, b) > 0 for b in s.bumps)
    assert "stand-in" in d.label


def test_phantom_errors():
    with pytest.raises(phantom.PhantomError):
        phantom.PhantomSpec("bumps", DISK, (phantom.Bump((0.9, 0.0), 0.2),))
    with pytest.raises(phantom.PhantomError):
        phantom.Bump((0, 0), -1.0)
    with pytest.raises(phantom.PhantomError):
        phantom.render(phantom.three_bumps(DISK), CartesianGrid(8, 8, math.pi, math.pi))
    with pytest.raises(phantom.PhantomError):
        phantom.render(phantom.PhantomSpec("bumps", DISK, (phantom.Bump((0.0, 0.0), 0.95),)), PolarGrid(16, 32))
    with pytest.warns(UserWarning):
        phantom.render(phantom.eigenmode(SQ, 1, 2), CartesianGrid(8, 8, math.pi, math.pi))


# ---------------------------------------------------------------- series solution

def test_single_mode_trace():
    spec = phantom.eigenmode(SQ, 1, 2)
    state = spectral.project_initial(spec, basis.enumerate_modes(SQ, "neumann", 4))
    det = np.array([[math.pi, math.pi / 2]])
    dt = 0.05
    rec = spectral.record_boundary(state, det, dt, 10.0, geometry=SQ)
    j = np.arange(rec.n_samples)
    # phi_{1,2}(pi, pi/2) = (2/pi) cos(pi) cos(pi)
    np.testing.assert_allclose(rec.samples[0], (2 / math.pi) * np.cos(math.sqrt(5) * j * dt), atol=1e-14)
    assert rec.n_samples == 201


def test_zero_state_gives_zero_recording():
    modes = basis.enumerate_modes(DISK, "neumann", 5)
    state = spectral.ModalState(modes, np.zeros(len(modes)))
    rec = spectral.record_boundary(state, recording.disk_detectors(16), 0.01, 1.0, geometry=DISK)
    assert not np.any(rec.samples)


def test_undersampled_dt_is_rejected():
    state = spectral.project_initial(phantom.eigenmode(SQ, 3, 4), basis.enumerate_modes(SQ, "neumann", 6))
    with pytest.raises(ResolutionError):
        spectral.record_boundary(state, recording.rectangle_detectors(SQ, per_side=4), 0.1, 1.0)


@pytest.mark.parametrize("geom,sides", [(DISK, None), (SQ, None), (SQ, ("right",)), (SQ, ("bottom", "left"))])
def test_grouped_synthesis_matches_direct(geom, sides):
    spec = phantom.three_bumps(geom)
    modes = basis.enumerate_modes(geom, "neumann", 15)
    state = spectral.project_initial(spec, modes)
    det = (recording.disk_detectors(64) if geom is DISK
           else recording.rectangle_detectors(geom, sides or recording.SIDES, 12))
    dt = spectral.default_dt(15)
    rec = spectral.record_boundary(state, det, dt, 2.0, sides=sides)
    P = basis.mode_matrix(modes, det)
    t = rec.times
    direct = P @ (state.initial[:, None] * np.cos(np.outer(state.eigenvalues, t)))
    np.testing.assert_allclose(rec.samples, direct, atol=1e-12)


def test_synthesis_reproduces_phantom():
    spec = phantom.three_bumps(DISK)
    cap = spectral.choose_cap(spec, tail_tol=1e-4)
    state = spectral.project_initial(spec, basis.enumerate_modes(DISK, "neumann", cap))
    pts = np.array([[0.0, 0.35], [0.1, 0.1], [-0.3, -0.2], [0.5, 0.5]])
    np.testing.assert_allclose(spectral.synthesize(state, pts), spec.evaluate(pts[:, 0], pts[:, 1]), atol=5e-3)


def test_cap_meets_tail_rule():
    spec = phantom.three_bumps(DISK)
    cap = spectral.choose_cap(spec)
    state = spectral.project_initial(spec, basis.enumerate_modes(DISK, "neumann", cap))
    assert 0 <= state.tail < 1e-6 * spec.exact_norms()[1]
    assert spectral.choose_cap(phantom.eigenmode(SQ, 1, 2)) == 20.0


def test_default_dt():
    assert spectral.default_dt(10.0) == pytest.approx(math.pi / 80)
    dt = spectral.default_dt(197.0, 10.6)
    assert dt <= math.pi / 8 / 197.0
    assert 10.6 / dt == pytest.approx(round(10.6 / dt), abs=1e-9)


@given(t=st.floats(-50, 50))
def test_modal_invariants(t):
    spec = phantom.three_bumps(SQ)
    state = spectral.project_initial(spec, basis.enumerate_modes(SQ, "neumann", 10))
    a, b = spectral.evolve(state, t), spectral.evolve(state, -t)
    np.testing.assert_array_equal(a.coefficients, b.coefficients)
    assert a.l2 <= math.sqrt(np.sum(state.initial**2)) * (1 + 1e-15)
    assert a.instantaneous_energy() == pytest.approx(state.energy, rel=1e-12)

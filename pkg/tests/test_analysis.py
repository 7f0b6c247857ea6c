import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import simpson

from cavitor import analysis, basis, phantom
from cavitor.cutoff import make_cutoff
from cavitor.grids import CartesianGrid, PolarGrid

SQ = basis.SQUARE
BUMP = make_cutoff("bump", 0.5)


def simpson_oracle(lam, nu, eps, cut, n=1_000_000):
    """Brute-force composite Simpson of the unexpanded integrand on [t0, 1]."""
    s = np.linspace(cut.flat_end, 1.0, n + 1)
    _, d1, d2 = cut.derivatives(s)
    f = (2 * d1 * lam * np.sin(lam * s / eps) - eps * d2 * np.cos(lam * s / eps)) * np.sin(nu * s / eps)
    return simpson(f, x=s)




@pytest.mark.parametrize("lam,nu,eps,kind", [
    (1.0, 1.5, 0.02, "bump"), (math.sqrt(5), math.sqrt(5), 0.01, "bump"), (3.0, 2.0, 0.05, "poly5"),
    (0.0, 2.0, 0.1, "bump"), (7.0, 7.5, 0.03, "poly5"),
])
def test_coupling_integral_against_simpson(lam, nu, eps, kind):
    cut = make_cutoff(kind, 0.5)
    ref = simpson_oracle(lam, nu, eps, cut)
    assert analysis.coupling_integral(lam, nu, eps, cut) == pytest.approx(ref, abs=1e-8)
    assert analysis.coupling_integral_matrix([lam], [nu], eps, cut)[0, 0] == pytest.approx(ref, abs=1e-8)


def test_coinciding_eigenvalues_give_minus_nu():
    lam = math.sqrt(5)
    assert analysis.coupling_integral(lam, lam, 0.01, BUMP) == pytest.approx(-lam, abs=1e-6)


def test_matrix_and_scalar_routes_agree():
    lams = np.array([0.5, 1.0, 2.2, 4.0])
    nus = np.array([1.0, 1.7, 4.0])
    M = analysis.coupling_integral_matrix(lams, nus, 0.05, BUMP)
    for i, l in enumerate(lams):
        for j, n in enumerate(nus):
            assert M[i, j] == pytest.approx(analysis.coupling_integral(l, n, 0.05, BUMP), abs=1e-8)
    assert analysis.coupling_integral_matrix([], [1.0], 0.1, BUMP).shape == (0, 1)


def test_coupling_integral_argument_checks():
    with pytest.raises(ValueError):
        analysis.coupling_integral(1.0, 0.0, 0.1, BUMP)
    with pytest.raises(ValueError):
        analysis.coupling_integral(1.0, 1.0, -0.1, BUMP)


@given(lam=st.floats(0.2, 6.0), gap=st.floats(0.5, 4.0))
def test_non_coinciding_integral_is_small(lam, gap):
    # away from coincidence |I| = O(eps): integrate by parts once
    nu = lam + gap
    val = analysis.coupling_integral(lam, nu, 0.01, BUMP)
    assert abs(val) < 0.05 * (lam + nu) / gap


def test_square_persistent_residual_is_closed_form():
    neu = basis.enumerate_modes(SQ, "neumann", 20)
    rev = basis.enumerate_modes(SQ, "dirichlet", 20)
    coeffs = phantom.eigenmode(SQ, 1, 2).coefficients(neu)
    pred = analysis.predict_residual(coeffs, neu, rev, 0.01, BUMP)
    X = np.array([[0.3, 0.4], [1.1, 2.0], [2.5, 0.7]])
    err = 64 / (9 * math.pi**3) * np.sin(2 * X[:, 0]) * np.sin(X[:, 1])
    np.testing.assert_allclose(pred.field(X, "persistent"), err, atol=1e-14)
    c = 32 / (9 * math.pi**2)
    assert pred.h1_sq("persistent") == pytest.approx(c * c * 6, rel=1e-12)
    # the transient part is O(eps)
    assert math.sqrt(pred.h1_sq("transient")) < 0.1 * math.sqrt(pred.h1_sq("persistent"))


def test_prediction_transient_shrinks_with_eps():
    neu = basis.enumerate_modes(SQ, "neumann", 6)
    rev = basis.enumerate_modes(SQ, "dirichlet", 12)
    coeffs = phantom.eigenmode(SQ, 1, 2).coefficients(neu)
    t = [analysis.predict_residual(coeffs, neu, rev, e, BUMP).h1_sq("transient") for e in (0.1, 0.05)]
    assert t[1] < t[0]


def test_prediction_with_zero_data():
    neu = basis.enumerate_modes(SQ, "neumann", 3)
    rev = basis.enumerate_modes(SQ, "dirichlet", 3)
    pred = analysis.predict_residual(np.zeros(len(neu)), neu, rev, 0.1, BUMP)
    assert not np.any(pred.w0) and pred.h1_sq() == 0.0


def test_disk_has_no_persistent_part():
    neu = basis.enumerate_modes(basis.DISK, "neumann", 8)
    rev = basis.enumerate_modes(basis.DISK, "dirichlet", 8)
    coeffs = phantom.three_bumps().coefficients(neu)
    pred = analysis.predict_residual(coeffs, neu, rev, 0.05, BUMP)
    assert not np.any(pred.persistent)


# ---------------------------------------------------------------- norms, energy, decomposition

def test_norms_of_a_mode():
    g = CartesianGrid(200, 200, math.pi, math.pi)
    md = basis._rect_mode(SQ, "neumann", 2, 1)
    u = basis.eval_mode(md, g.points())
    l2, semi, h1 = analysis.norms(u, g)
    assert l2 == pytest.approx(1.0, rel=1e-4)
    assert semi == pytest.approx(math.sqrt(5), rel=1e-3)
    assert h1 == pytest.approx(math.sqrt(6), rel=1e-3)


def test_polar_norms_of_bump_phantom():
    spec = phantom.three_bumps()
    g = PolarGrid(128, 256)
    l2, semi, _ = analysis.norms(phantom.render(spec, g), g)
    e_l2, e_semi = spec.exact_norms()
    assert l2**2 == pytest.approx(e_l2, rel=2e-3)
    assert semi**2 == pytest.approx(e_semi, rel=2e-2)


def test_energy_forms_agree():
    g = CartesianGrid(64, 64, math.pi, math.pi)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        u = phantom.render(phantom.eigenmode(SQ, 1, 1), g)
    dt = 1e-3
    prev = u * math.cos(math.sqrt(2) * dt)
    a = analysis.energy(u, prev, g, dt)
    b = analysis.energy(u, prev, g, dt, form="centered")
    assert a == pytest.approx(2.0, rel=1e-3) and b == pytest.approx(2.0, rel=1e-3)


def test_decomposition_recovers_modes():
    g = CartesianGrid(128, 128, math.pi, math.pi)
    modes = basis.enumerate_modes(SQ, "mixed", 8)
    pick = {(0, 3): 0.6, (2, 1): -0.3, (1, 4): 0.2}
    w = sum(c * basis.eval_mode(basis._rect_mode(SQ, "mixed", *ix), g.points()) for ix, c in pick.items())
    table = analysis.decompose_residual(w, g, modes, min_share=1e-6)
    got = {r.index: r.coefficient for r in table}
    for ix, c in pick.items():
        assert got[ix] == pytest.approx(c, abs=1e-3)
    assert [r.index for r in table[:3]] == [(0, 3), (2, 1), (1, 4)]
    total = 0.36 + 0.09 + 0.04
    # (0, 3) and (1, 4) satisfy m >= 2k; (2, 1) does not
    assert analysis.slow_share(table) == pytest.approx((0.36 + 0.04) / total, abs=1e-3)
    assert analysis.decompose_residual(np.zeros(g.shape), g, modes) == []

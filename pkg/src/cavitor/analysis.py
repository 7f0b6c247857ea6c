"""Norms and energies on grids, the modal error oracle for gradual time reversal, and modal
decomposition of residuals.

The oracle needs the true coefficients ``u_n`` of the initial pressure, so it is a verification
instrument and not a reconstruction method. With ``v = u alpha + w`` the residual of the
reconstruction is ``w(0) = sum_k w_k(0) psi_k`` where

    nu_k w_k(0) = sum_n u_n I_{n,k}(eps) <psi_k, phi_n>,
    I(lam, nu, eps) = int_0^1 [2 alpha' lam sin(lam s/eps) - eps alpha'' cos(lam s/eps)] sin(nu s/eps) ds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import basis
from .cutoff import CutoffProfile
from .grids import CartesianGrid, PolarGrid


class QuadratureError(ArithmeticError):
    pass


# ---------------------------------------------------------------- norms and energies

def _c2(grid):
    return grid.c**2 if isinstance(grid, CartesianGrid) else 1.0


def gradient_sq(field: np.ndarray, grid) -> np.ndarray | float:
    """``|grad f|^2`` per node on Cartesian grids (centered, second-order one-sided at walls)."""
    gx, gy = np.gradient(field, grid.hx, grid.hy, edge_order=2)
    return gx * gx + gy * gy


def dirichlet_form(field: np.ndarray, grid) -> float:
    """``||grad f||^2``; on the polar grid this is the finite-volume edge sum used by the solver."""
    if isinstance(grid, CartesianGrid):
        return float(np.sum(grid.weights() * gradient_sq(field, grid)))
    from .fdtd import Laplacian

    return float(-np.sum(grid.weights() * field * Laplacian(grid)(field)))


def norms(field: np.ndarray, grid) -> tuple[float, float, float]:
    """``(||f||_{c^-2}, |f|_{H1}, ||f||_{H1})`` by grid quadrature."""
    f = np.asarray(field, dtype=float)
    l2 = math.sqrt(float(np.sum(grid.weights() * f * f / _c2(grid))))
    semi = math.sqrt(max(dirichlet_form(f, grid), 0.0))
    return l2, semi, math.hypot(l2, semi)


def inner(a: np.ndarray, b: np.ndarray, grid) -> float:
    return float(np.sum(grid.weights() * a * b / _c2(grid)))


def energy(u: np.ndarray, u_prev: np.ndarray, grid, dt: float, form: str = "leapfrog") -> float:
    """Discrete energy of two consecutive time levels.

    ``"leapfrog"`` is the quantity the scheme conserves exactly; ``"centered"`` uses the
    midpoint field with centered gradients and drifts at ``O(h^2)``.
    """
    if form == "leapfrog":
        from .fdtd import discrete_energy

        return discrete_energy(grid, u, u_prev, dt)
    v = (u - u_prev) / dt
    mid = 0.5 * (u + u_prev)
    return inner(v, v, grid) + dirichlet_form(mid, grid)


# ---------------------------------------------------------------- coupling integrals

def _panels(lam: float, nu: float, eps: float, t0: float) -> np.ndarray:
    n = max(1, math.ceil((lam + nu) * (1.0 - t0) / (2.0 * math.pi * eps)))
    return np.linspace(t0, 1.0, n + 1)


def coupling_integral(lam: float, nu: float, eps: float, cutoff: CutoffProfile,
                      tol: float = 1e-8, max_sub: int = 200) -> float:
    """``I(lam, nu, eps)`` from the expanded cosine/sine-difference form.

    ``alpha'`` and ``alpha''`` vanish on ``[0, t0]``, so only ``[t0, 1]`` is integrated, split into
    panels of about one period of ``(lam + nu)/eps``; each panel uses adaptive Gauss-Kronrod.
    """
    if lam < 0 or nu <= 0 or eps <= 0:
        raise ValueError("need lam >= 0, nu > 0, eps > 0")
    a, b = (lam - nu) / eps, (lam + nu) / eps

    def f1(s):
        return lam * cutoff.d1(s) * (math.cos(a * s) - math.cos(b * s))

    def f2(s):
        return 0.5 * eps * cutoff.d2(s) * (math.sin(a * s) - math.sin(b * s))

    edges = _panels(lam, nu, eps, cutoff.flat_end)
    per = tol / (2 * len(edges))
    total = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        for fn in (f1, f2):
            val, err = quad(fn, lo, hi, epsabs=per, epsrel=0.0, limit=max_sub)
            if not err <= per:
                raise QuadratureError(f"panel [{lo:.4g}, {hi:.4g}] error {err:.2e} above {per:.2e}")
            total.append(val)
    return math.fsum(total)


def coupling_integral_matrix(lams, nus, eps: float, cutoff: CutoffProfile,
                             nodes_per_period: int = 16, tol: float = 1e-8) -> np.ndarray:
    """``I`` for all pairs from the unexpanded product form, which factors over ``lam`` and ``nu``.

    Composite Gauss-Legendre on ``[t0, 1]``; the node count is doubled until the result moves
    by less than ``tol``.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    nus = np.atleast_1d(np.asarray(nus, dtype=float))
    if lams.size == 0 or nus.size == 0:
        return np.zeros((lams.size, nus.size))
    top = float(lams.max() + nus.max())
    t0 = cutoff.flat_end
    periods = max(1.0, top * (1 - t0) / (2 * math.pi * eps))
    n_panels = int(math.ceil(periods))
    order = max(8, nodes_per_period)
    prev = None
    for _ in range(6):
        x, w = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(t0, 1.0, n_panels + 1)
        half = 0.5 * np.diff(edges)
        s = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
        ws = (half[:, None] * w[None, :]).ravel()
        _, d1, d2 = cutoff.derivatives(s)
        ph_l = np.outer(lams, s / eps)
        left = 2.0 * d1 * lams[:, None] * np.sin(ph_l) - eps * d2 * np.cos(ph_l)
        right = np.sin(np.outer(s / eps, nus)) * ws[:, None]
        cur = left @ right
        if prev is not None and np.max(np.abs(cur - prev)) < tol:
            return cur
        prev = cur
        n_panels *= 2
    raise QuadratureError("composite quadrature did not settle")


# ---------------------------------------------------------------- residual prediction

@dataclass
class ErrorPrediction:
    reversal_modes: list
    nu_w0: np.ndarray  # nu_k w_k(0)
    w0: np.ndarray  # w_k(0)
    persistent: np.ndarray  # coefficients of the eps-independent part
    eps: float
    caps: tuple[float, float]
    coincidences: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def transient(self) -> np.ndarray:
        return self.w0 - self.persistent

    def field(self, points, which: str = "total") -> np.ndarray:
        coef = {"total": self.w0, "persistent": self.persistent, "transient": self.transient}[which]
        keep = np.nonzero(coef)[0]
        pts = np.asarray(points, dtype=float)
        if keep.size == 0:
            return np.zeros(pts.shape[:-1])
        M = basis.mode_matrix([self.reversal_modes[i] for i in keep], pts.reshape(-1, 2))
        return (M @ coef[keep]).reshape(pts.shape[:-1])

    def h1_sq(self, which: str = "total") -> float:
        """``||w||^2 + ||grad w||^2`` from the coefficients (orthonormal basis)."""
        coef = {"total": self.w0, "persistent": self.persistent, "transient": self.transient}[which]
        nu = np.array([m.eigenvalue for m in self.reversal_modes])
        return float(np.sum(coef**2 * (1.0 + nu**2)))


def coupling_table(neumann_modes: list, reversal_modes: list, tol: float = 1e-14) -> dict:
    """Nonzero ``<psi_k, phi_n>`` as ``{(k_pos, n_pos): value}``."""
    out = {}
    g = neumann_modes[0].geometry if neumann_modes else None
    if isinstance(g, basis.Rectangle):
        for n_pos, nm in enumerate(neumann_modes):
            for k_pos, rm in enumerate(reversal_modes):
                # separable integrals vanish unless parities allow; check cheaply first
                v = basis.coupling(rm, nm)
                if abs(v) > tol:
                    out[(k_pos, n_pos)] = v
        return out
    for n_pos, nm in enumerate(neumann_modes):
        for k_pos, rm in enumerate(reversal_modes):
            if rm.index[1] == nm.index[1]:
                v = basis.coupling(rm, nm)
                if abs(v) > tol:
                    out[(k_pos, n_pos)] = v
    return out


def predict_residual(coeffs, neumann_modes: list, reversal_modes: list, eps: float,
                     cutoff: CutoffProfile, couplings: dict | None = None,
                     coincidence_tol: float = 1e-9) -> ErrorPrediction:
    """Predicted ``w(0)`` for the initial coefficients ``coeffs`` (aligned with ``neumann_modes``)."""
    u = np.asarray(coeffs, dtype=float)
    lam = np.array([m.eigenvalue for m in neumann_modes])
    nu = np.array([m.eigenvalue for m in reversal_modes])
    active = np.nonzero(u)[0]
    nu_w0 = np.zeros(len(reversal_modes))
    persistent = np.zeros(len(reversal_modes))
    caps = (float(lam.max()) if lam.size else 0.0, float(nu.max()) if nu.size else 0.0)
    notes = []
    if active.size == 0:
        return ErrorPrediction(reversal_modes, nu_w0, nu_w0.copy(), persistent, eps, caps)
    if couplings is None:
        sub = [neumann_modes[i] for i in active]
        table = coupling_table(sub, reversal_modes)
        couplings = {(k, int(active[n])): v for (k, n), v in table.items()}
    if not couplings:
        return ErrorPrediction(reversal_modes, nu_w0, nu_w0.copy(), persistent, eps, caps)
    ks = np.array([k for k, _ in couplings])
    ns = np.array([n for _, n in couplings])
    cv = np.array(list(couplings.values()))
    used_n = np.unique(ns)
    used_k = np.unique(ks)
    I = coupling_integral_matrix(lam[used_n], nu[used_k], eps, cutoff)
    ni = np.searchsorted(used_n, ns)
    ki = np.searchsorted(used_k, ks)
    contrib = u[ns] * I[ni, ki] * cv
    np.add.at(nu_w0, ks, contrib)
    exact = all(m.exact_sq is not None for m in neumann_modes + reversal_modes)
    for k, n, c in zip(ks, ns, cv):
        nm, rm = neumann_modes[n], reversal_modes[k]
        same = nm.exact_sq == rm.exact_sq if exact else abs(nm.eigenvalue - rm.eigenvalue) <= coincidence_tol
        if same:
            persistent[k] += -u[n] * c
    w0 = nu_w0 / nu
    if caps[0] > caps[1]:
        notes.append("reversal cap below the Neumann cap; high-k terms omitted")
    return ErrorPrediction(reversal_modes, nu_w0, w0, persistent, eps, caps, notes=notes)


# ---------------------------------------------------------------- decomposition

@dataclass
class ModeShare:
    index: tuple[int, int]
    eigenvalue: float
    coefficient: float
    share: float


def decompose_residual(residual: np.ndarray, grid, modes: list, min_share: float = 0.0) -> list[ModeShare]:
    """Coefficients ``<w, psi_k>`` and their shares of ``||w||^2``, largest first.

    Shares are relative to the grid norm of ``w``, so they sum to at most 1.
    """
    w = np.asarray(residual, dtype=float)
    total = inner(w, w, grid)
    if total == 0.0 or not modes:
        return []
    weights = (grid.weights() / _c2(grid) * w).ravel()
    pts = grid.points().reshape(-1, 2)
    coef = np.empty(len(modes))
    step = max(1, 4_000_000 // pts.shape[0])
    for s in range(0, len(modes), step):
        coef[s:s + step] = weights @ basis.mode_matrix(modes[s:s + step], pts)
    share = coef**2 / total
    order = np.argsort(-share, kind="stable")
    return [ModeShare(modes[i].index, modes[i].eigenvalue, float(coef[i]), float(share[i]))
            for i in order if share[i] > min_share]


def slow_share(table: list[ModeShare], ratio: float = 2.0) -> float:
    """Share of ``||w||^2`` held by modes with ``m >= ratio * k`` (index ``(k, m)``)."""
    return sum(r.share for r in table if r.index[1] >= ratio * r.index[0])

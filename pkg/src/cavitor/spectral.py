"""Series solution of the Neumann forward problem: ``u(t) = sum_n u_n cos(lam_n t) phi_n``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse

from . import basis
from .grids import CartesianGrid, PolarGrid, ResolutionError
from .phantom import PhantomSpec
from .recording import BoundaryRecording, _side_flags

TAIL_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ModalState:
    """Initial coefficients ``u_n`` in a Neumann basis, viewed at time ``t``."""

    modes: list
    initial: np.ndarray
    t: float = 0.0
    tail: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([m.eigenvalue for m in self.modes])

    @property
    def coefficients(self) -> np.ndarray:
        return self.initial * np.cos(self.eigenvalues * self.t)

    @property
    def velocities(self) -> np.ndarray:
        lam = self.eigenvalues
        return -lam * self.initial * np.sin(lam * self.t)

    @property
    def energy(self) -> float:
        """``sum lam_n^2 |u_n|^2``, the same at every ``t``."""
        return float(math.fsum(self.eigenvalues**2 * self.initial**2))

    def instantaneous_energy(self) -> float:
        """``||u_t||^2 + ||grad u||^2`` evaluated from the modal sums at ``t``."""
        lam = self.eigenvalues
        return float(math.fsum(self.velocities**2) + math.fsum((lam * self.coefficients) ** 2))

    @property
    def l2(self) -> float:
        return math.sqrt(math.fsum(self.coefficients**2))

    def nonzero(self, tol: float = 0.0) -> "ModalState":
        keep = np.abs(self.initial) > tol
        return replace(self, modes=[m for m, k in zip(self.modes, keep) if k], initial=self.initial[keep])


def evolve(state: ModalState, t: float) -> ModalState:
    return replace(state, t=float(t))


def choose_cap(spec: PhantomSpec, tail_tol: float = TAIL_TOL, start: float = 20.0,
               growth: float = 1.1, max_cap: float | None = None) -> float:
    """Smallest cap ``start * growth^k`` whose retained energy misses less than ``tail_tol`` of
    the exact total. On the disk the cap is bounded by the supported Bessel orders."""
    if max_cap is None:
        max_cap = float(basis.specfun.M_MAX) if isinstance(spec.geometry, basis.Disk) else 400.0
    norms = spec.exact_norms()
    if norms is None:
        raise ValueError("the tail rule needs a phantom with a closed-form energy")
    e0 = norms[1]
    if spec.kind == "eigenmode":
        return max(start, spec.mode().eigenvalue * 1.01)
    modes = basis.enumerate_modes(spec.geometry, "neumann", max_cap)
    lam = np.array([m.eigenvalue for m in modes])
    c = spec.coefficients(modes)
    cum = np.cumsum(lam**2 * c**2)
    cap = start
    while cap <= max_cap:
        k = np.searchsorted(lam, cap, side="right")
        if e0 - (cum[k - 1] if k else 0.0) < tail_tol * e0:
            return cap
        cap *= growth
    raise ResolutionError(f"tail above {tail_tol} of the energy even at cap {max_cap}")


def project_initial(f, modes: list, grid=None) -> ModalState:
    """Coefficients ``<f, phi_n>``: exact for analytic phantoms, grid quadrature for sampled fields."""
    lam = np.array([m.eigenvalue for m in modes])
    if isinstance(f, PhantomSpec) and f.kind != "file":
        coeffs = f.coefficients(modes)
        norms = f.exact_norms()
        tail = None if norms is None else norms[1] - math.fsum(lam**2 * coeffs**2)
        return ModalState(modes, coeffs, tail=tail, meta={"projection": "exact"})
    if isinstance(f, PhantomSpec):
        from .phantom import render

        f = render(f, grid)
    if grid is None:
        raise ValueError("a sampled field needs its grid")
    h = grid.dr if isinstance(grid, PolarGrid) else max(grid.hx, grid.hy)
    if lam.size and lam.max() * h > math.pi / 2:
        raise ResolutionError(f"grid spacing {h:.4g} gives fewer than 4 samples per wavelength at "
                              f"eigenvalue {lam.max():.4g}")
    w = (grid.weights() / _c2(grid) * np.asarray(f, float)).ravel()
    pts = grid.points().reshape(-1, 2)
    coeffs = np.empty(len(modes))
    step = max(1, 4_000_000 // max(1, pts.shape[0]))
    for s in range(0, len(modes), step):
        coeffs[s:s + step] = w @ basis.mode_matrix(modes[s:s + step], pts)
    from .analysis import norms as grid_norms

    _, h1_semi, _ = grid_norms(f, grid)
    tail = h1_semi**2 - math.fsum(lam**2 * coeffs**2)
    return ModalState(modes, coeffs, tail=tail, meta={"projection": "quadrature"})


def _c2(grid):
    return grid.c**2 if isinstance(grid, CartesianGrid) else 1.0


def synthesize(state: ModalState, points) -> np.ndarray:
    """Field values at Cartesian points ``(..., 2)``."""
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, 2)
    c = state.coefficients
    out = np.zeros(flat.shape[0])
    step = max(1, 4_000_000 // max(1, flat.shape[0]))
    for s in range(0, len(state.modes), step):
        out += basis.mode_matrix(state.modes[s:s + step], flat) @ c[s:s + step]
    return out.reshape(pts.shape[:-1])


def _groups(modes: list, detectors: np.ndarray):
    """Factor ``phi_n(z_i) = Q[i, g(n)] * s_n`` in one or two families of groups."""
    g = modes[0].geometry
    lam = np.array([m.eigenvalue for m in modes])
    idx = np.array([m.index for m in modes])
    norm = np.array([m.normalization for m in modes])
    if isinstance(g, basis.Disk):
        if np.any(np.abs(np.hypot(detectors[:, 0], detectors[:, 1]) - 1.0) > 1e-9):
            return None
        ang = idx[:, 1]
        keys, group = np.unique(ang, return_inverse=True)
        th = np.arctan2(detectors[:, 1], detectors[:, 0])
        Q = np.where(keys >= 0, np.cos(np.outer(th, keys)), np.sin(np.outer(th, -keys)))
        scale = norm.copy()
        for m in np.unique(np.abs(ang)):
            sel = np.abs(ang) == m
            scale[sel] *= basis.specfun.bessel_j(int(m), lam[sel])
        return [(Q, group, scale)]
    if modes[0].bc != "neumann":
        return None
    flags = _side_flags(g, detectors)
    vert = flags["left"] | flags["right"]
    horiz = (flags["bottom"] | flags["top"]) & ~vert
    if not np.all(vert | horiz):
        return None
    fams = []
    for mask, along, across, coord, size, low in (
        (vert, 1, 0, detectors[:, 1], g.B, flags["left"]),
        (horiz, 0, 1, detectors[:, 0], g.A, flags["bottom"]),
    ):
        if not mask.any():
            continue
        key = idx[:, along] * 2 + (idx[:, across] % 2)
        keys, group = np.unique(key, return_inverse=True)
        freq, par = keys // 2, keys % 2
        sign = np.where(low[:, None], 1.0, np.where(par[None, :] == 1, -1.0, 1.0))
        Q = np.where(mask[:, None], np.cos(np.outer(coord, freq * math.pi / size)) * sign, 0.0)
        fams.append((Q, group, norm))
    return fams


def record_boundary(state: ModalState, detectors: np.ndarray, dt: float, T: float,
                    sides=None, geometry=None, chunk: int = 4096) -> BoundaryRecording:
    """``U[i, j] = sum_n u_n phi_n(z_i) cos(lam_n j dt)`` for ``j dt <= T``."""
    detectors = np.asarray(detectors, dtype=float).reshape(-1, 2)
    if geometry is None:
        if not state.modes:
            raise ValueError("geometry is needed for an empty modal state")
        geometry = state.modes[0].geometry
    state = state.nonzero()
    lam = state.eigenvalues
    if lam.size and lam.max() * dt > math.pi / 8 * (1 + 1e-12):
        raise ResolutionError(f"dt = {dt:.4g} undersamples eigenvalue {lam.max():.4g} (need lam*dt <= pi/8)")
    n_t = int(math.floor(T / dt + 1e-9)) + 1
    times = np.arange(n_t) * dt
    U = np.zeros((len(detectors), n_t))
    if lam.size:
        fams = _groups(state.modes, detectors)
        if fams is None:
            P = basis.mode_matrix(state.modes, detectors)
            fams = [(P, np.arange(len(lam)), np.ones(len(lam)))]
        a = state.initial
        for s in range(0, n_t, chunk):
            C = np.cos(np.outer(lam, times[s:s + chunk]))
            for Q, group, scale in fams:
                G = sparse.csr_matrix((a * scale, (group, np.arange(len(lam)))), shape=(Q.shape[1], len(lam)))
                U[:, s:s + chunk] += Q @ (G @ C)
    return BoundaryRecording(geometry, detectors, dt, U, sides,
                             {"source": "spectral", "n_modes": len(lam), "eigenvalue_cap": float(lam.max()) if lam.size else 0.0})


def default_dt(cap: float, T: float | None = None) -> float:
    """``(pi/8)/cap``, shrunk when ``T`` is given so that ``T`` is a whole number of samples."""
    dt = (math.pi / 8) / cap
    if T is None:
        return dt
    return T / math.ceil(T / dt - 1e-9)

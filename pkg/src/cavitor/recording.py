"""Boundary recordings, detector layouts, and interpolation from detectors onto boundary grid nodes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import basis
from .grids import SIDES, CartesianGrid, PolarGrid


class RecordingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BoundaryRecording:
    """``samples[i, j] = u(j*dt, detectors[i])`` for ``j = 0 .. n_samples-1``."""

    geometry: object
    detectors: np.ndarray
    dt: float
    samples: np.ndarray
    sides: tuple[str, ...] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        det = np.asarray(self.detectors, dtype=float).reshape(-1, 2)
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[0] != det.shape[0]:
            raise RecordingError(f"samples shape {s.shape} does not match {det.shape[0]} detectors")
        if not self.dt > 0:
            raise RecordingError("dt must be positive")
        if not np.all(on_boundary(self.geometry, det, self.sides)):
            raise RecordingError("detectors must lie on the measured part of the boundary")
        object.__setattr__(self, "detectors", det)
        object.__setattr__(self, "samples", s)

    @property
    def n_detectors(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return (self.n_samples - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt

    def with_samples(self, samples: np.ndarray, **meta) -> "BoundaryRecording":
        return replace(self, samples=samples, meta={**self.meta, **meta})

    def add_noise(self, sigma: float, seed: int = 0) -> "BoundaryRecording":
        """Additive white Gaussian noise (off unless requested)."""
        rng = np.random.default_rng(seed)
        return self.with_samples(self.samples + sigma * rng.standard_normal(self.samples.shape),
                                 noise_sigma=sigma, noise_seed=seed)


def disk_detectors(n: int = 1024) -> np.ndarray:
    th = 2.0 * math.pi * np.arange(n) / n
    return np.stack([np.cos(th), np.sin(th)], axis=1)


def rectangle_detectors(geometry, sides=SIDES, per_side: int = 256) -> np.ndarray:
    """``per_side + 1`` equispaced detectors on each listed side, shared corners kept once."""
    A, B = geometry.A, geometry.B
    s = np.linspace(0.0, 1.0, per_side + 1)
    segs = {"bottom": (s * A, 0 * s), "right": (A + 0 * s, s * B),
            "top": (A - s * A, B + 0 * s), "left": (0 * s, B - s * B)}
    pts = []
    for side in ("bottom", "right", "top", "left"):
        if side in sides:
            x, y = segs[side]
            pts.append(np.stack([x, y], axis=1))
    if not pts:
        raise RecordingError("no sides selected")
    p = np.concatenate(pts)
    keep = np.ones(len(p), dtype=bool)
    for i in range(1, len(p)):
        if np.any(np.all(np.abs(p[:i][keep[:i]] - p[i]) < 1e-12, axis=1)):
            keep[i] = False
    return p[keep]


def default_detectors(geometry, sides=None) -> np.ndarray:
    if isinstance(geometry, basis.Disk):
        return disk_detectors()
    return rectangle_detectors(geometry, sides or SIDES)


def _side_flags(geometry, pts: np.ndarray, tol: float = 1e-9) -> dict[str, np.ndarray]:
    x, y = pts[:, 0], pts[:, 1]
    return {"left": np.abs(x) < tol, "right": np.abs(x - geometry.A) < tol,
            "bottom": np.abs(y) < tol, "top": np.abs(y - geometry.B) < tol}


def on_boundary(geometry, pts: np.ndarray, sides=None, tol: float = 1e-9) -> np.ndarray:
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    if isinstance(geometry, basis.Disk):
        return np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 1.0) < tol
    flags = _side_flags(geometry, pts, tol)
    out = np.zeros(len(pts), dtype=bool)
    for s in sides or SIDES:
        out |= flags[s]
    return out


def _interp_matrix(xq: np.ndarray, xd: np.ndarray, period: float | None = None) -> np.ndarray:
    """Dense linear-interpolation matrix from samples at ``xd`` to queries ``xq``."""
    order = np.argsort(xd)
    xs = xd[order]
    n = len(xs)
    M = np.zeros((len(xq), len(xd)))
    if period is not None:
        xs_ext = np.concatenate([xs[-1:] - period, xs, xs[:1] + period])
        idx_ext = np.concatenate([order[-1:], order, order[:1]])
        q = np.mod(xq - xs[0], period) + xs[0]
    else:
        xs_ext, idx_ext, q = xs, order, np.clip(xq, xs[0], xs[-1])
    k = np.clip(np.searchsorted(xs_ext, q, side="right") - 1, 0, len(xs_ext) - 2)
    x0, x1 = xs_ext[k], xs_ext[k + 1]
    w = np.where(x1 > x0, (q - x0) / np.where(x1 > x0, x1 - x0, 1.0), 0.0)
    rows = np.arange(len(xq))
    np.add.at(M, (rows, idx_ext[k]), 1.0 - w)
    np.add.at(M, (rows, idx_ext[k + 1]), w)
    if n == 1:
        M[:] = 0.0
        M[:, order[0]] = 1.0
    return M


def boundary_interpolation(grid, detectors: np.ndarray, sides=None):
    """Nodes on the measured boundary and the matrix mapping detector values onto them.

    On the disk interpolation is periodic in angle; on rectangles it is linear along each side,
    using the detectors on that side (corners count for both adjacent sides).
    """
    detectors = np.asarray(detectors, dtype=float)
    if isinstance(grid, PolarGrid):
        I, J = grid.boundary_nodes()
        th_d = np.mod(np.arctan2(detectors[:, 1], detectors[:, 0]), 2 * math.pi)
        return (I, J), _interp_matrix(grid.theta[J], th_d, 2 * math.pi)
    if not isinstance(grid, CartesianGrid):
        raise RecordingError("unknown grid type")
    sides = tuple(sides or SIDES)
    geom = basis.Rectangle.from_sides(grid.A, grid.B)
    I, J = grid.boundary_nodes(sides)
    nodes = np.stack([grid.x[I], grid.y[J]], axis=1)
    nflags = _side_flags(geom, nodes, 1e-9 * max(grid.A, grid.B))
    dflags = _side_flags(geom, detectors, 1e-9 * max(grid.A, grid.B))
    M = np.zeros((len(I), len(detectors)))
    done = np.zeros(len(I), dtype=bool)
    for s in sides:
        rows = np.nonzero(nflags[s] & ~done)[0]
        cols = np.nonzero(dflags[s])[0]
        if rows.size == 0:
            continue
        if cols.size == 0:
            raise RecordingError(f"no detectors on side {s}")
        axis = 1 if s in ("left", "right") else 0
        M[np.ix_(rows, cols)] = _interp_matrix(nodes[rows, axis], detectors[cols, axis])
        done[rows] = True
    return (I, J), M

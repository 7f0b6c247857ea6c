"""Structured grids: nodal Cartesian grids on rectangles and a finite-volume polar grid on the unit disk.

Fields are plain ``numpy`` arrays. On a :class:`CartesianGrid` a field has shape ``(nx+1, ny+1)``
and ``u[i, j]`` sits at ``(i*hx, j*hy)``. On a :class:`PolarGrid` a field has shape
``(nr+1, ntheta)``; row 0 is the origin, repeated across the angular axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SIDES = ("left", "right", "bottom", "top")


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CartesianGrid:
    nx: int
    ny: int
    A: float = math.pi
    B: float = math.pi
    c: np.ndarray | float = 1.0

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ResolutionError("a Cartesian grid needs at least 4 cells per side")
        c = np.broadcast_to(np.asarray(self.c, dtype=float), self.shape).copy()
        if not np.all(np.isfinite(c)) or c.min() <= 0:
            raise ValueError("sound speed must be positive and finite")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    kind = "cartesian"

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny + 1)

    @property
    def hx(self) -> float:
        return self.A / self.nx

    @property
    def hy(self) -> float:
        return self.B / self.ny

    @property
    def h_min(self) -> float:
        return min(self.hx, self.hy)

    @property
    def c_max(self) -> float:
        return float(self.c.max())

    @property
    def c_min(self) -> float:
        return float(self.c.min())

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.A, self.nx + 1)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.B, self.ny + 1)

    def points(self) -> np.ndarray:
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        return np.stack([X, Y], axis=-1)

    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights."""
        wx = np.full(self.nx + 1, self.hx)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.ny + 1, self.hy)
        wy[[0, -1]] *= 0.5
        return np.outer(wx, wy)

    def boundary_nodes(self, sides=SIDES) -> tuple[np.ndarray, np.ndarray]:
        """Index arrays of the nodes on the listed sides (corners included once)."""
        mask = np.zeros(self.shape, dtype=bool)
        for s in sides:
            if s == "left":
                mask[0, :] = True
            elif s == "right":
                mask[-1, :] = True
            elif s == "bottom":
                mask[:, 0] = True
            elif s == "top":
                mask[:, -1] = True
            else:
                raise ValueError(f"unknown side {s!r}")
        return np.nonzero(mask)

    def describe(self) -> dict:
        return {"kind": "cartesian", "nx": self.nx, "ny": self.ny, "A": self.A, "B": self.B,
                "variable_c": bool(np.ptp(self.c) > 0)}


@dataclass(frozen=True, eq=False)
class PolarGrid:
    """Unit disk, ``r_i = i/nr`` and ``theta_j = 2*pi*j/ntheta``; constant speed ``c = 1``."""

    nr: int = 128
    ntheta: int = 256
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    kind = "polar"

    def __post_init__(self):
        if self.nr < 8 or self.ntheta < 16:
            raise ResolutionError("polar grid needs nr >= 8 and ntheta >= 16")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nr + 1, self.ntheta)

    @property
    def dr(self) -> float:
        return 1.0 / self.nr

    @property
    def dtheta(self) -> float:
        return 2.0 * math.pi / self.ntheta

    @property
    def h_min(self) -> float:
        """Smallest node spacing: the arc on the first ring."""
        return min(self.dr, self.dr * self.dtheta)

    c_max = 1.0
    c_min = 1.0

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.nr + 1) * self.dr

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.ntheta) * self.dtheta

    def points(self) -> np.ndarray:
        R, T = np.meshgrid(self.r, self.theta, indexing="ij")
        return np.stack([R * np.cos(T), R * np.sin(T)], axis=-1)

    def cell_areas(self) -> np.ndarray:
        """Finite-volume cell areas per node; the origin cell is split evenly over its copies."""
        if "areas" not in self._cache:
            dr, dth = self.dr, self.dtheta
            a = np.empty(self.nr + 1)
            a[0] = math.pi * (dr / 2) ** 2 / self.ntheta
            a[1:-1] = self.r[1:-1] * dr * dth
            a[-1] = 0.5 * (1.0 - (1.0 - dr / 2) ** 2) * dth
            self._cache["areas"] = np.repeat(a[:, None], self.ntheta, axis=1)
        return self._cache["areas"]

    def weights(self) -> np.ndarray:
        return self.cell_areas()

    def boundary_nodes(self, sides=None) -> tuple[np.ndarray, np.ndarray]:
        j = np.arange(self.ntheta)
        return np.full_like(j, self.nr), j

    def describe(self) -> dict:
        return {"kind": "polar", "nr": self.nr, "ntheta": self.ntheta}


def grid_for(geometry, resolution: int | tuple[int, int], c=1.0):
    """Default grid for a geometry: ``n x n`` cells on rectangles, ``(nr, ntheta)`` on the disk."""
    from .basis import Disk, Rectangle

    if isinstance(geometry, Disk):
        nr, nt = resolution if isinstance(resolution, tuple) else (resolution, 2 * resolution)
        return PolarGrid(nr, nt)
    if isinstance(geometry, Rectangle):
        nx, ny = resolution if isinstance(resolution, tuple) else (resolution, resolution)
        return CartesianGrid(nx, ny, geometry.A, geometry.B, c)
    raise ValueError(f"unsupported geometry {geometry!r}")

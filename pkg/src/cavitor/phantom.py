"""Initial-pressure phantoms: sums of smooth radial bumps, single eigenmodes, or sampled files.

A bump of radius ``R`` and smoothness ``p`` is ``a * (1 - (rho/R)^2)^p`` inside its disk; ``p = 3``
(the default) is C2 across the edge.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import basis, specfun
from .grids import CartesianGrid, PolarGrid


class PhantomError(ValueError):
    pass


@dataclass(frozen=True)
class Bump:
    center: tuple[float, float]
    radius: float
    amplitude: float = 1.0
    smoothness: int = 3

    def __post_init__(self):
        if self.radius <= 0:
            raise PhantomError("bump radius must be positive")
        if self.smoothness < 2:
            raise PhantomError("bump smoothness below 2 is not C2 at the edge")

    def __call__(self, x, y) -> np.ndarray:
        s = ((x - self.center[0]) ** 2 + (y - self.center[1]) ** 2) / self.radius**2
        return self.amplitude * np.where(s < 1.0, np.clip(1.0 - s, 0.0, None) ** self.smoothness, 0.0)

    def hankel(self, lam) -> np.ndarray:
        """``int g(|x - x0|) J0(lam |x - x0|) dx`` for the unit-amplitude profile."""
        p, R = self.smoothness, self.radius
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        z = lam * R
        out = np.full(z.shape, math.pi * R * R / (p + 1))
        nz = z > 1e-8
        if nz.any():
            const = 2.0 * math.pi * R * R * 2.0**p * math.factorial(p)
            out[nz] = const * specfun.bessel_j(p + 1, z[nz]) / z[nz] ** (p + 1)
        return out

    @property
    def l2_sq(self) -> float:
        return self.amplitude**2 * math.pi * self.radius**2 / (2 * self.smoothness + 1)

    @property
    def grad_sq(self) -> float:
        p = self.smoothness
        return self.amplitude**2 * 2.0 * math.pi * p / (2 * p - 1)


@dataclass(frozen=True)
class PhantomSpec:
    """``kind`` is ``"bumps"``, ``"eigenmode"`` (Neumann mode ``index``) or ``"file"``."""

    kind: str
    geometry: object = basis.SQUARE
    bumps: tuple[Bump, ...] = ()
    index: tuple[int, int] = (0, 0)
    path: str | None = None
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in ("bumps", "eigenmode", "file"):
            raise PhantomError(f"unknown phantom kind {self.kind!r}")
        if self.kind == "bumps":
            if not self.bumps:
                raise PhantomError("bump phantom needs at least one bump")
            for b in self.bumps:
                if _clearance(self.geometry, b) <= 0:
                    raise PhantomError(f"bump at {b.center} with radius {b.radius} leaves the domain")

    @property
    def disjoint(self) -> bool:
        bs = self.bumps
        return all(math.dist(a.center, b.center) >= a.radius + b.radius
                   for i, a in enumerate(bs) for b in bs[i + 1:])

    def mode(self) -> basis.EigenMode:
        if isinstance(self.geometry, basis.Disk):
            return basis.disk_mode("neumann", *self.index)
        return basis._rect_mode(self.geometry, "neumann", *self.index)

    def evaluate(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "bumps":
            return sum(b(x, y) for b in self.bumps)
        if self.kind == "eigenmode":
            return basis.eval_mode(self.mode(), np.stack([x, y], axis=-1))
        raise PhantomError("file phantoms have no analytic form; render them on their own grid")

    def coefficients(self, modes: list[basis.EigenMode]) -> np.ndarray:
        """Exact Neumann-mode coefficients ``<f, phi_n>``.

        For bumps this uses the mean-value property of Helmholtz solutions: averaging
        ``phi_n`` over a circle of radius ``rho`` about ``x0`` gives ``J0(lam rho) phi_n(x0)``.
        """
        if self.kind == "eigenmode":
            return np.array([1.0 if (m.index == self.index and m.bc == "neumann") else 0.0 for m in modes])
        if self.kind != "bumps":
            raise PhantomError("no closed-form coefficients for file phantoms")
        lam = np.array([m.eigenvalue for m in modes])
        out = np.zeros(len(modes))
        centers = np.array([b.center for b in self.bumps])
        at_centers = basis.mode_matrix(modes, centers)
        for b, row in zip(self.bumps, at_centers):
            out += b.amplitude * b.hankel(lam) * row
        return out

    def exact_norms(self) -> tuple[float, float] | None:
        """``(||f||^2, ||grad f||^2)`` when available in closed form."""
        if self.kind == "eigenmode":
            return 1.0, self.mode().eigenvalue ** 2
        if self.kind == "bumps" and self.disjoint:
            return sum(b.l2_sq for b in self.bumps), sum(b.grad_sq for b in self.bumps)
        return None

    def describe(self) -> dict:
        d = {"kind": self.kind, "geometry": self.geometry.name, "label": self.label}
        if self.kind == "bumps":
            d["bumps"] = [[*b.center, b.radius, b.amplitude, b.smoothness] for b in self.bumps]
        elif self.kind == "eigenmode":
            d["index"] = list(self.index)
        else:
            d["path"] = self.path
        return d


def _clearance(geometry, bump: Bump) -> float:
    cx, cy = bump.center
    if isinstance(geometry, basis.Disk):
        return 1.0 - math.hypot(cx, cy) - bump.radius
    return min(cx, cy, geometry.A - cx, geometry.B - cy) - bump.radius


# Stand-in for a three-blob disk phantom; parameters are our own choice.
DISK_BUMPS = (
    ((0.0, 0.35), 0.25, 1.0),
    ((-0.3, -0.2), 0.25, 0.8),
    ((0.3, -0.2), 0.25, 0.6),
)


def three_bumps(geometry=basis.DISK) -> PhantomSpec:
    """The default three-bump phantom, mapped affinely from the unit disk onto rectangles."""
    if isinstance(geometry, basis.Disk):
        bumps = tuple(Bump(c, r, a) for c, r, a in DISK_BUMPS)
    else:
        sx, sy = geometry.A / 2, geometry.B / 2
        s = min(sx, sy)
        bumps = tuple(Bump((sx * (1 + c[0]), sy * (1 + c[1])), r * s, a) for c, r, a in DISK_BUMPS)
    return PhantomSpec("bumps", geometry, bumps, label="three-bump stand-in")


def eigenmode(geometry, n: int, l: int) -> PhantomSpec:
    return PhantomSpec("eigenmode", geometry, index=(n, l), label=f"neumann mode {n},{l}")


def render(spec: PhantomSpec, grid, margin_cells: float = 2.0) -> np.ndarray:
    """Sample a phantom on a grid.

    Bumps must clear the boundary by ``margin_cells`` grid spacings; eigenmode phantoms touch the
    boundary and are accepted with a warning.
    """
    if spec.kind == "file":
        from .io import read_field

        data, g = read_field(spec.path)
        if g.shape != grid.shape:
            raise PhantomError(f"file phantom has shape {g.shape}, grid has {grid.shape}")
        return data
    _check_grid(spec, grid)
    if spec.kind == "bumps":
        h = grid.dr if isinstance(grid, PolarGrid) else max(grid.hx, grid.hy)
        for b in spec.bumps:
            if _clearance(spec.geometry, b) < margin_cells * h:
                raise PhantomError(f"bump at {b.center} is within {margin_cells} cells of the boundary")
    else:
        warnings.warn("eigenmode phantom is not compactly supported inside the domain", stacklevel=2)
    p = grid.points()
    return spec.evaluate(p[..., 0], p[..., 1])


def _check_grid(spec: PhantomSpec, grid) -> None:
    if isinstance(grid, PolarGrid) != isinstance(spec.geometry, basis.Disk):
        raise PhantomError("phantom geometry does not match the grid")
    if isinstance(grid, CartesianGrid) and (abs(grid.A - spec.geometry.A) > 1e-12 or abs(grid.B - spec.geometry.B) > 1e-12):
        raise PhantomError("phantom rectangle does not match the grid extents")

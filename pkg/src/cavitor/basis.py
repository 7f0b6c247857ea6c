"""Laplacian eigenpairs on the unit disk and on rectangles, couplings between bases,
and detection of coinciding eigenvalues.

All bases are for constant sound speed ``c = 1`` and are normalised in ``L2``.
Eigenvalues are the square roots of the Laplacian eigenvalues (frequencies).

Disk modes use the real angular pair: a signed angular index ``l >= 0`` means
``cos(l theta)`` and ``l < 0`` means ``sin(|l| theta)``.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import specfun

BCS = ("neumann", "dirichlet", "mixed")


class ConfigurationError(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Disk:
    """The unit disk."""

    name: str = "disk"
    area: float = math.pi

    def contains(self, x, y, tol: float = 1e-9) -> np.ndarray:
        return x * x + y * y <= (1.0 + tol) ** 2


@dataclass(frozen=True)
class Rectangle:
    """``(0, A) x (0, B)``; ``a2``, ``b2`` hold ``(A/pi)^2``, ``(B/pi)^2`` exactly when rational."""

    A: float = math.pi
    B: float = math.pi
    a2: Fraction | None = Fraction(1)
    b2: Fraction | None = Fraction(1)

    @classmethod
    def from_sides(cls, A: float, B: float) -> "Rectangle":
        return cls(float(A), float(B), _as_fraction((A / math.pi) ** 2), _as_fraction((B / math.pi) ** 2))

    @classmethod
    def from_squares(cls, a2, b2) -> "Rectangle":
        """Sides ``pi*sqrt(a2)`` by ``pi*sqrt(b2)`` with rational ``a2``, ``b2``."""
        a2, b2 = Fraction(a2), Fraction(b2)
        return cls(math.pi * math.sqrt(a2), math.pi * math.sqrt(b2), a2, b2)

    @property
    def name(self) -> str:
        if self.a2 == 1 and self.b2 == 1:
            return "square"
        return f"rectangle:{self.A!r},{self.B!r}"

    @property
    def area(self) -> float:
        return self.A * self.B

    @property
    def exact(self) -> bool:
        return self.a2 is not None and self.b2 is not None

    def contains(self, x, y, tol: float = 1e-9) -> np.ndarray:
        return (x >= -tol) & (x <= self.A + tol) & (y >= -tol) & (y <= self.B + tol)


SQUARE = Rectangle()
DISK = Disk()


def _as_fraction(v: float, max_den: int = 1000) -> Fraction | None:
    f = Fraction(v).limit_denominator(max_den)
    return f if abs(float(f) - v) <= 1e-12 * max(1.0, abs(v)) else None


def parse_geometry(text: str):
    """``disk``, ``square``, ``rectangle:A,B`` (floats) or ``rectangle-pi:a2,b2`` (exact squares)."""
    text = text.strip().lower()
    if text == "disk":
        return DISK
    if text == "square":
        return SQUARE
    kind, _, rest = text.partition(":")
    if kind in ("rectangle", "rectangle-pi") and rest:
        a, b = (p.strip() for p in rest.split(","))
        if kind == "rectangle-pi":
            return Rectangle.from_squares(Fraction(a), Fraction(b))
        return Rectangle.from_sides(float(eval_number(a)), float(eval_number(b)))
    raise ConfigurationError(f"unknown geometry {text!r}")


def eval_number(text: str) -> float:
    """Numbers like ``3.1``, ``pi``, ``pi*sqrt(2)``, ``2*pi``."""
    allowed = {"pi": math.pi, "sqrt": math.sqrt}
    if not set(text) <= set("0123456789.+-*/() eEpisqrt"):
        raise ConfigurationError(f"cannot parse number {text!r}")
    return float(eval(text, {"__builtins__": {}}, allowed))  # noqa: S307


@dataclass(frozen=True)
class EigenMode:
    """One normalised eigenfunction.

    ``index`` is ``(n, l)`` (x-index, y-index) on rectangles and ``(radial, signed angular)``
    on the disk. ``exact_sq`` is the squared eigenvalue divided by nothing further, as an exact
    rational, when the rectangle's side ratios allow it.
    """

    geometry: object
    bc: str
    index: tuple[int, int]
    eigenvalue: float
    normalization: float
    exact_sq: Fraction | None = None

    @property
    def angular(self) -> int:
        return self.index[1]

    def __call__(self, points) -> np.ndarray:
        return eval_mode(self, points)


def _rect_norm(n: int, l: int, g: Rectangle) -> float:
    return math.sqrt((1 if n == 0 else 2) * (1 if l == 0 else 2) / (g.A * g.B))


def _rect_mode(g: Rectangle, bc: str, i: int, j: int) -> EigenMode:
    if bc == "neumann":
        fx, fy, norm = i, j, _rect_norm(i, j, g)
        exact = Fraction(i * i) / g.a2 + Fraction(j * j) / g.b2 if g.exact else None
    elif bc == "dirichlet":
        fx, fy, norm = i, j, 2.0 / math.sqrt(g.A * g.B)
        exact = Fraction(i * i) / g.a2 + Fraction(j * j) / g.b2 if g.exact else None
    else:
        fx, fy = i + 0.5, j
        norm = math.sqrt(2.0 * (1 if j == 0 else 2) / (g.A * g.B))
        exact = Fraction((2 * i + 1) ** 2, 4) / g.a2 + Fraction(j * j) / g.b2 if g.exact else None
    # the exact square keeps integer eigenvalues exact (pi * sqrt(49 / pi^2) is not 7.0)
    lam = math.sqrt(exact) if exact is not None else math.pi * math.hypot(fx / g.A, fy / g.B)
    return EigenMode(g, bc, (i, j), lam, norm, exact)


_ZERO_CACHE: dict[tuple[int, bool], tuple[float, np.ndarray]] = {}


def _disk_zeros(order: int, cap: float, derivative: bool) -> np.ndarray:
    """Zeros up to ``cap``, reusing any longer list computed earlier."""
    key = (order, derivative)
    hit = _ZERO_CACHE.get(key)
    if hit is None or hit[0] < cap:
        hit = (cap, specfun.zeros_below(order, cap, derivative))
        _ZERO_CACHE[key] = hit
    z = hit[1]
    return z[z <= cap]


def disk_mode(bc: str, radial: int, angular: int) -> EigenMode:
    """Disk eigenfunction by index, computing its zero directly."""
    m = abs(angular)
    if bc == "neumann":
        lam = specfun.bessel_prime_zero(m, radial)
    elif bc == "dirichlet":
        lam = specfun.bessel_zero(m, radial)
    else:
        raise ConfigurationError("the disk supports neumann and dirichlet bases only")
    lam = float(lam)
    return EigenMode(DISK, bc, (radial, angular), lam, _disk_norm(bc, m, lam))


def _disk_norm(bc: str, m: int, lam: float) -> float:
    real = 1.0 if m == 0 else math.sqrt(2.0)
    if bc == "dirichlet":
        return real / (math.sqrt(math.pi) * abs(specfun.bessel_j_prime(m, lam)))
    if lam == 0.0:
        return 1.0 / math.sqrt(math.pi)
    jm = specfun.bessel_j(m, lam)
    return real / math.sqrt(math.pi * (1.0 - (m * m) / (lam * lam)) * jm * jm)


def _disk_norms(bc: str, m: int, lam: np.ndarray) -> np.ndarray:
    real = 1.0 if m == 0 else math.sqrt(2.0)
    if bc == "dirichlet":
        return real / (math.sqrt(math.pi) * np.abs(specfun.bessel_j_prime(m, lam)))
    out = np.full(lam.shape, 1.0 / math.sqrt(math.pi))
    nz = lam > 0
    jm = specfun.bessel_j(m, lam[nz])
    out[nz] = real / np.sqrt(math.pi * (1.0 - (m * m) / lam[nz] ** 2) * jm * jm)
    return out


def enumerate_modes(geometry, bc: str, eigenvalue_cap: float) -> list[EigenMode]:
    """All modes with eigenvalue ``<= eigenvalue_cap``, sorted by eigenvalue then index."""
    if eigenvalue_cap <= 0:
        raise ConfigurationError("eigenvalue cap must be positive")
    if bc not in BCS:
        raise ConfigurationError(f"unknown boundary condition {bc!r}")
    modes: list[EigenMode] = []
    cap = float(eigenvalue_cap)
    if isinstance(geometry, Rectangle):
        start = 1 if bc == "dirichlet" else 0
        shift = 0.5 if bc == "mixed" else 0.0
        nx = int(cap * geometry.A / math.pi - shift) + 1
        ny = int(cap * geometry.B / math.pi) + 1
        for i in range(start, nx + 1):
            for j in range(start, ny + 1):
                mode = _rect_mode(geometry, bc, i, j)
                if mode.eigenvalue <= cap:
                    modes.append(mode)
    elif isinstance(geometry, Disk):
        if bc == "mixed":
            raise ConfigurationError("mixed boundary data is only defined on rectangles")
        derivative = bc == "neumann"
        m = 0
        while True:
            zs = _disk_zeros(m, cap, derivative)
            if zs.size == 0:
                break
            for k, (lam, norm) in enumerate(zip(zs.tolist(), _disk_norms(bc, m, zs).tolist()), start=1):
                modes.append(EigenMode(geometry, bc, (k, m), lam, norm))
                if m > 0:
                    modes.append(EigenMode(geometry, bc, (k, -m), lam, norm))
            m += 1
    else:
        raise ConfigurationError(f"unsupported geometry {geometry!r}")
    modes.sort(key=lambda md: (md.eigenvalue, abs(md.index[1]), md.index[0], -md.index[1]))
    return modes


def _as_points(points) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(points, dtype=float)
    if p.shape[-1] != 2:
        raise DomainError("points must have a trailing dimension of size 2")
    return p[..., 0], p[..., 1]


def eval_mode(mode: EigenMode, points) -> np.ndarray:
    """Values of the normalised eigenfunction at Cartesian points ``(..., 2)``."""
    x, y = _as_points(points)
    g = mode.geometry
    if not np.all(g.contains(x, y)):
        raise DomainError(f"points outside {g.name}")
    i, j = mode.index
    if isinstance(g, Rectangle):
        if mode.bc == "neumann":
            return mode.normalization * np.cos(i * math.pi * x / g.A) * np.cos(j * math.pi * y / g.B)
        if mode.bc == "dirichlet":
            return mode.normalization * np.sin(i * math.pi * x / g.A) * np.sin(j * math.pi * y / g.B)
        return mode.normalization * np.cos((i + 0.5) * math.pi * x / g.A) * np.cos(j * math.pi * y / g.B)
    r = np.minimum(np.hypot(x, y), 1.0)
    theta = np.arctan2(y, x)
    return mode.normalization * radial_part(mode, r) * angular_part(j, theta)


def mode_matrix(modes: list[EigenMode], points) -> np.ndarray:
    """``M[p, n] = phi_n(points[p])`` for a list of modes sharing one geometry and boundary condition."""
    x, y = _as_points(points)
    x, y = x.ravel(), y.ravel()
    if not modes:
        return np.zeros((x.size, 0))
    g = modes[0].geometry
    if not np.all(g.contains(x, y)):
        raise DomainError(f"points outside {g.name}")
    idx = np.array([m.index for m in modes])
    norm = np.array([m.normalization for m in modes])
    if isinstance(g, Rectangle):
        bc = modes[0].bc
        fx = idx[:, 0] + (0.5 if bc == "mixed" else 0.0)
        fy = idx[:, 1].astype(float)
        trig = np.sin if bc == "dirichlet" else np.cos
        return norm * trig(np.outer(x, fx * math.pi / g.A)) * trig(np.outer(y, fy * math.pi / g.B))
    r = np.minimum(np.hypot(x, y), 1.0)
    theta = np.arctan2(y, x)
    lam = np.array([m.eigenvalue for m in modes])
    out = np.empty((x.size, len(modes)))
    orders = np.abs(idx[:, 1])
    for m in np.unique(orders):
        sel = np.nonzero(orders == m)[0]
        out[:, sel] = specfun.bessel_j(int(m), np.outer(r, lam[sel]))
    ang = idx[:, 1]
    out *= np.where(ang >= 0, np.cos(np.outer(theta, ang)), np.sin(np.outer(theta, -ang)))
    return out * norm


def radial_part(mode: EigenMode, r) -> np.ndarray:
    return np.asarray(specfun.bessel_j(abs(mode.index[1]), mode.eigenvalue * np.asarray(r, float)))


def angular_part(l: int, theta) -> np.ndarray:
    return np.cos(l * theta) if l >= 0 else np.sin(-l * theta)


def _trig_integral(f1: str, a: float, f2: str, b: float, L: float) -> float:
    """``int_0^L f1(a x) f2(b x) dx`` for ``f1, f2`` in ``{sin, cos}``."""

    def icos(c):
        return L if abs(c) < 1e-14 else math.sin(c * L) / c

    def isin(c):
        return 0.0 if abs(c) < 1e-14 else (1.0 - math.cos(c * L)) / c

    if f1 == f2 == "cos":
        return 0.5 * (icos(a - b) + icos(a + b))
    if f1 == f2 == "sin":
        return 0.5 * (icos(a - b) - icos(a + b))
    if f1 == "cos":
        a, b = b, a
    # sin(a x) cos(b x)
    return 0.5 * (isin(a + b) + isin(a - b))


def _rect_factors(mode: EigenMode) -> tuple[tuple[str, float], tuple[str, float]]:
    g = mode.geometry
    i, j = mode.index
    if mode.bc == "neumann":
        return ("cos", i * math.pi / g.A), ("cos", j * math.pi / g.B)
    if mode.bc == "dirichlet":
        return ("sin", i * math.pi / g.A), ("sin", j * math.pi / g.B)
    return ("cos", (i + 0.5) * math.pi / g.A), ("cos", j * math.pi / g.B)


def coupling(a: EigenMode, b: EigenMode, min_nodes: int = 32) -> float:
    """``L2`` inner product of two modes of the same geometry.

    Closed-form separable integrals on rectangles; on the disk the angular factor is exact
    and the radial integral uses Gauss-Legendre with at least 4 nodes per oscillation.
    """
    if a.geometry != b.geometry:
        raise ConfigurationError("coupling needs modes of one geometry")
    g = a.geometry
    if isinstance(g, Rectangle):
        (fa, ka), (ga, la) = _rect_factors(a)
        (fb, kb), (gb, lb) = _rect_factors(b)
        ix = _trig_integral(fa, ka, fb, kb, g.A)
        iy = _trig_integral(ga, la, gb, lb, g.B)
        return a.normalization * b.normalization * ix * iy
    la, lb = a.index[1], b.index[1]
    if la != lb:
        return 0.0
    m = abs(la)
    ang = 2.0 * math.pi if m == 0 else math.pi
    n = max(min_nodes, int(4 * (a.eigenvalue + b.eigenvalue) / math.pi) + 16)
    t, w = np.polynomial.legendre.leggauss(n)
    r = 0.5 * (t + 1.0)
    w = 0.5 * w
    rad = np.sum(w * r * specfun.bessel_j(m, a.eigenvalue * r) * specfun.bessel_j(m, b.eigenvalue * r))
    return float(a.normalization * b.normalization * ang * rad)


def gram_matrix(modes: list[EigenMode]) -> np.ndarray:
    n = len(modes)
    G = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            G[i, j] = G[j, i] = coupling(modes[i], modes[j])
    return G


@dataclass(frozen=True)
class CoincidenceRecord:
    neumann_index: tuple[int, int]
    reversal_index: tuple[int, int]
    shared_eigenvalue: float
    coupling: float


def detect_coincidences(neumann_modes: list[EigenMode], reversal_modes: list[EigenMode],
                        tol: float = 1e-9) -> list[CoincidenceRecord]:
    """Pairs ``(phi_n, psi_k)`` with equal eigenvalues, each with ``<psi_k, phi_n>``.

    Exact rational comparison of squared eigenvalues is used when every mode carries one;
    otherwise eigenvalues are compared with the absolute tolerance ``tol``.
    """
    out: list[CoincidenceRecord] = []
    exact = all(m.exact_sq is not None for m in neumann_modes + reversal_modes)
    if exact:
        groups: dict[Fraction, list[EigenMode]] = defaultdict(list)
        for mode in reversal_modes:
            groups[mode.exact_sq].append(mode)
        for nm in neumann_modes:
            for rm in groups.get(nm.exact_sq, ()):
                out.append(CoincidenceRecord(nm.index, rm.index, nm.eigenvalue, coupling(rm, nm)))
        return out
    rev = sorted(reversal_modes, key=lambda md: md.eigenvalue)
    vals = np.array([md.eigenvalue for md in rev])
    for nm in neumann_modes:
        lo = np.searchsorted(vals, nm.eigenvalue - tol, side="left")
        hi = np.searchsorted(vals, nm.eigenvalue + tol, side="right")
        for rm in rev[lo:hi]:
            out.append(CoincidenceRecord(nm.index, rm.index, 0.5 * (nm.eigenvalue + rm.eigenvalue),
                                         coupling(rm, nm)))
    return out


def nonzero(records: list[CoincidenceRecord], tol: float = 1e-12) -> list[CoincidenceRecord]:
    return [r for r in records if abs(r.coupling) > tol]


def reversal_bc(geometry, sides: tuple[str, ...] | None) -> str:
    """Boundary condition of the error basis for data measured on ``sides``."""
    if isinstance(geometry, Disk):
        return "dirichlet"
    if sides is None or set(sides) == {"left", "right", "bottom", "top"}:
        return "dirichlet"
    if tuple(sides) == ("right",):
        return "mixed"
    raise ConfigurationError(f"no analytic error basis for data on sides {sides}")

"""Smooth tapers used to gate boundary data: ``alpha(s) = 1`` on ``[0, t0]``, ``alpha(1) = 0``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import expit

CLASSES = ("bump", "poly5")


class CutoffError(ValueError):
    pass


def _transition(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``phi(x) = e^{-1/x} / (e^{-1/x} + e^{-1/(1-x)})`` and its first two derivatives.

    ``phi`` is 0 for ``x <= 0`` and 1 for ``x >= 1``; all derivatives vanish at both ends.
    """
    phi = np.where(x >= 1.0, 1.0, 0.0)
    d1 = np.zeros_like(x)
    d2 = np.zeros_like(x)
    # outside this window phi is within e^-1000 of its end value
    inner = (x > 1e-3) & (x < 1.0 - 1e-3)
    if inner.any():
        xi = x[inner]
        yi = 1.0 - xi
        g = 1.0 / xi - 1.0 / yi
        p = expit(-g)
        q = expit(g)
        h = 1.0 / xi**2 + 1.0 / yi**2
        dh = -2.0 / xi**3 + 2.0 / yi**3
        pq = p * q
        p1 = pq * h
        phi[inner] = p
        d1[inner] = p1
        d2[inner] = p1 * (q - p) * h + pq * dh
    phi = np.where((x > 0) & (x <= 1e-3), 0.0, phi)
    phi = np.where((x < 1.0) & (x >= 1.0 - 1e-3), 1.0, phi)
    return phi, d1, d2


@dataclass(frozen=True)
class CutoffProfile:
    """Non-increasing taper on ``[0, 1]``.

    ``kind="bump"`` is the C-infinity mollifier quotient ``alpha(s) = phi((1-s)/(1-t0))``;
    ``kind="poly5"`` uses the quintic smoothstep on ``[t0, 1]`` (C2 at the ends).
    """

    kind: str = "bump"
    flat_end: float = 0.5

    def __post_init__(self):
        if self.kind not in CLASSES:
            raise CutoffError(f"unknown cutoff class {self.kind!r}; expected one of {CLASSES}")
        if not 0.0 < self.flat_end < 1.0:
            raise CutoffError(f"flat_end must lie in (0, 1), got {self.flat_end}")

    @property
    def width(self) -> float:
        return 1.0 - self.flat_end

    def derivatives(self, s) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``alpha``, ``alpha'``, ``alpha''`` at ``s`` (clipped to ``[0, 1]``)."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
        w = self.width
        if self.kind == "bump":
            phi, d1, d2 = _transition((1.0 - s) / w)
            return phi, -d1 / w, d2 / w**2
        x = np.clip((s - self.flat_end) / w, 0.0, 1.0)
        smooth = x**3 * (10.0 - 15.0 * x + 6.0 * x**2)
        ds = 30.0 * x**2 * (1.0 - x) ** 2
        dds = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x)
        return 1.0 - smooth, -ds / w, -dds / w**2

    def __call__(self, s):
        return self.derivatives(s)[0]

    def d1(self, s):
        return self.derivatives(s)[1]

    def d2(self, s):
        return self.derivatives(s)[2]

    def spec(self) -> str:
        return f"{self.kind}:{self.flat_end:g}"


def make_cutoff(kind: str = "bump", flat_end: float = 0.5) -> CutoffProfile:
    return CutoffProfile(kind, float(flat_end))


def parse_cutoff(text: str) -> CutoffProfile:
    """Parse ``"bump:0.5"`` / ``"poly5:0.3"`` (class alone uses ``t0 = 0.5``)."""
    kind, _, t0 = text.partition(":")
    return make_cutoff(kind.strip(), float(t0) if t0 else 0.5)


def cutoff_derivative_maxima(profile: CutoffProfile, n: int = 20001) -> tuple[float, float]:
    """``(max |alpha'|, max |alpha''|)`` over ``[0, 1]``: dense sampling, then a bounded 1D refine."""
    s = np.linspace(0.0, 1.0, n)
    h = s[1] - s[0]
    out = []
    for which in (1, 2):
        f = lambda t, w=which: -float(abs(profile.derivatives(t)[w]))  # noqa: E731
        vals = np.abs(profile.derivatives(s)[which])
        i = int(np.argmax(vals))
        best = float(vals[i])
        lo, hi = max(0.0, s[i] - h), min(1.0, s[i] + h)
        if hi > lo:
            r = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            best = max(best, -float(r.fun))
        out.append(best)
    return out[0], out[1]

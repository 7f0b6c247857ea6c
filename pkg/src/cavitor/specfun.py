"""Integer-order Bessel functions of the first kind, their zeros, and zero-gap checks.

Evaluation uses three regions:

* power series where it does not cancel badly (``x <= 8`` or ``x**2/4 <= m + 1``),
* the Hankel asymptotic expansion when it converges to full precision,
* Miller's backward recurrence normalised by ``J_0 + 2*sum(J_2k) = 1`` elsewhere.

Zeros are bracketed by a sign scan (adjacent zeros of ``J_m`` are more than ``pi``
apart, zeros of ``J_m'`` more than 2 apart), seeded with McMahon's expansion and
polished by a bracket-safeguarded Newton iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

M_MAX = 200
# J_{m+1} is needed for derivatives at the top order
_ORDER_CAP = M_MAX + 1
X_MAX = 1.0e4

_SERIES_X = 8.0
_HANKEL_X = 25.0
_RESCALE = 1.0e200


class BesselRangeError(ValueError):
    """Order or argument outside the supported range."""


class BesselConvergenceError(ArithmeticError):
    """Root polishing failed to reach the residual tolerance."""


def _check(m: int, x: np.ndarray, cap: int = M_MAX) -> None:
    if int(m) != m or m < 0 or m > cap:
        raise BesselRangeError(f"order {m} outside [0, {cap}]")
    if x.size and (np.any(~np.isfinite(x)) or x.min() < 0.0 or x.max() > X_MAX):
        raise BesselRangeError(f"argument outside [0, {X_MAX:g}]")


def _series(m: int, x: np.ndarray) -> np.ndarray:
    h = 0.5 * x
    term = np.exp(m * np.log(np.where(h > 0, h, 1.0)) - math.lgamma(m + 1.0))
    if m > 0:
        term = np.where(h > 0, term, 0.0)
    total = term.copy()
    q = -h * h
    for k in range(1, 200):
        term = term * q / (k * (k + m))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _hankel(m: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Asymptotic expansion; returns values and a mask of points where it converged."""
    mu = 4.0 * m * m
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    ok = np.zeros(x.shape, dtype=bool)
    live = np.ones(x.shape, dtype=bool)
    prev = np.full(x.shape, np.inf)
    for k in range(1, 120):
        term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        a = np.abs(term)
        diverging = live & (a > prev)
        live &= ~diverging
        if k % 2:
            q = np.where(live, q + (-1) ** ((k - 1) // 2) * term, q)
        else:
            p = np.where(live, p + (-1) ** (k // 2) * term, p)
        done = live & (a < 1e-17)
        ok |= done
        live &= ~done
        prev = a
        if not live.any():
            break
    phase = (0.5 * m + 0.25) * math.pi
    c, s = math.cos(phase), math.sin(phase)
    cos_chi = np.cos(x) * c + np.sin(x) * s
    sin_chi = np.sin(x) * c - np.cos(x) * s
    val = np.sqrt(2.0 / (math.pi * x)) * (p * cos_chi - q * sin_chi)
    return val, ok


def _miller_start(order: int, xmax: float) -> int:
    n = max(order, xmax)
    start = int(n + 30 + 6.0 * n ** (1.0 / 3.0))
    return start + (start % 2)


def bessel_j_orders(m_max: int, x) -> np.ndarray:
    """All orders ``J_0..J_{m_max}`` at ``x`` by Miller's recurrence.

    Returns an array of shape ``(m_max + 1,) + x.shape``.
    """
    x = np.asarray(x, dtype=float)
    _check(m_max, x, _ORDER_CAP)
    flat = x.ravel()
    out = np.zeros((m_max + 1, flat.size))
    pos = flat > 0
    out[0, ~pos] = 1.0
    xs = flat[pos]
    if xs.size:
        n0 = _miller_start(m_max, float(xs.max()))
        nxt = np.zeros_like(xs)
        cur = np.full_like(xs, 1e-30)
        norm = np.zeros_like(xs)
        vals = np.zeros((m_max + 1, xs.size))
        # growth per step is at most about 2n/x; check for overflow less often when x is not small
        every = 1 if xs.min() < 2.0 else 4
        for n in range(n0, 0, -1):
            prv = (2.0 * n / xs) * cur - nxt
            nxt, cur = cur, prv
            # cur now holds the unnormalised J_{n-1}
            if n - 1 <= m_max:
                vals[n - 1] = cur
            if (n - 1) % 2 == 0:
                norm += cur if n - 1 == 0 else 2.0 * cur
            if n % every:
                continue
            big = np.abs(cur) > _RESCALE
            if big.any():
                f = np.where(big, 1.0 / _RESCALE, 1.0)
                cur *= f
                nxt *= f
                norm *= f
                vals *= f
        out[:, pos] = vals / norm
    return out.reshape((m_max + 1,) + x.shape)


def _eval_orders(orders: tuple[int, ...], x: np.ndarray) -> np.ndarray:
    """``J_n(x)`` for a few adjacent non-negative orders, region by region."""
    flat = x.ravel()
    top = max(orders)
    out = np.empty((len(orders), flat.size))
    series = (flat <= _SERIES_X) | (0.25 * flat * flat <= min(orders) + 1)
    for i, n in enumerate(orders):
        out[i, series] = _series(n, flat[series])
    rest = np.flatnonzero(~series)
    if rest.size:
        todo = rest
        big = flat[rest] >= _HANKEL_X
        if big.any():
            idx = rest[big]
            ok = np.ones(idx.size, dtype=bool)
            vals = []
            for n in orders:
                v, good = _hankel(n, flat[idx])
                vals.append(v)
                ok &= good
            for i, v in enumerate(vals):
                out[i, idx[ok]] = v[ok]
            todo = np.concatenate([rest[~big], idx[~ok]])
        if todo.size:
            xs = flat[todo]
            srt = np.argsort(xs)
            for chunk in np.array_split(srt, max(1, int(xs.max() // 200) + 1)):
                if chunk.size:
                    block = bessel_j_orders(top, xs[chunk])
                    for i, n in enumerate(orders):
                        out[i, todo[chunk]] = block[n]
    return out.reshape((len(orders),) + x.shape)


def bessel_j(m: int, x):
    """``J_m(x)`` for integer ``0 <= m <= 200`` and ``0 <= x <= 1e4``."""
    arr = np.asarray(x, dtype=float)
    _check(m, arr)
    out = _eval_orders((m,), arr)[0]
    return float(out) if out.ndim == 0 else out


def _j_and_prime(m: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if m == 0:
        j0, j1 = _eval_orders((0, 1), x)
        return j0, -j1
    jm1, jm, jp1 = _eval_orders((m - 1, m, m + 1), x)
    return jm, 0.5 * (jm1 - jp1)


def bessel_j_prime(m: int, x):
    """``J_m'(x)`` via ``(J_{m-1} - J_{m+1})/2`` (``-J_1`` for ``m = 0``)."""
    arr = np.asarray(x, dtype=float)
    _check(m, arr)
    val = _j_and_prime(m, arr)[1]
    return float(val) if val.ndim == 0 else val


def _bessel_j_pp(m: int, x: np.ndarray, j: np.ndarray, jp: np.ndarray) -> np.ndarray:
    return -jp / x - (1.0 - (m * m) / (x * x)) * j


def mcmahon_zero(m: int, k: int, derivative: bool = False) -> float:
    """McMahon's large-``k`` estimate of ``j_{m,k}`` (or ``j'_{m,k}``).

    Derivative zeros use the indexing in which ``x = 0`` is the first zero of ``J_0'``.
    """
    mu = 4.0 * m * m
    if derivative:
        b = (k + 0.5 * m - 0.75) * math.pi
        if b <= 0:
            return 0.0
        return b - (mu + 3) / (8 * b) - 4 * (7 * mu * mu + 82 * mu - 9) / (3 * (8 * b) ** 3)
    b = (k + 0.5 * m - 0.25) * math.pi
    return b - (mu - 1) / (8 * b) - 4 * (mu - 1) * (7 * mu - 31) / (3 * (8 * b) ** 3)


def _polish(m: int, lo: np.ndarray, hi: np.ndarray, guess: np.ndarray, derivative: bool,
            tol: float = 1e-10) -> np.ndarray:
    def fun(x):
        j, jp = _j_and_prime(m, x)
        if derivative:
            return jp, _bessel_j_pp(m, x, j, jp)
        return j, jp

    f_lo, _ = fun(lo)
    x = np.where((guess > lo) & (guess < hi), guess, 0.5 * (lo + hi))
    done = np.zeros(x.shape, dtype=bool)
    for _ in range(100):
        f, df = fun(x)
        same = np.sign(f) == np.sign(f_lo)
        lo = np.where(same, x, lo)
        f_lo = np.where(same, f, f_lo)
        hi = np.where(same, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - f / df
        bad = ~np.isfinite(xn) | (xn < lo) | (xn > hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        # one Newton step past a 1e-12 move is already at rounding level
        newly = np.abs(xn - x) <= 1e-12 * np.maximum(1.0, np.abs(x))
        x = np.where(done, x, xn)
        if done.all():
            break
        done |= newly & ~bad
    res, _ = fun(x)
    if np.any(np.abs(res) > tol):
        worst = int(np.argmax(np.abs(res)))
        raise BesselConvergenceError(
            f"zero of {'J_m prime' if derivative else 'J_m'} (m={m}) near {x[worst]:.6g} "
            f"has residual {abs(res[worst]):.2e}"
        )
    return x


def _zeros(m: int, count: int, derivative: bool) -> np.ndarray:
    if count <= 0:
        return np.empty(0)
    lead = 1 if (derivative and m == 0) else 0
    need = count - lead
    found = np.empty(0)
    if need > 0:
        start = float(m) if m > 0 else 0.5
        step = 0.5
        stop = mcmahon_zero(m, count + 2, derivative) + 4.0
        while True:
            grid = np.arange(start, stop, step)
            j, jp = _j_and_prime(m, grid)
            vals = jp if derivative else j
            flips = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
            if flips.size >= need:
                break
            stop += 10.0 * math.pi
        flips = flips[:need]
        lo, hi = grid[flips], grid[flips + 1]
        ks = np.arange(1, need + 1) + lead
        guess = np.array([mcmahon_zero(m, int(k), derivative) for k in ks])
        found = _polish(m, lo.copy(), hi.copy(), guess, derivative)
    if lead:
        found = np.concatenate([[0.0], found])
    return found


def bessel_zeros(m: int, count: int) -> np.ndarray:
    """First ``count`` positive zeros ``j_{m,1} < j_{m,2} < ...`` of ``J_m``."""
    _check(m, np.zeros(0))
    return _zeros(m, count, derivative=False)


def bessel_prime_zeros(m: int, count: int) -> np.ndarray:
    """First ``count`` zeros of ``J_m'``; for ``m = 0`` the first one is ``0``."""
    _check(m, np.zeros(0))
    return _zeros(m, count, derivative=True)


def bessel_zero(m: int, k: int) -> float:
    if k < 1:
        raise BesselRangeError("zero index starts at 1")
    return float(bessel_zeros(m, k)[-1])


def bessel_prime_zero(m: int, k: int) -> float:
    if k < 1:
        raise BesselRangeError("zero index starts at 1")
    return float(bessel_prime_zeros(m, k)[-1])


def zeros_below(m: int, cap: float, derivative: bool = False) -> np.ndarray:
    """All zeros of ``J_m`` (or ``J_m'``, with the ``m = 0`` convention) not exceeding ``cap``."""
    if derivative and m == 0 and cap < 3.0:
        return np.zeros(1) if cap >= 0 else np.empty(0)
    # j_{m,k} > (k + m/2 - 1/4) pi - (4m^2-1)/(8(...)) ; a generous upper count
    count = max(1, int(cap / math.pi + 2))
    while True:
        z = _zeros(m, count, derivative)
        if z[-1] > cap:
            return z[z <= cap]
        count += max(4, count // 2)


@dataclass(frozen=True)
class BesselZeroTable:
    """Zeros ``j[m][k]`` and derivative zeros ``jp[m][k]`` for ``0 <= m <= m_max``, ``k <= k_max``.

    Column ``k - 1`` holds index ``k``. ``jp[0][0] == 0`` by convention; derivative zeros of
    higher orders start strictly positive.
    """

    m_max: int
    k_max: int
    j: np.ndarray
    jp: np.ndarray
    zero_counted_for_m0: bool = True

    @classmethod
    def build(cls, m_max: int, k_max: int) -> "BesselZeroTable":
        j = np.empty((m_max + 1, k_max))
        jp = np.empty((m_max + 1, k_max + 1))
        for m in range(m_max + 1):
            j[m] = bessel_zeros(m, k_max)
            jp[m] = bessel_prime_zeros(m, k_max + 1)
        for arr in (j, jp):
            arr.setflags(write=False)
        return cls(m_max, k_max, j, jp)

    def residuals(self) -> tuple[float, float]:
        """Largest ``|J_m(j)|`` and ``|J_m'(j')|`` over the table."""
        rj = max(float(np.max(np.abs(bessel_j(m, self.j[m])))) for m in range(self.m_max + 1))
        rp = max(float(np.max(np.abs(bessel_j_prime(m, self.jp[m])))) for m in range(self.m_max + 1))
        return rj, rp


@dataclass
class GapCheck:
    m: int
    k: int
    l: int
    quantity: str
    bound: float
    value: float
    passed: bool


@dataclass
class GapReport:
    m_max: int
    k_max: int
    counts: dict[str, int] = field(default_factory=dict)
    violations: list[GapCheck] = field(default_factory=list)
    tightest: list[GapCheck] = field(default_factory=list)
    m0_constant: float = float("nan")
    max_residual: float = float("nan")

    @property
    def n_checks(self) -> int:
        return sum(self.counts.values())

    @property
    def ok(self) -> bool:
        return not self.violations

    def rows(self) -> list[GapCheck]:
        """Tightest instance per (m, quantity) followed by every violation."""
        return self.tightest + self.violations


def _record(report: GapReport, name: str, m: int, k: np.ndarray, l: np.ndarray,
            bound: np.ndarray, value: np.ndarray, strict: bool = False) -> None:
    k, l, bound, value = (np.broadcast_to(a, np.broadcast(k, l, bound, value).shape).ravel()
                          for a in (k, l, bound, value))
    passed = value > bound if strict else value >= bound
    report.counts[name] = report.counts.get(name, 0) + value.size
    margin = value - bound
    i = int(np.argmin(margin))
    report.tightest.append(GapCheck(m, int(k[i]), int(l[i]), name, float(bound[i]), float(value[i]),
                                    bool(passed[i])))
    for i in np.flatnonzero(~passed):
        report.violations.append(GapCheck(m, int(k[i]), int(l[i]), name, float(bound[i]),
                                          float(value[i]), False))


def verify_zero_gaps(m_max: int, k_max: int, table: BesselZeroTable | None = None) -> GapReport:
    """Check interlacing and the lower bounds on zero spacings for ``1 <= m <= m_max``.

    Quantities: ``interlace`` (``j_k < j'_{k+1} < j_{k+1}``), ``j-jp`` (``>= sqrt 2``, k >= 2),
    ``jp-j`` (``j'_{k+1} - j_k >= 1``), ``elbert`` (``|j_k - j_l| > pi |k - l|``),
    ``cross`` (``|j_k - j'_l| >= |2k - 2l + 1|``) and ``watson`` (``j'_1 > sqrt(m(m+2))``).
    The order-0 constant for the ``cross`` bound is measured and reported, not asserted.
    """
    if m_max < 1 or k_max < 2:
        raise ValueError("need m_max >= 1 and k_max >= 2")
    if table is None or table.m_max < m_max or table.k_max < k_max:
        table = BesselZeroTable.build(m_max, k_max)
    rep = GapReport(m_max, k_max)
    ks = np.arange(1, k_max + 1)
    for m in range(1, m_max + 1):
        j = table.j[m, :k_max]
        jp = table.jp[m, :k_max + 1]
        _record(rep, "interlace", m, ks[:-1], ks[:-1] + 1,
                np.zeros(k_max - 1), np.minimum(jp[1:k_max] - j[:-1], j[1:] - jp[1:k_max]), strict=True)
        _record(rep, "watson", m, np.array([1]), np.array([1]), np.array([math.sqrt(m * (m + 2))]),
                np.array([jp[0]]), strict=True)
        _record(rep, "j-jp", m, ks[1:], ks[1:], np.full(k_max - 1, math.sqrt(2.0)), j[1:] - jp[1:k_max])
        _record(rep, "jp-j", m, ks, ks + 1, np.ones(k_max), jp[1:k_max + 1] - j)
        kk, ll = np.meshgrid(ks, ks, indexing="ij")
        off = kk != ll
        _record(rep, "elbert", m, kk[off], ll[off], math.pi * np.abs(kk[off] - ll[off]),
                np.abs(j[kk[off] - 1] - j[ll[off] - 1]), strict=True)
        _record(rep, "cross", m, kk, ll, np.abs(2 * kk - 2 * ll + 1).astype(float),
                np.abs(j[kk - 1] - jp[ll - 1]))
    j0 = table.j[0, :k_max]
    jp0 = table.jp[0, :k_max]
    kk, ll = np.meshgrid(ks, ks, indexing="ij")
    rep.m0_constant = float(np.min(np.abs(j0[kk - 1] - jp0[ll - 1]) / np.abs(2 * kk - 2 * ll + 1)))
    sub = BesselZeroTable(m_max, k_max, table.j[:m_max + 1, :k_max], table.jp[:m_max + 1, :k_max + 1])
    rep.max_residual = max(sub.residuals())
    return rep

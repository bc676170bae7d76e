"""Background radial vortex: vorticity, induced velocity and coefficient functions.

Functions of ``r`` are lower case (``b``, ``d``); their images in ``v = log r``
are upper case (``B``, ``D``, ``dB``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .grid import RadialGrid

PROFILE_CSV_COLUMNS = ("v", "r", "Omega", "U", "b", "d", "B", "D", "dB")


class VortexProfile:
    """Interface shared by the closed-form and tabulated profiles."""

    A: float
    c_star: float
    b0: float

    # functions of r
    def omega(self, r):
        raise NotImplementedError

    def domega(self, r):
        raise NotImplementedError

    def U(self, r):
        return np.asarray(r) * self.b(r)

    def b(self, r):
        raise NotImplementedError

    def d(self, r):
        return self.domega(r) / np.asarray(r)

    # functions of v
    def B(self, v):
        return self.b(np.exp(v))

    def D(self, v):
        return self.d(np.exp(v))

    def dB(self, v):
        raise NotImplementedError

    def B_minus(self, v, w):
        """``B(v) - B(w)``; subclasses override when cancellation matters."""
        return self.B(v) - self.B(w)

    def B_slope(self, v, w):
        """Divided difference ``(B(v) - B(w)) / (v - w)``, equal to ``dB(w)`` on the diagonal."""
        v, w = np.broadcast_arrays(np.asarray(v, float), np.asarray(w, float))
        u = v - w
        near = np.abs(u) < 1e-7
        safe = np.where(near, 1.0, u)
        out = self.B_minus(v, w) / safe
        return np.where(near, self.dB(0.5 * (v + w)), out)

    def tabulate(self, grid: RadialGrid) -> dict[str, np.ndarray]:
        v, r = grid.v, grid.r
        return {
            "v": v, "r": r,
            "Omega": self.omega(r), "U": self.U(r), "b": self.b(r), "d": self.d(r),
            "B": self.B(v), "D": self.D(v), "dB": self.dB(v),
        }

    def write_csv(self, path, grid: RadialGrid) -> None:
        tab = self.tabulate(grid)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(PROFILE_CSV_COLUMNS)
            for i in range(grid.n):
                wr.writerow([repr(float(tab[c][i])) for c in PROFILE_CSV_COLUMNS])


@dataclass(frozen=True)
class CanonicalProfile(VortexProfile):
    """``Omega(r) = A / (2 + r^2)^3``, for which ``d = c_* / <r>^8`` exactly with ``c_* = -6A``."""

    A: float = 1.0

    @property
    def c_star(self) -> float:
        return -6.0 * self.A

    @property
    def b0(self) -> float:
        return self.A / 16.0

    def omega(self, r):
        r = np.asarray(r, dtype=float)
        return self.A / (2 + r * r) ** 3

    def domega(self, r):
        r = np.asarray(r, dtype=float)
        return -6 * self.A * r / (2 + r * r) ** 4

    def d(self, r):
        r = np.asarray(r, dtype=float)
        return -6 * self.A / (2 + r * r) ** 4

    def b(self, r):
        # (1/4 - 1/(2+r^2)^2) / (4 r^2) rewritten without cancellation
        r2 = np.asarray(r, dtype=float) ** 2
        return self.A * (4 + r2) / (16 * (2 + r2) ** 2)

    def B(self, v):
        rho = np.exp(2 * np.asarray(v, dtype=float))
        return self.A * (4 + rho) / (16 * (2 + rho) ** 2)

    def D(self, v):
        rho = np.exp(2 * np.asarray(v, dtype=float))
        return -6 * self.A / (2 + rho) ** 4

    def dB(self, v):
        rho = np.exp(2 * np.asarray(v, dtype=float))
        return -self.A * rho * (6 + rho) / (8 * (2 + rho) ** 3)

    def depth(self, v):
        """``b0 - B(v)`` without cancellation near the core."""
        rho = np.exp(2 * np.asarray(v, dtype=float))
        return self.A * rho * (rho + 3) / (16 * (2 + rho) ** 2)

    def B_minus(self, v, w):
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        rv, rw = np.exp(2 * v), np.exp(2 * w)
        # rho_v - rho_w = 2 e^{v+w} sinh(v - w), exact for nearby v, w
        drho = 2 * np.exp(v + w) * np.sinh(v - w)
        return -self.A / 16 * drho * (rv * rw + 4 * rv + 4 * rw + 12) / ((2 + rv) ** 2 * (2 + rw) ** 2)

    def B_slope(self, v, w):
        v, w = np.broadcast_arrays(np.asarray(v, float), np.asarray(w, float))
        u = v - w
        small = np.abs(u) < 1e-4
        safe = np.where(small, 1.0, u)
        shc = np.where(small, 1 + u * u / 6, np.sinh(safe) / safe)
        rv, rw = np.exp(2 * v), np.exp(2 * w)
        return -self.A / 8 * np.exp(v + w) * shc * (rv * rw + 4 * rv + 4 * rw + 12) / (
            (2 + rv) ** 2 * (2 + rw) ** 2)


def make_canonical_profile(A: float = 1.0) -> CanonicalProfile:
    if not (A > 0 and math.isfinite(A)):
        raise ValueError(f"amplitude A must be positive, got {A}")
    return CanonicalProfile(float(A))


def _cumulative_moment(f, h):
    """Cumulative integral of samples ``f`` on a uniform grid, trapezoid plus
    the Euler-Maclaurin endpoint correction (fourth order)."""
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (f[1:] + f[:-1]))])
    df = np.gradient(f, h, edge_order=2)
    return cum - h * h / 12.0 * (df - df[0])


def velocity_from_vorticity(omega, grid: RadialGrid) -> np.ndarray:
    """Azimuthal velocity ``U(r) = (1/r) int_0^r s Omega(s) ds`` on the grid.

    ``omega`` is either a callable of ``r`` or samples on ``grid``.
    """
    om = np.asarray(omega(grid.r) if callable(omega) else omega, dtype=float)
    if om.shape != (grid.n,):
        raise ValueError("vorticity samples must match the grid")
    if not np.any(om):
        return np.zeros(grid.n)
    head = np.abs(om[:8])
    if np.all(head > 0):
        slope = np.polyfit(grid.v[:8], np.log(head), 1)[0]
        if slope <= -2.0:
            raise ValueError(
                f"vorticity grows like r^{slope:.2f} at the core; s*Omega(s) is not integrable")
    f = grid.r**2 * om  # s Omega(s) ds = e^{2v} Omega dv
    # first cell [0, r_0]: leading order Omega(r_0) r_0^2 / 2
    core = 0.5 * om[0] * grid.r[0] ** 2
    return (core + _cumulative_moment(f, grid.h)) / grid.r


class TabulatedProfile(VortexProfile):
    """Profile built numerically from a vorticity callable via cubic splines in ``v``."""

    def __init__(self, omega, grid: RadialGrid, domega=None):
        self._omega = omega
        self._domega = domega
        self.grid = grid
        om = omega(grid.r)
        U = velocity_from_vorticity(om, grid)
        self._B = CubicSpline(grid.v, U / grid.r)
        if domega is None:
            self._dom = CubicSpline(grid.v, om).derivative()
        self.A = float(omega(np.array([0.0]))[0])
        self.b0 = 0.5 * self.A
        self.c_star = float(16.0 * self.d(np.array([grid.r[0]]))[0])

    def omega(self, r):
        return self._omega(np.asarray(r, dtype=float))

    def domega(self, r):
        r = np.asarray(r, dtype=float)
        if self._domega is not None:
            return self._domega(r)
        return self._dom(np.log(r)) / r

    def b(self, r):
        return self._B(np.log(np.asarray(r, dtype=float)))

    def B(self, v):
        return self._B(np.asarray(v, dtype=float))

    def dB(self, v):
        return self._B(np.asarray(v, dtype=float), 1)


def profile_from_vorticity(omega, grid: RadialGrid, domega=None) -> TabulatedProfile:
    return TabulatedProfile(omega, grid, domega)


# --- structural checks -------------------------------------------------------

def _bracket(x):
    return 2.0 + np.asarray(x) ** 2  # <x>^2 with <x> = sqrt(x^2 + 2)


def _fd_derivatives(f, h, j_max):
    """Centered second-order derivatives 0..j_max of uniform samples (interior only)."""
    out = [np.asarray(f, dtype=float)]
    for _ in range(j_max):
        g = out[-1]
        dg = np.full_like(g, np.nan)
        dg[1:-1] = (g[2:] - g[:-2]) / (2 * h)
        out.append(dg)
    return out


@dataclass
class CheckResult:
    name: str
    passed: bool
    constant: float
    detail: str = ""


def verify_assumptions(p: VortexProfile, grid: RadialGrid, j_max: int = 2,
                       fd_spacing: float = 0.05) -> list[CheckResult]:
    """Check the structural hypotheses on the background vortex.

    Failures are reported, never raised. Derivative checks use centered
    differences on a sub-sampled copy of the v-grid (spacing near
    ``fd_spacing``) to keep roundoff below the envelopes.
    """
    if j_max > 4:
        raise ValueError("finite-difference derivative checks are limited to j_max <= 4")
    results: list[CheckResult] = []
    big = 1e12

    def add(name, ok, const, detail=""):
        ok = bool(ok) and np.isfinite(const) and abs(const) < big
        results.append(CheckResult(name, ok, float(const), detail))

    r, v = grid.r, grid.v
    om = p.omega(r)
    add("Omega > 0", np.all(om > 0), float(np.min(om)), "min Omega")
    dom = p.domega(r)
    add("dOmega/dr < 0", np.all(dom < 0), float(np.max(dom)), "max dOmega/dr")
    with np.errstate(divide="ignore", invalid="ignore"):
        add("Omega <= C/<r>^6", np.all(om > 0), float(np.max(om * _bracket(r) ** 3)), "fitted C_*")

    stride = max(1, int(round(fd_spacing / grid.h)))
    vs = v[::stride]
    hs = vs[1] - vs[0]
    rs = np.exp(vs)
    rem = p.d(rs) - p.c_star / _bracket(rs) ** 4
    env = rs**2 / _bracket(rs) ** 5
    for j, dj in enumerate(_fd_derivatives(rem, hs, j_max)):
        m = np.isfinite(dj)
        c = float(np.max(np.abs(dj[m]) / env[m])) ** (1.0 / (j + 1)) / math.factorial(j) ** (2.0 / (j + 1))
        add(f"(r d_r)^{j} remainder envelope", True, c, "fitted C_* in C^(j+1) (j!)^2 r^2/<r>^10")

    b = p.b(r)
    add("b > 0", np.all(b > 0), float(np.min(b)))
    add("b strictly decreasing", np.all(np.diff(b) < 0), float(np.max(np.diff(b))))
    bb = b * _bracket(r)
    add("b*(2+r^2) bounded above", np.all(np.isfinite(bb)), float(np.max(bb)))
    add("b*(2+r^2) bounded below", np.min(bb) > 0, float(np.min(bb)))

    dB = p.dB(v)
    add("dB/dv < 0", np.all(dB < 0), float(np.max(dB)))
    scaled = np.abs(dB) * (1 + np.exp(2 * v)) ** 2 / np.exp(2 * v)
    add("|dB|(1+e^2v)^2/e^2v bounded above", np.all(np.isfinite(scaled)), float(np.max(scaled)))
    add("|dB|(1+e^2v)^2/e^2v bounded below", np.min(scaled) > 0, float(np.min(scaled)))

    Ds = p.D(vs)
    envD = np.exp(2 * vs) / (1 + np.exp(2 * vs)) ** 5
    dev = np.abs(Ds - p.c_star / (2 + np.exp(2 * vs)) ** 4)
    add("|D - c_*/(2+e^2v)^4| envelope", True, float(np.max(dev / envD)), "fitted C^*")
    for j, dj in enumerate(_fd_derivatives(Ds, hs, j_max)):
        if j == 0:
            continue
        m = np.isfinite(dj)
        c = float(np.max(np.abs(dj[m]) / envD[m])) ** (1.0 / j) / math.factorial(j) ** (2.0 / j)
        add(f"d_v^{j} D envelope", True, c, "fitted C^* in (C^*)^j (j!)^2 e^2v/(1+e^2v)^5")

    left = v < -2
    lead = p.c_star / 64.0 * np.exp(2 * v[left])
    c101 = float(np.max(np.abs(dB[left] - lead) / np.exp(4 * v[left])))
    add("dB = (c_*/64) e^2v + O(e^4v), v < -2", True, c101, "fitted O(e^4v) constant")
    return results


def assumptions_pass(results: list[CheckResult]) -> bool:
    return all(c.passed for c in results)

"""Decay-rate fits, the local/nonlocal vorticity split and oscillatory observables."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from . import cutoffs
from .evolution import InitialData, lift_weight
from .grid import RadialGrid
from .profile import VortexProfile
from .spectral import SpectralDensityTable, phase_guard, trapezoid_w_weights


def expected_exponent(k) -> float:
    return 1.0 + math.sqrt(k * k + 8)


# --- power-law fits ------------------------------------------------------------

@dataclass
class DecayFit:
    exponent: float
    stderr: float
    window: tuple[float, float]
    n_points: int
    residual: float


def fit_decay(times, values, floor_rel: float = 1e-12, min_points: int = 8,
              min_decades: float = 1.0) -> DecayFit:
    """Least-squares slope of ``log|value|`` against ``log t``; exponent is minus the slope."""
    t = np.asarray(times, dtype=float)
    a = np.abs(np.asarray(values))
    if len(t) < min_points:
        raise ValueError(f"fit needs at least {min_points} points, got {len(t)}")
    if np.any(t <= 0) or np.log10(t.max() / t.min()) < min_decades - 1e-9:
        raise ValueError("fit window must span at least one decade of positive times")
    floor = floor_rel * a[np.argmin(t)]
    if np.any(a <= floor) or not np.all(np.isfinite(a)):
        raise ValueError(f"values reach the quadrature noise floor {floor:.3e} inside the window")
    x, y = np.log(t), np.log(a)
    X = np.vstack([np.ones_like(x), x]).T
    coef, res, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = max(len(x) - 2, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    return DecayFit(float(-coef[1]), float(np.sqrt(cov[1, 1])), (float(t.min()), float(t.max())),
                    len(t), float(np.sqrt(np.mean(resid**2))))


def fit_slope(x, y) -> tuple[float, float]:
    """Plain least-squares slope and its standard error."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    X = np.vstack([np.ones_like(x), x]).T
    coef = np.linalg.lstsq(X, y, rcond=None)[0]
    resid = y - X @ coef
    s2 = float(resid @ resid) / max(len(x) - 2, 1)
    return float(coef[1]), float(np.sqrt(s2 * np.linalg.inv(X.T @ X)[1, 1]))


# --- oscillatory quadrature ------------------------------------------------------

def filon_linear(theta, g, dw) -> complex:
    """``int e^{i theta(w)} g(w) dw`` on a uniform grid with theta and g linear per cell.

    Exact when the phase is linear on each cell, so the cost does not grow
    with the oscillation frequency.
    """
    theta = np.asarray(theta, dtype=float)
    g = np.asarray(g)
    d = np.diff(theta)
    e = np.exp(1j * theta[:-1])
    small = np.abs(d) < 1e-3
    dd = np.where(small, 1.0, d)
    ex = np.exp(1j * dd)
    E0 = np.where(small, 1 + 1j * d / 2 - d * d / 6, (ex - 1) / (1j * dd))
    E1 = np.where(small, 0.5 + 1j * d / 3 - d * d / 8, ex / (1j * dd) - (ex - 1) / (1j * dd) ** 2)
    return complex(np.sum(e * (g[:-1] * (E0 - E1) + g[1:] * E1)) * dw)


def observable_amplitude(table: SpectralDensityTable, k, grid: RadialGrid, varrho=None) -> np.ndarray:
    """``a(w) = int Gamma(v, w) H_k(e^v) e^{2v} dv`` with the harmonic-lift weight."""
    weight = lift_weight(k, grid, varrho) * grid.w_rdr
    return table.Gamma @ weight


def observable_decay_spectral(k, table: SpectralDensityTable, profile: VortexProfile,
                              grid: RadialGrid, times, varrho=None,
                              phase_limit: float = 0.5) -> np.ndarray:
    """``I(t) = int omega_k r^k varrho r dr`` from the spectral representation.

    Computed as ``-(1/2pi) int e^{-ikB(w)t} a(w) B'(w) dw`` with Filon weights.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    phase_guard(k, table, profile, times.max(), phase_limit)
    a = observable_amplitude(table, k, grid, varrho)
    w = table.w
    Bw, dBw = profile.B(w), profile.dB(w)
    return np.array([-filon_linear(-k * Bw * t, a * dBw, table.h_w) / (2 * np.pi) for t in times])


# --- local / nonlocal split --------------------------------------------------------

@dataclass
class SplitResult:
    k: int
    t: float
    v: np.ndarray
    f_loc: np.ndarray
    f_nloc: np.ndarray
    recombined: np.ndarray
    recombination_error: float = float("nan")
    flagged: np.ndarray = None


def _window_poly_log_integral(a, b, half=2.0):
    """``int_a^b log|u| W(u) du`` with ``W(u) = (1 - (u/half)^2)^2`` on ``|u| <= half``."""
    def prim(x):
        # antiderivative of log(x) x^n for x > 0: x^{n+1}(log x/(n+1) - 1/(n+1)^2)
        coeffs = {0: 1.0, 2: -2 / half**2, 4: 1 / half**4}
        if x == 0:
            return 0.0
        return sum(c * x ** (n + 1) * (math.log(x) / (n + 1) - 1 / (n + 1) ** 2) for n, c in coeffs.items())

    a, b = max(a, -half), min(b, half)
    if a >= b:
        return 0.0
    # W is even, so split at 0
    if a >= 0:
        return prim(b) - prim(a)
    if b <= 0:
        return prim(-a) - prim(-b)
    return prim(-a) + prim(b)


def _log_window(u, half=2.0):
    u = np.asarray(u, float)
    return np.where(np.abs(u) < half, (1 - (u / half) ** 2) ** 2, 0.0)


def _one_sided_integral(vals, h, m0):
    """Integral over [0, m0 h] of the quadratic through nodes m0, m0+1, m0+2 (one side)."""
    x = np.array([m0, m0 + 1, m0 + 2], float) * h
    c = np.polyfit(x, vals, 2)
    P = np.polyint(c)
    return np.polyval(P, m0 * h) - np.polyval(P, 0.0)


def local_nonlocal_split(t, k, table: SpectralDensityTable, data: InitialData,
                         profile: VortexProfile, grid: RadialGrid, v_index=None,
                         step=cutoffs.smoothstep, exclusion: int = 2,
                         omega_ref=None, delta_coef=None) -> SplitResult:
    """Split ``f_k(t, v)`` into the part that follows the rotation and the rest.

    ``f_loc`` multiplies ``e^{-ikB(v)t}``; ``f_loc e^{-ikB(v)t} + f_nloc`` is the
    representation of the vorticity. Rows ``v`` must be nodes of the w-grid.
    The principal value uses subtraction of ``Gamma(v, v)`` (closed form in
    ``lambda = B(w)``), removal of the ``log|w - v|`` term with its analytic
    integral, and one-sided extrapolation inside ``exclusion`` cells.
    ``delta_coef`` defaults to ``D frakF - F_0k`` from the diagonal of the
    table; the jump-based value is an independent cross-check. The overall
    sign is the one for which the recombination reproduces ``omega_k`` with
    ``psi = -int G omega``.
    """
    k = abs(int(k))
    w = table.w
    hw = table.h_w
    if abs(hw - grid.h) > 1e-12:
        raise ValueError("the split needs a stride-1 w-grid (densified around each row)")
    j0 = int(table.w_index[0])
    if v_index is None:
        v_index = table.w_index
    v_index = np.asarray(v_index, dtype=int)
    wts = trapezoid_w_weights(table)
    Bw, dBw = profile.B(w), profile.dB(w)
    if delta_coef is None:
        delta_coef = table.delta_coefficient_direct(profile, data)
    delta_at = dict(zip(table.w_index.tolist(), np.asarray(delta_coef).tolist()))

    n_rows = len(v_index)
    f_loc = np.zeros(n_rows, complex)
    f_nloc = np.zeros(n_rows, complex)
    flagged = np.zeros(n_rows, bool)
    for row, i in enumerate(v_index):
        c_i = i - j0  # column of the table with w = v_i
        if not 0 <= c_i < len(w):
            raise ValueError("split rows must lie on the w-grid")
        v = grid.v[i]
        u = v - w
        flagged[row] = (v - 4 < w[0]) or (v + 4 > w[-1])
        G = table.Gamma[:, i]
        Gvv = G[c_i]
        phi = step((4.0 - np.abs(u)) / 2.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            kern = dBw / profile.B_minus(v, w)
        kern[c_i] = 0.0
        ph = np.exp(-1j * k * (Bw - profile.B(v)) * t)

        # nonlocal part: smooth integrand, shared trapezoid nodes
        f_nloc[row] = np.sum(wts * np.exp(-1j * k * Bw * t) * G * (1 - phi) * kern)

        # local part: subtract Gamma(v, v)
        P = np.exp(2 * v) * profile.D(v) / profile.dB(v)
        c_log = P * Gvv
        sub = (G * ph - Gvv) * phi * kern
        sub = sub - c_log * np.log(np.abs(np.where(u == 0, 1.0, u))) * _log_window(u)
        sub[c_i] = 0.0
        loc_w = wts.copy()
        m0 = exclusion
        lo, hi = c_i - m0, c_i + m0
        inside = np.zeros(len(w), bool)
        inside[max(lo + 1, 0):min(hi, len(w))] = True
        loc_w[inside] = 0.0
        for edge in (lo, hi):
            if 0 <= edge < len(w):
                loc_w[edge] = hw / 2
        total = np.sum(loc_w * sub)
        # inner cells: one-sided quadratic extrapolation on each side
        if c_i - m0 - 2 >= 0 and c_i + m0 + 2 < len(w):
            right = sub[c_i + m0:c_i + m0 + 3]
            left = sub[c_i - m0 - 2:c_i - m0 + 1][::-1]
            total += _one_sided_integral(right, hw, m0) + _one_sided_integral(left, hw, m0)
        else:
            flagged[row] = True
        total += c_log * _window_poly_log_integral(w[0] - v, w[-1] - v)
        # Gamma(v, v) times the principal value of B'(w) / (B(v) - B(w)) Phi*
        core = np.log(abs(profile.B_minus(v, v - 2.0))) - np.log(abs(profile.B_minus(v, v + 2.0)))
        outer = (np.abs(u) > 2.0) & (np.abs(u) < 4.0)
        core_outer = np.sum(wts[outer] * phi[outer] * kern[outer])
        total += Gvv * (core + core_outer)

        Dv = profile.D(v)
        f_loc[row] = -(Dv / (2 * np.pi) * total + delta_at.get(int(i), np.nan))
        f_nloc[row] = -Dv / (2 * np.pi) * f_nloc[row]

    vv = grid.v[v_index]
    recombined = f_loc * np.exp(-1j * k * profile.B(vv) * t) + f_nloc
    res = SplitResult(k, float(t), vv, f_loc, f_nloc, recombined, flagged=flagged)
    if omega_ref is not None:
        ref = np.asarray(omega_ref)[v_index]
        ok = ~flagged
        res.recombination_error = float(np.max(np.abs(recombined[ok] - ref[ok])) / np.max(np.abs(ref[ok])))
    return res


def vanishing_slope(split: SplitResult, v_lo=-7.0, v_hi=-4.0) -> tuple[float, float]:
    """Fitted slope of ``log|f_loc|`` against ``v`` on ``[v_lo, v_hi]``."""
    m = (split.v >= v_lo) & (split.v <= v_hi)
    if m.sum() < 8:
        raise ValueError("too few split rows in the fitting interval")
    return fit_slope(split.v[m], np.log(np.abs(split.f_loc[m])))


def nonlocal_decay_check(k, table: SpectralDensityTable, data: InitialData, profile: VortexProfile,
                         grid: RadialGrid, times, v_values=(-1.0, 0.0, 1.0)) -> dict[float, DecayFit]:
    """Fitted t-exponent of ``|f_nloc(t, v)|`` at a few fixed ``v``."""
    times = np.asarray(times, float)
    rows = [grid.index_of(v) for v in v_values]
    vals = np.array([local_nonlocal_split(t, k, table, data, profile, grid, v_index=rows).f_nloc
                     for t in times])
    return {v: fit_decay(times, vals[:, c]) for c, v in enumerate(v_values)}


# --- results file -------------------------------------------------------------------

RESULT_COLUMNS = ("k", "route", "t_lo", "t_hi", "exponent", "stderr", "expected", "pass")


def append_results_csv(path, k, route, fit: DecayFit, tol: float, passed: bool | None = None) -> None:
    exp = expected_exponent(k)
    if passed is None:
        passed = abs(fit.exponent - exp) <= tol
    new = not os.path.exists(path)
    with open(path, "a", newline="") as fh:
        wr = csv.writer(fh)
        if new:
            wr.writerow(RESULT_COLUMNS)
        wr.writerow([k, route, repr(fit.window[0]), repr(fit.window[1]), repr(fit.exponent),
                     repr(fit.stderr), repr(exp), "pass" if passed else "fail"])


# --- density-table diagnostics ------------------------------------------------------

def significant_columns(table: SpectralDensityTable, rel: float = 1e-6) -> np.ndarray:
    """Column indices whose norm is at least ``rel`` times the largest column norm."""
    cn = table.column_norms()
    return np.where(cn >= rel * cn.max())[0]


def pv_residual(table: SpectralDensityTable, profile: VortexProfile, grid: RadialGrid,
                n_pairs: int = 100, min_sep: float = 0.5, max_sep: float = 3.0,
                seed: int = 0, floor_rel: float = 1e-6) -> np.ndarray:
    """Off-diagonal residual of the density equation relative to its local scale.

    Residual ``(k^2 - d_v^2) Gamma + e^{2v} D(v) Gamma / (B(v) - B(w))`` with
    centered second differences; the scale is the sum of the magnitudes of the
    three terms. Points where ``|Gamma|`` is below ``floor_rel`` of its column
    maximum carry no local scale (for k = 1 the density vanishes identically
    on ``v > w``) and are not sampled. Returns rows ``(ratio, w, v - w)``.
    """
    k = table.k
    rng = np.random.default_rng(seed)
    cols = significant_columns(table)
    h = grid.h
    out = []
    attempts = 0
    while len(out) < n_pairs:
        attempts += 1
        if attempts > 1000 * n_pairs:
            raise RuntimeError("too few (v, w) pairs carry a local scale")
        j = int(rng.choice(cols))
        sep = rng.choice([-1.0, 1.0]) * rng.uniform(min_sep, max_sep)
        wj = table.w[j]
        i = grid.index_of(wj + sep)
        if not 1 <= i < grid.n - 1 or abs(grid.v[i] - wj) < min_sep:
            continue
        col = table.Gamma[j]
        if abs(col[i]) <= floor_rel * np.max(np.abs(col)):
            continue
        g_vv = (col[i + 1] - 2 * col[i] + col[i - 1]) / h**2
        q = np.exp(2 * grid.v[i]) * profile.D(grid.v[i]) / profile.B_minus(grid.v[i], wj)
        terms = (k * k * col[i], -g_vv, q * col[i])
        scale = sum(abs(x) for x in terms)
        if scale == 0:
            continue
        out.append((abs(sum(terms)) / scale, wj, grid.v[i] - wj))
    return np.array(out)


def column_decay_exponent(table: SpectralDensityTable, w_lo: float = 1.0, w_hi: float = 3.0) -> tuple[float, float]:
    """Rate ``a`` in ``max_v |Gamma(v, w)| ~ e^{-a w}`` fitted on ``[w_lo, w_hi]``."""
    w = table.w
    m = (w >= w_lo) & (w <= w_hi)
    amp = np.max(np.abs(table.Gamma[m]), axis=1)
    slope, err = fit_slope(w[m], np.log(amp))
    return -slope, err


def separation_decay_exponent(table: SpectralDensityTable, w0: float, side: int = -1,
                              s_lo: float = 3.0, s_hi: float = 7.0) -> tuple[float, float]:
    """Rate ``a`` in ``|Gamma(w0 + side s, w0)| ~ e^{-a s}`` for ``s`` in ``[s_lo, s_hi]``."""
    j = int(np.argmin(np.abs(table.w - w0)))
    v = table.v
    s = side * (v - table.w[j])
    m = (s >= s_lo) & (s <= s_hi)
    vals = np.abs(table.Gamma[j, m])
    if m.sum() < 8 or np.any(vals == 0):
        raise ValueError("separation window leaves the grid or hits exact zeros")
    slope, err = fit_slope(s[m], np.log(vals))
    return -slope, err


def near_origin_slope(table: SpectralDensityTable, w0: float, v_lo: float, v_hi: float) -> tuple[float, float]:
    """Slope of ``log|Gamma(v, w0)|`` in ``v`` on ``[v_lo, v_hi]``."""
    j = int(np.argmin(np.abs(table.w - w0)))
    m = (table.v >= v_lo) & (table.v <= v_hi)
    if m.sum() < 8:
        raise ValueError("near-origin window holds fewer than 8 nodes")
    return fit_slope(table.v[m], np.log(np.abs(table.Gamma[j, m])))

"""Limiting-absorption resolvent solves and the spectral density ``Gamma_k(v, w)``.

For each spectral parameter ``w`` the density column solves

    (k^2 - d_v^2) Gamma + e^{2v} D(v) / (B(v) - B(w) + i eps) Gamma = e^{2v} F(v) / (B(v) - B(w) + i eps) + core terms

and ``Gamma_k = 2 lim Im Gamma^+``. Two routes are provided. ``plemelj`` solves
the limit problem directly with P1 finite elements, writing the singular
coefficient as ``P(v) [p.v. 1/(v-w) + i pi delta(v-w)]``. ``ladder`` solves the
finite-difference problem at a few ``eps > 0`` and extrapolates to ``eps = 0``.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, special
from scipy.linalg import eigvalsh, lapack, solve_banded

from . import cutoffs
from .elliptic import green_matrix, laplacian_bands
from .evolution import InitialData
from .grid import RadialGrid
from .profile import VortexProfile

_GX, _GW = np.polynomial.legendre.leggauss(4)
_LX, _LW = np.polynomial.legendre.leggauss(12)
_LX = (_LX + 1) / 2
_LW = _LW / 2


def core_source(data: InitialData, v) -> np.ndarray:
    """``(sigma_k/c_*)(2|k| e^{|k|v} Phi_0' + e^{|k|v} Phi_0'')``; zero when ``sigma_k = 0``."""
    v = np.asarray(v, dtype=float)
    if data.sigma_k == 0:
        return np.zeros_like(v)
    m = abs(data.k)
    return data.sigma_k / data.c_star * np.exp(m * v) * (
        2 * m * cutoffs.phi0(v, 1) + cutoffs.phi0(v, 2))


# --- finite differences at eps > 0 -------------------------------------------

@dataclass
class ResolventSolve:
    k: int
    w: float
    epsilon: float
    iota: int
    gamma: np.ndarray
    residual: float
    rcond: float


def epsilon_floor(w, profile: VortexProfile, grid: RadialGrid) -> float:
    """Smallest ``eps`` for which the critical layer is resolved on the grid."""
    return float(abs(profile.dB(w)) * grid.h)


def solve_resolvent(k, w, epsilon, iota, data: InitialData, profile: VortexProfile,
                    grid: RadialGrid) -> ResolventSolve:
    """Centered-difference solve of the regularized problem with Robin ends."""
    if not 0 < epsilon <= 0.125:
        raise ValueError("epsilon must lie in (0, 1/8]")
    if iota not in (1, -1):
        raise ValueError("iota must be +1 or -1")
    if not grid.v[1] <= w <= grid.v[-2]:
        raise ValueError("w must lie in the grid interior")
    if epsilon < epsilon_floor(w, profile, grid):
        raise ValueError(f"epsilon={epsilon:.3e} is below |B'(w)| h = {epsilon_floor(w, profile, grid):.3e}; "
                         "the critical layer is not resolved")
    v = grid.v
    den = profile.B_minus(v, w) + 1j * iota * epsilon
    q = np.exp(2 * v) * profile.D(v) / den
    rhs = np.exp(2 * v) * data.F_of_v(v) / den + core_source(data, v)
    ab = -laplacian_bands(k, grid).astype(complex)
    ab[1] += q
    dl, d, du = ab[2, :-1].copy(), ab[1].copy(), ab[0, 1:].copy()
    anorm = float(np.max(np.abs(d) + np.concatenate([[0], np.abs(dl)]) + np.concatenate([np.abs(du), [0]])))
    dl_f, d_f, du_f, du2, ipiv, info = lapack.zgttrf(dl, d, du)
    if info != 0:
        raise np.linalg.LinAlgError("singular resolvent system")
    rcond, _ = lapack.zgtcon(dl_f, d_f, du_f, du2, ipiv, anorm, norm="1")
    if rcond < 1e-12:
        raise np.linalg.LinAlgError(f"resolvent system is near singular (rcond={rcond:.2e})")
    sol, _ = lapack.zgttrs(dl_f, d_f, du_f, du2, ipiv, rhs)
    res = ab[1] * sol
    res[:-1] += ab[0, 1:] * sol[1:]
    res[1:] += ab[2, :-1] * sol[:-1]
    resid = float(np.linalg.norm(res - rhs) / max(np.linalg.norm(rhs), 1e-300))
    return ResolventSolve(abs(int(k)), float(w), float(epsilon), iota, sol, resid, float(rcond))


# --- Plemelj finite elements at eps = 0+ -------------------------------------

class PlemeljAssembler:
    """P1 Galerkin discretization of the limit problem on a uniform v-grid."""

    def __init__(self, k, data: InitialData, profile: VortexProfile, v: np.ndarray):
        self.k = abs(int(k))
        self.profile = profile
        self.v = np.asarray(v, dtype=float)
        self.n = len(self.v)
        self.h = self.v[1] - self.v[0]
        h = self.h
        self.xq = self.v[:-1, None] + h * (_GX[None, :] + 1) / 2
        self.wq = _GW * h / 2
        self.phiL = 1 - (self.xq - self.v[:-1, None]) / h
        self.phiR = 1 - self.phiL
        self.e2D = np.exp(2 * self.xq) * profile.D(self.xq)
        self.e2F = np.exp(2 * self.xq) * data.F_of_v(self.xq)
        self.s = (_GX + 1) / 2 * h  # one-sided offsets in (0, h)
        self.F = data.F_of_v
        self.log_cells = 64
        self.sigma = data.sigma_k
        if data.sigma_k:
            cs = core_source(data, self.xq)
            self.core_load = np.zeros(self.n)
            self.core_load[:-1] += (cs * self.phiL * self.wq).sum(1)
            self.core_load[1:] += (cs * self.phiR * self.wq).sum(1)
        else:
            self.core_load = None

    def _P(self, x, w):
        return np.exp(2 * x) * self.profile.D(x) / self.profile.B_slope(x, w)

    def _S(self, x, w):
        return np.exp(2 * x) * self.F(x) / self.profile.B_slope(x, w)

    def left_kappa(self, w) -> float:
        """Log-derivative of the decaying solution at the left end (Bessel type)."""
        v0 = self.v[0]
        q0 = float(self._P(np.array(v0), w) / (v0 - w))
        k = self.k
        if abs(q0) < 1e-10:
            return float(k)
        x = 2 * np.sqrt(abs(q0))
        if q0 < 0:
            return float(x * special.jvp(k, x) / special.jv(k, x))
        return float(x * special.ivp(k, x) / special.iv(k, x))

    def log_correction(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Load correction for the ``c u log|u|`` behaviour at the critical layer.

        Near ``v = w`` the solution contains ``c (u log(u + i0) - u)`` with
        ``c = P(w) Gamma(w) - S(w)``. Piecewise-linear interpolation misses
        ``c e(u)``, with ``e`` the interpolation error of ``u log|u|``, and that
        defect enters through the potential as an O(h) point load. Returns the
        rows touched and ``int P(v) e(u) / u phi_i dv`` for each.
        """
        h, n, L = self.h, self.n, self.log_cells
        w = self.v[j]
        lo, hi = max(0, j - L), min(n - 1, j + L)
        idx = np.arange(lo, hi + 1)
        corr = np.zeros(len(idx))
        # cells touching the diagonal: e(u) / u = log(|u| / h)
        x = _LX**3
        wx = 3 * _LX**2 * _LW * h
        t = x
        for m in (0, -1):
            e = j + m
            if not lo <= e < hi:
                continue
            u = x * h if m == 0 else -x * h
            f = np.log(x) * self._P(w + u, w) * wx
            near, far = (1 - t, t) if m == 0 else (t, 1 - t)
            corr[e - lo] += np.sum(f * near)
            corr[e + 1 - lo] += np.sum(f * far)
        # remaining cells: smooth integrand, 4-point Gauss per cell
        ms = np.array([e - j for e in range(lo, hi) if e - j not in (0, -1)])
        if len(ms):
            ua = ms[:, None] * h
            ub = ua + h
            u = ua + h * (_GX[None, :] + 1) / 2
            fa, fb = ua * np.log(np.abs(ua)), ub * np.log(np.abs(ub))
            err = u * np.log(np.abs(u)) - (fa * (ub - u) + fb * (u - ua)) / h
            f = err / u * self._P(w + u, w) * (_GW * h / 2)
            tt = (u - ua) / h
            np.add.at(corr, ms + j - lo, np.sum(f * (1 - tt), axis=1))
            np.add.at(corr, ms + j + 1 - lo, np.sum(f * tt, axis=1))
        return idx, corr

    def column(self, j: int) -> np.ndarray:
        """``Gamma^+(., w)`` at ``w = v[j]`` in the limit ``eps -> 0+``."""
        n, h, k = self.n, self.h, self.k
        if not 1 <= j <= n - 2:
            raise ValueError("w must be an interior node")
        w = self.v[j]
        g = self.profile.B_slope(self.xq, w)
        u = self.xq - w
        with np.errstate(divide="ignore", invalid="ignore"):
            Pu = self.e2D / (g * u)
            Su = self.e2F / (g * u)
        wq, phiL, phiR = self.wq, self.phiL, self.phiR
        aLL = (Pu * phiL * phiL * wq).sum(1)
        aLR = (Pu * phiL * phiR * wq).sum(1)
        aRR = (Pu * phiR * phiR * wq).sum(1)
        bL = (Su * phiL * wq).sum(1)
        bR = (Su * phiR * wq).sum(1)

        s, ws = self.s, self.wq
        Pp, Pm = self._P(w + s, w), self._P(w - s, w)
        Sp, Sm = self._S(w + s, w), self._S(w - s, w)
        t = s / h
        # element j = [w, w+h]: node j has hat (1 - t), node j+1 has t
        aLL[j] = 0.0
        aLR[j] = (Pp * (1 - t) / h * ws).sum()
        aRR[j] = (Pp * t / h * ws).sum()
        bL[j] = 0.0
        bR[j] = (Sp / h * ws).sum()
        # element j-1 = [w-h, w]: node j-1 has hat t, node j has (1 - t)
        aLL[j - 1] = -(Pm * t * t / s * ws).sum()
        aLR[j - 1] = -(Pm * t * (1 - t) / s * ws).sum()
        aRR[j - 1] = 0.0
        bL[j - 1] = -(Sm * t / s * ws).sum()
        bR[j - 1] = 0.0
        # principal value over the node-j hat, plus the delta contribution
        Pw = float(self._P(np.array(w), w))
        Sw = float(self._S(np.array(w), w))
        jj = ((Pp - Pm) * (1 - t) ** 2 / s * ws).sum() + 1j * np.pi * Pw
        bj = ((Sp - Sm) * (1 - t) / s * ws).sum() + 1j * np.pi * Sw

        diag = np.zeros(n, complex)
        off = np.zeros(n - 1, complex)
        rhs = np.zeros(n, complex)
        m_diag = k * k * h / 3
        diag[:-1] += aLL + 1 / h + m_diag
        diag[1:] += aRR + 1 / h + m_diag
        off += aLR - 1 / h + k * k * h / 6
        diag[j] += jj
        rhs[j] += bj
        rhs[:-1] += bL
        rhs[1:] += bR
        if self.core_load is not None:
            rhs += self.core_load
        diag[0] += self.left_kappa(w)
        diag[-1] += k
        ab = np.zeros((3, n), complex)
        ab[0, 1:] = off
        ab[1] = diag
        ab[2, :-1] = off
        # rank-one update for the log correction: A + P(w) c_vec e_j^T
        idx, corr = self.log_correction(j)
        rhs[idx] += corr * Sw
        uvec = np.zeros(n, complex)
        uvec[idx] = corr * Pw
        sol = solve_banded((1, 1), ab, np.column_stack([rhs, uvec]), check_finite=False)
        x0, y = sol[:, 0], sol[:, 1]
        return x0 - y * (x0[j] / (1 + y[j]))


# --- density table -----------------------------------------------------------

@dataclass
class SpectralDensityTable:
    """``Gamma[j, i] = Gamma_k(v_i, w_j)`` with per-column diagnostics."""

    k: int
    v: np.ndarray
    w_index: np.ndarray
    Gamma: np.ndarray
    jump: np.ndarray
    frakF: np.ndarray
    err_est: np.ndarray
    method: str
    eps_ladder: tuple = ()
    flagged: np.ndarray = field(default=None)
    meta: dict = field(default_factory=dict)

    @property
    def w(self) -> np.ndarray:
        return self.v[self.w_index]

    @property
    def h_w(self) -> float:
        d = np.diff(self.w)
        return float(d[0]) if len(d) else 0.0

    def delta_coefficient(self, profile: VortexProfile) -> np.ndarray:
        """``D(w) frakF(w) - F_0k(w)`` recovered from the diagonal jump of ``d_v Gamma``."""
        w = self.w
        return self.jump * profile.dB(w) * np.exp(-2 * w) / (2 * np.pi)

    def delta_coefficient_direct(self, profile: VortexProfile, data: InitialData) -> np.ndarray:
        """``D(w) frakF(w) - F_0k(w)`` from the diagonal value of ``Re Gamma^+``."""
        w = self.w
        return profile.D(w) * self.frakF - data.F_of_v(w)

    def column_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.Gamma**2, axis=1))


def jump_from_column(col, j, h, m_range=(2, 3, 4, 5, 6)) -> float:
    """Jump of ``d_v Gamma`` across ``v = v[j]``.

    Centered differences at ``j +- m`` are compared for several ``m`` and the
    limit ``s = m h -> 0`` is taken with the model ``J + a s log s + b s``,
    which absorbs the logarithmic near-diagonal behaviour.
    """
    ms = [m for m in m_range if j - m - 1 >= 0 and j + m + 1 < len(col)]
    if len(ms) < 3:
        return float("nan")
    s = np.array(ms, float) * h
    dp = np.array([(col[j + m + 1] - col[j + m - 1]) / (2 * h) for m in ms])
    dm = np.array([(col[j - m + 1] - col[j - m - 1]) / (2 * h) for m in ms])
    X = np.vstack([np.ones_like(s), s * np.log(s), s]).T
    coef = np.linalg.lstsq(X, dp - dm, rcond=None)[0]
    return float(coef[0])


def default_w_index(grid: RadialGrid, stride: int = 4, margin_left: float = 2.0,
                    margin_right: float = 1.0) -> np.ndarray:
    """Every ``stride``-th node, keeping clear of the truncated core region."""
    lo = grid.index_of(grid.v_min + margin_left)
    hi = grid.index_of(grid.v_max - margin_right)
    return np.arange(lo, hi + 1, stride)


_WORKER = {}


def _init_worker(payload):
    _WORKER.clear()
    _WORKER.update(payload)


def richardson_column(fine_col, coarse_col, parity, v, j=None):
    """Combine a column with its half-resolution solve (O(h^2) error model).

    The correction lives on the coarse nodes and is spread to the fine grid by
    cubic splines on either side of the diagonal node ``j``, which is a coarse
    node, so the kink at ``v = w`` is not smeared. Linear interpolation would
    leave slope jumps at every coarse node that second differences pick up.
    """
    vc = v[parity::2]
    corr = (fine_col[parity::2] - coarse_col) / 3
    if j is None:
        return fine_col + np.interp(v, vc, corr.real) + 1j * np.interp(v, vc, corr.imag)
    jc = (j - parity) // 2
    out = np.array(fine_col, dtype=complex)
    for fine_sl, coarse_sl in ((slice(0, j + 1), slice(0, jc + 1)), (slice(j, None), slice(jc, None))):
        x, y = vc[coarse_sl], corr[coarse_sl]
        xf = v[fine_sl]
        if len(x) >= 4:
            spl = interpolate.CubicSpline(x, y)
            add = spl(np.clip(xf, x[0], x[-1]))
        else:
            add = np.interp(xf, x, y.real) + 1j * np.interp(xf, x, y.imag)
        out[fine_sl] = fine_col[fine_sl] + add
    return out


def _plemelj_task(j):
    fine = _WORKER["fine"]
    col = fine.column(j)
    par = j % 2
    coarse = _WORKER.get("coarse", {}).get(par)
    jc = (j - par) // 2
    est = np.nan
    if coarse is not None and 1 <= jc <= coarse.n - 2:
        cc = coarse.column(jc)
        scale = max(np.max(np.abs(col.imag)), 1e-300)
        # estimate of the unextrapolated error; the stored column is extrapolated
        est = float(np.max(np.abs(col[par::2].imag - cc.imag)) / 3 / scale)
        col = richardson_column(col, cc, par, fine.v, j)
    return col, est


def _ladder_task(j):
    k, data, profile, grid, ladder, mode, degree = (_WORKER[x] for x in
                                                    ("k", "data", "profile", "grid", "ladder", "mode", "degree"))
    w = grid.v[j]
    scale = abs(profile.dB(w)) if mode == "relative" else 1.0
    eps = np.array(ladder) * scale
    cols = np.array([2 * solve_resolvent(k, w, e, 1, data, profile, grid).gamma.imag for e in eps])
    deg = min(degree, len(eps) - 1)
    X = np.vander(eps, deg + 1, increasing=True)
    coef = np.linalg.lstsq(X, cols, rcond=None)[0]
    lim = coef[0]
    lin = np.linalg.lstsq(np.vander(eps, 2, increasing=True), cols, rcond=None)[0][0]
    scale_c = max(np.max(np.abs(lim)), 1e-300)
    est = float(np.max(np.abs(lim - lin)) / scale_c)
    # ladder limit has no complex part at the diagonal; use the smallest eps for Re
    re_diag = solve_resolvent(k, w, eps[-1], 1, data, profile, grid).gamma[j].real
    return lim, est, re_diag


def _run_map(task, items, payload, workers):
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(items) < 2 * workers:
        _init_worker(payload)
        return [task(j) for j in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(payload,)) as ex:
        return list(ex.map(task, items, chunksize=chunk))


def spectral_density(k, data: InitialData, profile: VortexProfile, grid: RadialGrid,
                     eps_ladder=(0.08, 0.04, 0.02), w_index=None, method: str = "plemelj",
                     eps_mode: str = "relative", degree: int = 2, estimate_error: bool = True,
                     workers: int | None = 1, tol: float = 1e-3) -> SpectralDensityTable:
    """Assemble ``Gamma_k(v_i, w_j)`` for ``w_j`` on a subset of the grid nodes.

    ``method="plemelj"`` solves the limit problem directly. With
    ``estimate_error`` the same problem is solved on the half-resolution grid,
    the difference is reported as an error estimate and used for a Richardson
    correction of the stored column.
    ``method="ladder"`` extrapolates finite-eps solves; ``eps_mode="relative"``
    scales the ladder by ``|B'(w)|`` so that the critical layer width is
    uniform in units of the grid.
    """
    k = abs(int(k))
    if data.k != k and data.k != -k:
        raise ValueError("data mode does not match k")
    ladder = tuple(float(e) for e in eps_ladder)
    if len(ladder) < 3:
        raise ValueError("eps_ladder needs at least 3 entries")
    if any(b >= a for a, b in zip(ladder, ladder[1:])) or min(ladder) <= 0:
        raise ValueError("eps_ladder must be positive and strictly decreasing")
    w_index = default_w_index(grid) if w_index is None else np.asarray(w_index, dtype=int)
    n_w = len(w_index)
    Gamma = np.empty((n_w, grid.n))
    frakF = np.empty(n_w)
    err = np.full(n_w, np.nan)
    if method == "plemelj":
        payload = {"fine": PlemeljAssembler(k, data, profile, grid.v)}
        if estimate_error:
            payload["coarse"] = {par: PlemeljAssembler(k, data, profile, grid.v[par::2]) for par in (0, 1)}
        results = _run_map(_plemelj_task, list(map(int, w_index)), payload, workers)
        for c, (col, est) in enumerate(results):
            Gamma[c] = 2 * col.imag
            frakF[c] = col[w_index[c]].real
            err[c] = est
        if estimate_error and np.any(np.isnan(err)) and np.any(~np.isnan(err)):
            good = ~np.isnan(err)
            err = np.interp(np.arange(n_w), np.flatnonzero(good), err[good])
    elif method == "ladder":
        if eps_mode not in ("relative", "absolute"):
            raise ValueError("eps_mode must be 'relative' or 'absolute'")
        payload = dict(k=k, data=data, profile=profile, grid=grid, ladder=ladder,
                       mode=eps_mode, degree=degree)
        results = _run_map(_ladder_task, list(map(int, w_index)), payload, workers)
        for c, (lim, est, re_diag) in enumerate(results):
            Gamma[c] = lim
            err[c] = est
            frakF[c] = re_diag
    else:
        raise ValueError(f"unknown method {method!r}")
    jump = np.array([jump_from_column(Gamma[c], int(j), grid.h) for c, j in enumerate(w_index)])
    flagged = np.nan_to_num(err, nan=0.0) > tol
    meta = {"k": k, "method": method, "n": grid.n, "v_min": grid.v_min, "v_max": grid.v_max,
            "eps_ladder": ",".join(repr(e) for e in ladder) if method == "ladder" else "",
            "eps_mode": eps_mode if method == "ladder" else "",
            "max_err_est": float(np.nanmax(err)) if np.any(~np.isnan(err)) else float("nan"),
            "n_flagged": int(np.sum(flagged))}
    return SpectralDensityTable(k, grid.v, w_index, Gamma, jump, frakF, err, method,
                                ladder if method == "ladder" else (), flagged, meta)


def write_table_csv(path, table: SpectralDensityTable, v_stride: int = 1) -> None:
    """Long format ``w, v, Gamma`` plus a ``.meta`` key-value sidecar."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["w", "v", "Gamma"])
        vs = table.v[::v_stride]
        for c, w in enumerate(table.w):
            for vi, gval in zip(vs, table.Gamma[c, ::v_stride]):
                wr.writerow([repr(float(w)), repr(float(vi)), repr(float(gval))])
    with open(str(path) + ".meta", "w") as fh:
        for key in sorted(table.meta):
            fh.write(f"{key} = {table.meta[key]}\n")
        fh.write("err_est = " + ",".join(f"{e:.3e}" for e in table.err_est) + "\n")


def write_matrix_csv(path, table: SpectralDensityTable, v_stride: int = 8, w_stride: int = 1) -> None:
    """Heatmap matrix: first row holds the v values, first column the w values."""
    vs = table.v[::v_stride]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["w\\v"] + [f"{x:.6g}" for x in vs])
        for c in range(0, len(table.w), w_stride):
            wr.writerow([f"{table.w[c]:.6g}"] + [repr(float(x)) for x in table.Gamma[c, ::v_stride]])


# --- explicit k = 1 density ----------------------------------------------------

def _cum_int(f, h):
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (f[1:] + f[:-1]))])
    df = np.gradient(f, h, edge_order=2)
    return cum - h * h / 12.0 * (df - df[0])


def k1_inner_integral(data: InitialData, grid: RadialGrid) -> np.ndarray:
    """``int_{-inf}^{w} f_0(rho) e^{3 rho} d rho`` at every node.

    For ``w > 0`` the value is taken as ``-int_w^inf``, which is the same number
    for orthogonal data but is free of cancellation.
    """
    f = data.omega0 * np.exp(3 * grid.v)
    left = _cum_int(f, grid.h)
    right = _cum_int(f[::-1], grid.h)[::-1]
    return np.where(grid.v <= 0, left, -right)


def k1_explicit_density(v, w_index, data: InitialData, profile: VortexProfile,
                        grid: RadialGrid) -> np.ndarray:
    """Closed-form ``Gamma_1(v, w)`` for ``w`` at grid nodes ``w_index``.

    Returns an array of shape ``(len(w_index), len(v))``.
    """
    if abs(data.k) != 1:
        raise ValueError("the explicit density exists for k = 1 only")
    v = np.atleast_1d(np.asarray(v, dtype=float))
    w_index = np.atleast_1d(np.asarray(w_index, dtype=int))
    inner = k1_inner_integral(data, grid)
    w = grid.v[w_index][:, None]
    dB = profile.dB(w)
    bracket = data.omega0[w_index][:, None] - np.exp(-w) * profile.D(w) / dB * inner[w_index][:, None]
    out = 2 * np.pi * profile.B_minus(v[None, :], w) / dB**2 * np.exp(v[None, :] + w) * bracket
    return np.where(v[None, :] < w, out, 0.0)


# --- representation formula ------------------------------------------------------

class PhaseResolutionError(ValueError):
    """The w-grid is too coarse for the oscillation ``e^{-ikB(w)t}``."""


def phase_guard(k, table: SpectralDensityTable, profile: VortexProfile, t, limit: float = 0.5) -> None:
    ph = abs(k) * float(np.max(np.abs(profile.dB(table.w)))) * abs(t) * table.h_w
    if ph > limit:
        raise PhaseResolutionError(f"w-grid does not resolve the phase at t={t}: k max|B'| t h_w = {ph:.3f} > {limit}")


def trapezoid_w_weights(table: SpectralDensityTable) -> np.ndarray:
    wts = np.full(len(table.w), table.h_w)
    wts[0] = wts[-1] = table.h_w / 2
    return wts


def stream_via_spectral(t, k, table: SpectralDensityTable, profile: VortexProfile,
                        grid: RadialGrid, phase_limit: float = 0.5):
    """Representation formula ``phi(t, v) = -(1/2pi) int e^{-ikB(w)t} Gamma(v, w) B'(w) dw``.

    Returns ``(phi, f)`` with ``f = -e^{-2v}(k^2 - d_v^2) phi`` by centered differences.
    The diagonal kink of ``Gamma`` only lands on the right nodes when every grid
    node is a ``w`` node, so ``f`` is ``None`` for strided tables.
    """
    phase_guard(k, table, profile, t, phase_limit)
    w = table.w
    coef = -np.exp(-1j * k * profile.B(w) * t) * profile.dB(w) * trapezoid_w_weights(table) / (2 * np.pi)
    phi = coef @ table.Gamma
    if len(table.w) < 2 or not np.array_equal(np.diff(table.w_index), np.ones(len(table.w) - 1, int)):
        return phi, None
    h = grid.h
    f = np.zeros(grid.n, dtype=complex)
    f[1:-1] = -(k * k * phi[1:-1] - (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / h**2) / grid.r[1:-1] ** 2
    f[0], f[-1] = f[1], f[-2]
    return phi, f


# --- the discretized operator ------------------------------------------------------

def operator_matrix(k, profile: VortexProfile, grid: RadialGrid, max_n: int = 4097) -> np.ndarray:
    """Dense ``M = diag(b) + diag(d) G W`` representing ``L_k`` on the grid samples."""
    if grid.n > max_n:
        raise MemoryError(f"dense operator limited to n <= {max_n}")
    M = profile.d(grid.r)[:, None] * green_matrix(k, grid)
    M[np.diag_indices(grid.n)] += profile.b(grid.r)
    return M.astype(complex)


def operator_spectrum(k, profile: VortexProfile, grid: RadialGrid, symmetric: bool = True) -> np.ndarray:
    """Eigenvalues of the discretized ``L_k``.

    With ``E = diag(w_rdr / (-d))`` the product ``E M`` is symmetric, so ``M`` is
    similar to a real symmetric matrix; by default the eigenvalues are taken from
    that symmetric form, otherwise from the dense general solver.
    """
    if not symmetric:
        return np.linalg.eigvals(operator_matrix(k, profile, grid))
    b, d, wr = profile.b(grid.r), profile.d(grid.r), grid.w_rdr
    a = np.sqrt(wr * (-d))
    sym = np.diag(b) - a[:, None] * green_kernel_sym(k, grid) * a[None, :]
    return eigvalsh(sym)


def green_kernel_sym(k, grid: RadialGrid) -> np.ndarray:
    """Symmetric kernel ``G_k(r, rho) / rho``."""
    m = abs(int(k))
    r = grid.r
    ratio = np.minimum(r[:, None], r[None, :]) / np.maximum(r[:, None], r[None, :])
    return ratio**m / (2 * m)

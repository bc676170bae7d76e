"""Time-domain integration of a single azimuthal mode.

The unknown is the unwound profile ``g = e^{ikBt} omega``, which obeys
``d_t g = ik d(r) e^{ikBt} psi[e^{-ikBt} g]`` with ``psi`` the stream function of
the vorticity. Fixed-step RK4 keeps runs bit-reproducible.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from . import cutoffs
from .elliptic import apply_laplacian, laplacian_bands
from .grid import RadialGrid
from .profile import VortexProfile


class InstabilityError(RuntimeError):
    """Raised when the profile norm jumps by more than 1% in a single step."""


@dataclass(frozen=True)
class ModeState:
    k: int
    t: float
    g: np.ndarray

    @property
    def omega(self) -> np.ndarray:
        return self.g * np.exp(-1j * self.k * self._B * self.t)

    # B(v) samples are attached by the constructor helpers below
    _B: np.ndarray = field(default=None, repr=False, compare=False)


def make_state(k, omega, profile: VortexProfile, grid: RadialGrid, t: float = 0.0) -> ModeState:
    Bv = profile.B(grid.v)
    omega = np.asarray(omega, dtype=complex)
    return ModeState(int(k), float(t), omega * np.exp(1j * k * Bv * t), Bv)


@dataclass
class InitialData:
    k: int
    shape: str
    sigma_k: float
    F0k: np.ndarray
    omega0: np.ndarray
    gamma: float | None = None  # k = 1 projection coefficient
    F0k_fn: object = field(default=None, repr=False)  # callable of v, used by the spectral solver
    c_star: float = -6.0

    def F_of_v(self, v):
        return self.F0k_fn(np.asarray(v, dtype=float))


def basic_datum(k, r):
    return r ** (abs(k) + 2) * (2 + r * r) ** (-(abs(k) + 6))


def _r2_moment(f, grid):
    return grid.integrate(f * grid.r, "rdr")


def make_initial_data(k, shape: str, grid: RadialGrid, profile: VortexProfile,
                      sigma_k: float = 0.0, custom=None) -> InitialData:
    """Build ``omega_0k`` and the regular part ``F_0k``.

    ``basic`` is ``r^{k+2} (2+r^2)^{-(k+6)}``. ``sigma`` adds the core piece
    ``(sigma_k/c_*) D(v) e^{kv} Phi_0(v)``. ``custom`` takes a callable of ``r`` or
    samples. For ``k = 1`` the result is projected so that its ``r^2`` moment vanishes.
    """
    if int(k) != k or k == 0:
        raise ValueError("k must be a nonzero integer")
    k = int(k)
    m = abs(k)
    r, v = grid.r, grid.v
    gamma = None
    core = np.zeros(grid.n)
    if shape in ("basic", "sigma"):
        base = basic_datum(k, r)
        if shape == "sigma":
            core = sigma_k / profile.c_star * profile.D(v) * np.exp(m * v) * cutoffs.phi0(v)
        else:
            sigma_k = 0.0
        omega = base + core
        if m == 1:
            p2 = r**3 * (2 + r * r) ** -8
            gamma = _r2_moment(omega, grid) / _r2_moment(p2, grid)
            omega = omega - gamma * p2

        def F_fn(x, _g=gamma):
            rr = np.exp(x)
            out = basic_datum(k, rr)
            if _g is not None:
                out = out - _g * rr**3 * (2 + rr * rr) ** -8
            return out
    elif shape == "custom":
        if custom is None:
            raise ValueError("custom shape needs a callable or samples")
        omega = np.asarray(custom(r) if callable(custom) else custom, dtype=float)
        if omega.shape != (grid.n,):
            raise ValueError("custom samples must match the grid")
        scale = np.max(np.abs(omega))
        if scale > 0 and max(abs(omega[0]), abs(omega[-1])) >= 1e-8 * scale:
            raise ValueError("custom data must decay at both grid ends")
        sigma_k = 0.0
        if callable(custom):
            def F_fn(x):
                return custom(np.exp(x))
        else:
            F_fn = CubicSpline(v, omega)
    else:
        raise ValueError(f"unknown data shape {shape!r}")
    return InitialData(k, shape, float(sigma_k), omega - core, omega, gamma, F_fn, profile.c_star)


def data_envelope_constants(data: InitialData, grid: RadialGrid, j_max: int = 2,
                            stride: int = 8) -> list[float]:
    """Fitted ``M_j`` in ``|d_v^j F| <= M_j (j!)^2 e^{(k+2)v} / (1 + e^{(2k+10)v})``."""
    m = abs(data.k)
    v = grid.v[::stride]
    h = v[1] - v[0]
    env = np.exp((m + 2) * v) / (1 + np.exp((2 * m + 10) * v))
    f = data.F0k[::stride].astype(float)
    out = []
    fact = 1
    for j in range(j_max + 1):
        if j:
            fact *= j
        inner = slice(j, len(v) - j)
        out.append(float(np.max(np.abs(f[inner]) / env[inner]) / fact**2))
        df = np.full_like(f, np.nan)
        df[1:-1] = (f[2:] - f[:-2]) / (2 * h)
        f = df
    return out


class ModeOperator:
    """Precomputed coefficients for the right-hand side of the profile equation."""

    def __init__(self, k, profile: VortexProfile, grid: RadialGrid, coupling: bool = True):
        self.k = int(k)
        self.grid = grid
        self.B = profile.B(grid.v)
        self.d = profile.d(grid.r) if coupling else np.zeros(grid.n)
        self.ab = laplacian_bands(k, grid)
        self.r2 = grid.r**2

    def stream(self, omega):
        return solve_banded((1, 1), self.ab, self.r2 * omega, check_finite=False)

    def rhs(self, t, g):
        ph = np.exp(1j * self.k * self.B * t)
        psi = self.stream(g / ph)
        return 1j * self.k * self.d * ph * psi


def step(state: ModeState, dt: float, op: ModeOperator, dt_max: float | None = None) -> ModeState:
    """One classical RK4 step of the profile equation."""
    if dt_max is not None and dt > dt_max * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds dt_max={dt_max}")
    t, g = state.t, state.g
    k1 = op.rhs(t, g)
    k2 = op.rhs(t + dt / 2, g + dt / 2 * k1)
    k3 = op.rhs(t + dt / 2, g + dt / 2 * k2)
    k4 = op.rhs(t + dt, g + dt * k3)
    g_new = g + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    n0 = np.linalg.norm(g)
    n1 = np.linalg.norm(g_new)
    if not np.isfinite(n1) or (n0 > 0 and n1 > 1.01 * n0):
        raise InstabilityError(
            f"profile norm grew from {n0:.6e} to {n1:.6e} in one step at t={t:.6g} (dt={dt})")
    return replace(state, t=t + dt, g=g_new)


def default_dt(k, profile: VortexProfile, factor: float = 0.5) -> float:
    return factor / (abs(k) * profile.b0 * 16)


def conserved_energy(state_or_omega, profile: VortexProfile, grid: RadialGrid) -> float:
    """``E = int |omega|^2 / (-d) r dr``."""
    om = state_or_omega.g if isinstance(state_or_omega, ModeState) else state_or_omega
    d = profile.d(grid.r)
    if np.any(d >= 0):
        raise ValueError("energy needs d(r) < 0 on the grid")
    return float(grid.integrate(np.abs(om) ** 2 / (-d), "rdr"))


def default_eta(k, grid: RadialGrid, r_in: float = 0.125, r_out: float = 4.0) -> np.ndarray:
    """``eta_k = r^k varrho(r)``."""
    return grid.r ** abs(k) * cutoffs.varrho(grid.r, 0, r_in, r_out)


def check_eta(eta, k, grid: RadialGrid) -> None:
    eta = np.asarray(eta)
    head = np.abs(eta[:16])
    if np.all(head > 0):
        slope = np.polyfit(grid.v[:16], np.log(head), 1)[0]
        if slope < abs(k) - 0.1:
            raise ValueError(f"test function vanishes like r^{slope:.2f} at the core, need r^{abs(k)}")
    scale = np.max(np.abs(eta))
    if scale > 0 and abs(eta[-1]) > 1e-8 * scale:
        warnings.warn("test function support reaches the outer grid end", RuntimeWarning, stacklevel=3)


def observable(state_or_omega, eta, grid: RadialGrid, k: int | None = None) -> complex:
    """``int omega(r) eta(r) r dr``."""
    om = state_or_omega.omega if isinstance(state_or_omega, ModeState) else np.asarray(state_or_omega)
    if k is None and isinstance(state_or_omega, ModeState):
        k = state_or_omega.k
    if k is not None:
        check_eta(eta, k, grid)
    return complex(grid.integrate(om * eta, "rdr"))


def lift_weight(k, grid: RadialGrid, varrho=None) -> np.ndarray:
    """Mode form of ``Delta[r^k varrho(r)]`` applied with the discrete elliptic stencil.

    The stencil is exact on ``r^k``, so the weight vanishes up to rounding where
    ``varrho = 1``.
    """
    rho = cutoffs.varrho(grid.r) if varrho is None else np.asarray(
        varrho(grid.r) if callable(varrho) else varrho, dtype=float)
    return apply_laplacian(grid.r ** abs(k) * rho, k, grid) / grid.r**2


def observable_via_stream(psi, k, grid: RadialGrid, varrho=None) -> complex:
    """``int psi H_k r dr`` with ``H_k`` from :func:`lift_weight`; equals
    ``int omega r^k varrho r dr`` when ``psi`` solves the discrete elliptic problem."""
    return complex(grid.integrate(np.asarray(psi) * lift_weight(k, grid, varrho), "rdr"))


@dataclass
class Trajectory:
    k: int
    times: np.ndarray
    energy: np.ndarray
    observables: dict[str, np.ndarray]
    snapshots: dict[float, np.ndarray]
    final: ModeState


def evolve(data: InitialData, profile: VortexProfile, grid: RadialGrid, t_max: float,
           dt: float | None = None, snapshot_times=(), observables=None,
           record_every: int = 1, coupling: bool = True) -> Trajectory:
    """Integrate from ``t = 0`` to ``t_max`` with fixed steps.

    ``dt`` is shrunk slightly so that an integer number of steps lands on
    ``t_max`` and on every snapshot time.
    """
    k = data.k
    op = ModeOperator(k, profile, grid, coupling)
    state = make_state(k, data.omega0, profile, grid)
    dt0 = default_dt(k, profile) if dt is None else float(dt)
    marks = sorted({float(s) for s in snapshot_times if 0 <= s <= t_max} | {float(t_max)})
    observables = observables or {}
    for eta in observables.values():
        check_eta(eta, k, grid)

    times, energy = [0.0], [conserved_energy(state, profile, grid)]
    obs = {name: [observable(state, eta, grid)] for name, eta in observables.items()}
    snaps = {}
    if 0.0 in marks:
        snaps[0.0] = state.omega
    t_prev = 0.0
    count = 0
    for mark in marks:
        span = mark - t_prev
        if span <= 0:
            continue
        nsteps = max(1, int(np.ceil(span / dt0 - 1e-9)))
        h = span / nsteps
        for i in range(nsteps):
            state = step(state, h, op)
            count += 1
            if i == nsteps - 1:
                state = replace(state, t=mark)
            if count % record_every == 0 or i == nsteps - 1:
                times.append(state.t)
                energy.append(conserved_energy(state, profile, grid))
                om = state.omega
                for name, eta in observables.items():
                    obs[name].append(complex(grid.integrate(om * eta, "rdr")))
        t_prev = mark
        if mark in snapshot_times or mark == t_max:
            snaps[mark] = state.omega
    return Trajectory(k, np.array(times), np.array(energy),
                      {kk: np.array(vv) for kk, vv in obs.items()}, snaps, state)


def write_trajectory_csv(path, traj: Trajectory, grid: RadialGrid) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "v", "Re_omega", "Im_omega"])
        for t in sorted(traj.snapshots):
            om = traj.snapshots[t]
            for vi, o in zip(grid.v, om):
                wr.writerow([repr(float(t)), repr(float(vi)), repr(float(o.real)), repr(float(o.imag))])


def write_summary_csv(path, traj: Trajectory, name: str) -> None:
    vals = traj.observables[name]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "E", "Re_I", "Im_I"])
        for t, e, val in zip(traj.times, traj.energy, vals):
            wr.writerow([repr(float(t)), repr(float(e)), repr(float(val.real)), repr(float(val.imag))])

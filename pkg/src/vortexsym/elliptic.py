"""Inversion of the mode Laplacian ``Delta_k = d_rr + d_r / r - k^2 / r^2``.

Two independent solvers are provided. ``stream_via_green`` sums the Green's
function against the vorticity, ``stream_via_tridiag`` solves the
finite-difference problem ``(d_v^2 - k^2) phi = e^{2v} omega`` in ``v = log r``.
The sign convention is ``psi = -int G_k(r, rho) omega(rho) d rho`` so that
``Delta_k psi = omega``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .grid import RadialGrid


def _check_k(k):
    if int(k) != k or k == 0:
        raise ValueError(f"mode number must be a nonzero integer, got {k}")
    return abs(int(k))


def green_kernel(k, r, rho):
    """``G_k(r, rho) = rho / (2|k|) * (r_< / r_>)^{|k|}``."""
    m = _check_k(k)
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(r <= 0) or np.any(rho <= 0):
        raise ValueError("green_kernel needs r, rho > 0")
    ratio = np.minimum(r, rho) / np.maximum(r, rho)
    return rho / (2 * m) * ratio**m


def green_matrix(k, grid: RadialGrid, rows=None) -> np.ndarray:
    """Matrix ``G_k(r_i, r_j) * w_dr[j]`` so that ``M @ f`` approximates ``int G_k f d rho``."""
    r = grid.r if rows is None else grid.r[rows]
    return green_kernel(k, r[:, None], grid.r[None, :]) * grid.w_dr[None, :]


@dataclass
class EllipticSolve:
    k: int
    omega: np.ndarray
    psi: np.ndarray
    method: str
    residual: float


def _check_decay(omega, name="omega"):
    scale = np.max(np.abs(omega))
    if scale > 0 and max(abs(omega[0]), abs(omega[-1])) >= 1e-8 * scale:
        warnings.warn(f"{name} does not decay at the grid ends; truncation error may dominate",
                      RuntimeWarning, stacklevel=3)


def stream_via_green(omega, k, grid: RadialGrid, block: int = 512) -> np.ndarray:
    """``psi_i = -sum_j G_k(r_i, r_j) omega_j w_dr[j]``, evaluated in row blocks (O(n^2))."""
    _check_k(k)
    om = np.asarray(omega)
    _check_decay(om)
    out = np.empty(grid.n, dtype=np.result_type(om, float))
    for s in range(0, grid.n, block):
        rows = np.arange(s, min(s + block, grid.n))
        out[rows] = -(green_matrix(k, grid, rows) @ om)
    return out


def fitted_kappa(k, h):
    """Exponentially fitted replacement of ``k^2``: exact for ``e^{+-kv}``."""
    return (2 * np.cosh(k * h) - 2) / (h * h)


def laplacian_bands(k, grid: RadialGrid) -> np.ndarray:
    """Banded form (for ``solve_banded``) of the discrete ``d_v^2 - k^2`` with Robin ends.

    The boundary ghost values are ``phi_{-1} = e^{-|k|h} phi_0`` and
    ``phi_n = e^{-|k|h} phi_{n-1}``, the discrete form of ``d_v phi = |k| phi`` on the
    left and ``d_v phi = -|k| phi`` on the right; both are exact for the decaying
    homogeneous solutions, as is the interior stencil.
    """
    m = _check_k(k)
    h = grid.h
    n = grid.n
    ab = np.zeros((3, n))
    ab[0, 1:] = 1 / h**2
    ab[2, :-1] = 1 / h**2
    ab[1, :] = -2 / h**2 - fitted_kappa(m, h)
    ab[1, 0] += np.exp(-m * h) / h**2
    ab[1, -1] += np.exp(-m * h) / h**2
    # strict diagonal dominance guarantees solvability
    assert np.all(np.abs(ab[1]) > np.abs(ab[0]) + np.abs(ab[2]))
    return ab


def apply_laplacian(phi, k, grid: RadialGrid) -> np.ndarray:
    """Discrete ``(d_v^2 - k^2) phi`` with the same stencil and boundary rows as the solver."""
    ab = laplacian_bands(k, grid)
    phi = np.asarray(phi)
    out = ab[1] * phi
    out[:-1] += ab[0, 1:] * phi[1:]
    out[1:] += ab[2, :-1] * phi[:-1]
    return out


def mode_laplacian(psi, k, grid: RadialGrid) -> np.ndarray:
    """Discrete ``Delta_k psi = e^{-2v}(d_v^2 - k^2) psi``."""
    return apply_laplacian(psi, k, grid) / grid.r**2


def stream_via_tridiag(omega, k, grid: RadialGrid) -> np.ndarray:
    """Solve ``(d_v^2 - k^2) phi = e^{2v} omega`` with Robin ends; returns ``psi = phi``."""
    om = np.asarray(omega)
    _check_decay(om)
    ab = laplacian_bands(k, grid)
    return solve_banded((1, 1), ab, grid.r**2 * om)


def residual_norm(psi, omega, k, grid: RadialGrid) -> float:
    """Interior max-norm of ``Delta_k psi - omega`` (standard stencil) relative to ``max|omega|``."""
    m = _check_k(k)
    h = grid.h
    psi = np.asarray(psi)
    lap = (psi[2:] - 2 * psi[1:-1] + psi[:-2]) / h**2 - m * m * psi[1:-1]
    res = lap / grid.r[1:-1] ** 2 - np.asarray(omega)[1:-1]
    scale = np.max(np.abs(omega))
    return float(np.max(np.abs(res)) / scale) if scale > 0 else float(np.max(np.abs(res)))


def solve(omega, k, grid: RadialGrid, method: str = "tridiag") -> EllipticSolve:
    if method == "tridiag":
        psi = stream_via_tridiag(omega, k, grid)
    elif method == "green":
        psi = stream_via_green(omega, k, grid)
    else:
        raise ValueError(f"unknown method {method!r}")
    return EllipticSolve(abs(int(k)), np.asarray(omega), psi, method,
                         residual_norm(psi, omega, k, grid))


def write_stream_csv(path, psi, grid: RadialGrid) -> None:
    psi = np.asarray(psi, dtype=complex)
    with open(path, "w") as fh:
        fh.write("v,Re_psi,Im_psi\n")
        for vi, p in zip(grid.v, psi):
            fh.write(f"{vi!r},{p.real!r},{p.imag!r}\n")

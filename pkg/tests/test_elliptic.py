import warnings

import numpy as np
import pytest
import sympy as sp

from vortexsym.elliptic import (
    green_kernel, green_matrix, mode_laplacian, residual_norm, solve, stream_via_green,
    stream_via_tridiag, write_stream_csv,
)
from vortexsym.grid import make_grid


def test_green_kernel_values():
    assert green_kernel(1, 1.0, 2.0) == pytest.approx(0.5)
    assert green_kernel(2, 2.0, 1.0) == pytest.approx(1 / 16)
    assert green_kernel(-3, 1.0, 1.0) == pytest.approx(1 / 6)
    with pytest.raises(ValueError):
        green_kernel(0, 1.0, 1.0)
    with pytest.raises(ValueError):
        green_kernel(1, 0.0, 1.0)


def test_manufactured_source_is_symbolic_laplacian():
    r, k = sp.symbols("r k", positive=True)
    phi = r**k * sp.exp(-r**2)
    lap = sp.diff(phi, r, 2) + sp.diff(phi, r) / r - k**2 * phi / r**2
    assert sp.simplify(lap - 4 * (r**2 - k - 1) * phi) == 0


@pytest.mark.parametrize("method", ["tridiag", "green"])
def test_zero_in_zero_out(method, small_grid):
    res = solve(np.zeros(small_grid.n), 2, small_grid, method)
    assert np.all(res.psi == 0)


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("method", ["tridiag", "green"])
def test_manufactured_solution_sign_and_order(k, method):
    errs = []
    for n in (1025, 2049):
        g = make_grid(-9, 9, n)
        exact = g.r**k * np.exp(-g.r**2)
        omega = 4 * (g.r**2 - k - 1) * exact
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            psi = solve(omega, k, g, method).psi
        errs.append(np.max(np.abs(psi - exact)))
    assert errs[0] < 1e-3 * np.max(exact)
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_point_mass(small_grid):
    g = small_grid
    j = g.index_of(0.0)
    omega = np.zeros(g.n)
    omega[j] = 1.0 / g.w_rdr[j]  # unit r dr mass at r = 1
    psi = stream_via_green(omega, 1, g)
    expected = -green_kernel(1, g.r, 1.0) / 1.0
    assert np.allclose(psi, expected, rtol=1e-12)


def test_negativity(rng, small_grid):
    g = small_grid
    for _ in range(5):
        c, s = rng.uniform(-2, 2), rng.uniform(0.3, 1.0)
        omega = np.exp(-((g.v - c) / s) ** 2)
        for method in ("tridiag", "green"):
            assert np.all(solve(omega, rng.integers(1, 4), g, method).psi <= 1e-15)


def _random_bumps(rng, g, count=10):
    out = []
    for _ in range(count):
        c, s = rng.uniform(-3, 3), rng.uniform(0.3, 1.2)
        out.append(np.exp(-((g.v - c) / s) ** 2) * rng.uniform(0.5, 2.0))
    return out


def test_cross_method_difference_scales_like_h2(rng):
    ratios = []
    for omega_fn in range(3):
        diffs = []
        for n in (1025, 2049, 4097):
            g = make_grid(-9, 9, n)
            rr = np.random.default_rng(100 + omega_fn)
            om = _random_bumps(rr, g, 1)[0]
            a, b = stream_via_tridiag(om, 2, g), stream_via_green(om, 2, g)
            diffs.append(np.max(np.abs(a - b)) / np.max(np.abs(b)))
        ratios += [diffs[0] / diffs[1], diffs[1] / diffs[2]]
    assert all(3.5 <= q <= 4.5 for q in ratios)


def test_cross_method_constant_uniform(rng, grid):
    consts = []
    for om in _random_bumps(rng, grid, 10):
        a, b = stream_via_tridiag(om, 1, grid), stream_via_green(om, 1, grid)
        consts.append(np.max(np.abs(a - b)) / grid.h**2 / np.max(np.abs(b)))
    assert max(consts) < 1.0


@pytest.mark.filterwarnings("ignore:omega does not decay")
@pytest.mark.xfail(strict=True, reason="the two O(h^2) solvers differ by k^2 h^2 / 6 relative, 1.3e-5 for k=2 on the default grid")
def test_cross_method_agreement_to_1e6(grid):
    om = grid.r**2 * (2 + grid.r**2) ** -8
    a, b = stream_via_tridiag(om, 2, grid), stream_via_green(om, 2, grid)
    assert np.max(np.abs(a - b)) <= 1e-6 * np.max(np.abs(b))


@pytest.mark.filterwarnings("ignore:omega does not decay")
def test_residual_and_laplacian(small_grid):
    g = small_grid
    om = g.r**2 * (2 + g.r**2) ** -8
    res = solve(om, 2, g)
    assert res.residual < 1e-3
    lap = mode_laplacian(res.psi, 2, g)
    assert np.allclose(lap, om, atol=1e-12 * np.max(np.abs(om)))


def test_decay_warning(small_grid):
    with pytest.warns(RuntimeWarning):
        stream_via_tridiag(np.ones(small_grid.n), 1, small_grid)


def test_green_matrix_shape(small_grid):
    M = green_matrix(1, small_grid, rows=np.arange(5))
    assert M.shape == (5, small_grid.n)


def test_stream_csv(tmp_path, small_grid):
    p = tmp_path / "psi.csv"
    write_stream_csv(p, np.ones(small_grid.n), small_grid)
    lines = p.read_text().splitlines()
    assert lines[0] == "v,Re_psi,Im_psi" and len(lines) == small_grid.n + 1

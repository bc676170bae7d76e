import numpy as np
import pytest

from vortexsym.elliptic import stream_via_tridiag
from vortexsym.evolution import (
    InstabilityError, ModeOperator, check_eta, conserved_energy, data_envelope_constants,
    default_dt, default_eta, evolve, lift_weight, make_initial_data, make_state, observable,
    observable_via_stream, step, write_summary_csv, write_trajectory_csv,
)


def test_basic_datum_value(data, grid):
    d = data(2)
    i = grid.index_of(0.0)
    assert d.omega0[i] == pytest.approx(1 / 6561, rel=1e-14)


def test_k1_projection_coefficient(data, grid):
    d = data(1)
    assert d.gamma == pytest.approx(3.5, abs=1e-10)
    moment = grid.integrate(d.omega0 * grid.r, "rdr")
    assert abs(moment) < 1e-10 * grid.integrate(np.abs(d.omega0) * grid.r, "rdr")


def test_rejects_bad_data(profile, grid):
    with pytest.raises(ValueError):
        make_initial_data(0, "basic", grid, profile)
    with pytest.raises(ValueError):
        make_initial_data(2, "custom", grid, profile, custom=lambda r: np.ones_like(r))
    with pytest.raises(ValueError):
        make_initial_data(2, "triangle", grid, profile)


def test_sigma_data_adds_core_piece(profile, grid):
    d = make_initial_data(2, "sigma", grid, profile, sigma_k=0.3)
    assert not np.allclose(d.omega0, d.F0k)
    far = grid.v > -1
    assert np.allclose(d.omega0[far], d.F0k[far])


def test_data_envelope(data, grid):
    consts = data_envelope_constants(data(2), grid)
    assert all(np.isfinite(c) and c > 0 for c in consts)


def test_pure_transport(profile, grid, data):
    d = data(2)
    tr = evolve(d, profile, grid, 10.0, coupling=False)
    expected = np.exp(-2j * profile.B(grid.v) * 10.0) * d.omega0
    assert np.max(np.abs(tr.final.omega - expected)) <= 1e-10 * np.max(np.abs(d.omega0))


def test_unimodular_factor(profile, grid, data):
    st = make_state(2, data(2).omega0, profile, grid, t=3.7)
    assert np.max(np.abs(np.abs(st.g) - np.abs(st.omega))) < 1e-15


def test_step_doubling_fifth_order(profile, small_grid):
    g = small_grid
    d = make_initial_data(2, "basic", g, profile)
    op = ModeOperator(2, profile, g)
    s0 = make_state(2, d.omega0, profile, g)
    diffs = []
    for dt in (4.0, 2.0):
        one = step(s0, dt, op)
        two = step(step(s0, dt / 2, op), dt / 2, op)
        diffs.append(np.max(np.abs(one.g - two.g)))
    assert diffs[0] / diffs[1] > 25  # 2^5 = 32 asymptotically


def test_dt_guard(profile, small_grid, data):
    op = ModeOperator(2, profile, small_grid)
    s0 = make_state(2, np.zeros(small_grid.n), profile, small_grid)
    with pytest.raises(ValueError):
        step(s0, 1.0, op, dt_max=0.5)


def test_instability_detector(profile, small_grid):
    g = small_grid
    d = make_initial_data(2, "basic", g, profile)
    op = ModeOperator(2, profile, g)
    op.d = op.d * 1e6  # artificially stiff coupling
    with pytest.raises(InstabilityError):
        step(make_state(2, d.omega0, profile, g), 1.0, op)


def test_energy_drift_k2_t10(profile, grid, data):
    tr = evolve(data(2), profile, grid, 10.0, dt=default_dt(2, profile, 0.05 * 16 * profile.b0))
    assert np.max(np.abs(tr.energy / tr.energy[0] - 1)) < 1e-8


def test_energy_basic_properties(profile, grid, data):
    om = data(2).omega0
    assert conserved_energy(np.zeros(grid.n), profile, grid) == 0
    assert conserved_energy(2 * om, profile, grid) == pytest.approx(4 * conserved_energy(om, profile, grid))


def test_k1_moment_and_orthogonality(profile, grid, data):
    from vortexsym import cutoffs
    d = data(1)
    wide = grid.r * cutoffs.varrho(grid.r, 0, 100.0, 2000.0)
    tr = evolve(d, profile, grid, 50.0, dt=0.05, observables={"moment": wide})
    base = grid.integrate(np.abs(d.omega0) * grid.r, "rdr")
    m = tr.observables["moment"]
    assert np.max(np.abs(m - m[0])) <= 1e-6 * base
    assert abs(grid.integrate(tr.final.omega * grid.r, "rdr")) <= 1e-6 * base


def test_observable_basics(profile, grid, data):
    d = data(2)
    eta = default_eta(2, grid)
    assert observable(np.zeros(grid.n), eta, grid, 2) == 0
    chi = (grid.r < 3).astype(float)
    val = observable(d.omega0, np.conj(d.omega0) * chi, grid)
    assert val.real > 0 and abs(val.imag) < 1e-18


def test_eta_checks(grid):
    with pytest.raises(ValueError):
        check_eta(grid.r ** 0.5 * (grid.r < 2), 2, grid)
    with pytest.warns(RuntimeWarning):
        check_eta(grid.r**2, 2, grid)


@pytest.mark.filterwarnings("ignore:omega does not decay")
@pytest.mark.parametrize("k", [1, 2, 3])
def test_harmonic_lift(k, profile, grid, data):
    d = data(k)
    tr = evolve(d, profile, grid, 5.0, dt=0.05 / k)
    om = tr.final.omega
    psi = stream_via_tridiag(om, k, grid)
    a = observable(om, default_eta(k, grid), grid, k)
    b = observable_via_stream(psi, k, grid)
    assert abs(a - b) <= 1e-8 * abs(a)
    assert observable_via_stream(np.zeros(grid.n), k, grid) == 0


def test_lift_weight_vanishes_in_core(grid):
    H = lift_weight(2, grid)
    core = grid.r <= 0.125
    assert np.max(np.abs(H[core])) < 1e-10 * np.max(np.abs(H))


def test_trajectory_csv(tmp_path, profile, small_grid):
    d = make_initial_data(2, "basic", small_grid, profile)
    tr = evolve(d, profile, small_grid, 1.0, snapshot_times=(0.5,),
                observables={"eta": default_eta(2, small_grid)})
    write_trajectory_csv(tmp_path / "t.csv", tr, small_grid)
    write_summary_csv(tmp_path / "s.csv", tr, "eta")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "t,v,Re_omega,Im_omega"
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "t,E,Re_I,Im_I"

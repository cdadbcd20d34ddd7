"""Time stepping: splitting accuracy, conservation, reversibility, guards."""

import math

import numpy as np
import pytest

from inlslab import evolution as ev
from inlslab.grid import Field, build_grid, gaussian_field, l2_sq, zero_field


def _rel_l2(grid, got, want):
    return math.sqrt(l2_sq(grid, got - want) / l2_sq(grid, want))


def test_config_validation():
    with pytest.raises(ValueError):
        ev.EvolveConfig(dt=0.0, t_end=1.0)
    with pytest.raises(ValueError):
        ev.EvolveConfig(dt=1e-3, t_end=-1.0)
    with pytest.raises(ValueError):
        ev.EvolveConfig(dt=1e-3, t_end=1.0, snapshot_stride=0)
    with pytest.raises(ValueError):
        ev.EvolveConfig(dt=1e-3, t_end=1.0, sponge_strength=-1.0)
    with pytest.raises(ValueError):
        ev.EvolveConfig(dt=1e-3, t_end=1.0, grad_ceiling_factor=0.0)


def test_zero_field_is_fixed_point(params_default, grid_coarse):
    traj = ev.evolve(zero_field(grid_coarse), params_default, ev.EvolveConfig(dt=1e-2, t_end=0.5))
    assert traj.status == "completed"
    assert np.all(traj.snapshots[-1].values == 0)


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_snapshot_times_include_final(params_default, grid_coarse):
    cfg = ev.EvolveConfig(dt=0.1, t_end=1.0, snapshot_stride=3)
    traj = ev.evolve(gaussian_field(grid_coarse, 0.1, 1.0), params_default, cfg)
    assert np.allclose(traj.times, [0.0, 0.3, 0.6, 0.9, 1.0])
    assert len(traj.snapshots) == len(traj.times) == len(traj.records)
    for t, rec in zip(traj.times, traj.records):
        assert rec.t == t


def test_mass_conserved_per_step(params_default, grid_coarse):
    u = gaussian_field(grid_coarse, 0.5, 1.0)
    cfg = ev.EvolveConfig(dt=1e-3, t_end=0.2, snapshot_stride=1)
    traj = ev.evolve(u, params_default, cfg)
    masses = np.array([rec.mass for rec in traj.records])
    assert np.max(np.abs(masses - masses[0])) / masses[0] < 1e-12


def test_linear_flow_matches_spreading_gaussian(params_default, grid_medium):
    # free flow of exp(-r^2/2) is (1+2it)^(-1) exp(-r^2 / (2 (1+2it))) in 2D
    u0 = gaussian_field(grid_medium, 1.0, 1.0)
    t_end = 0.5
    fields = []
    for dt in (2e-3, 1e-3, 5e-4):
        cfg = ev.EvolveConfig(dt=dt, t_end=t_end, snapshot_stride=10**9, nonlinear=False)
        fields.append(ev.evolve(u0, params_default, cfg).snapshots[-1].values)
    z = 1.0 + 2.0j * t_end
    exact = (1.0 / z) * np.exp(-(grid_medium.r**2) / (2.0 * z))
    assert _rel_l2(grid_medium, fields[0], exact) < 5e-4  # spatial floor
    # dt self-differences isolate the O(dt^2) part from the spatial error
    d1 = math.sqrt(l2_sq(grid_medium, fields[0] - fields[1]))
    d2 = math.sqrt(l2_sq(grid_medium, fields[1] - fields[2]))
    assert 3.5 < d1 / d2 < 4.5


def test_soliton_short_horizon(gs_default):
    params, grid, gs = gs_default
    u0 = Field(grid=grid, values=gs.profile.values.astype(complex))
    cfg = ev.EvolveConfig(dt=1e-3, t_end=0.1, snapshot_stride=100)
    traj = ev.evolve(u0, params, cfg)
    final = traj.snapshots[-1].values
    # the profile evolves by a pure phase exp(i t)
    assert np.max(np.abs(np.abs(final) - gs.profile.values.real)) < 2e-3
    assert np.max(np.abs(final - np.exp(1j * 0.1) * gs.profile.values)) < 2e-3


def test_step_reversibility(params_default, grid_medium):
    u0 = gaussian_field(grid_medium, 0.7, 1.2)
    cur = u0
    for _ in range(300):
        cur = ev.step(cur, params_default, 2e-3)
    for _ in range(300):
        cur = ev.step(cur, params_default, -2e-3)
    assert _rel_l2(grid_medium, cur.values, u0.values) < 1e-10


def test_gauge_covariance(params_default, grid_medium):
    u = gaussian_field(grid_medium, 0.7, 1.2)
    theta = 0.83
    rotated = Field(grid=grid_medium, values=np.exp(1j * theta) * u.values)
    s1 = ev.step(rotated, params_default, 2e-3)
    s2 = ev.step(u, params_default, 2e-3)
    assert np.max(np.abs(s1.values - np.exp(1j * theta) * s2.values)) < 1e-12


def test_step_rejects_non_finite(params_default, grid_coarse):
    bad = np.ones(grid_coarse.n, dtype=complex)
    bad[5] = np.nan
    with pytest.raises(ev.SolverBlowUpError):
        ev.step(Field(grid=grid_coarse, values=bad), params_default, 1e-3)


def test_free_propagate_group_properties(grid_medium):
    u = gaussian_field(grid_medium, 0.7, 1.2)
    assert np.array_equal(ev.free_propagate(u, 0.0).values, u.values)
    ab = ev.free_propagate(ev.free_propagate(u, 0.3), 0.4)
    c = ev.free_propagate(u, 0.7)
    assert np.max(np.abs(ab.values - c.values)) < 1e-12
    norm_ratio = l2_sq(grid_medium, c.values) / l2_sq(grid_medium, u.values)
    assert abs(norm_ratio - 1.0) < 1e-12
    back = ev.free_propagate(c, -0.7)
    assert np.max(np.abs(back.values - u.values)) < 1e-12


def test_linear_run_has_tiny_cauchy_defect(params_default):
    grid = build_grid(30.0, 512)
    u0 = gaussian_field(grid, 0.5, 1.0)
    cfg = ev.EvolveConfig(dt=5e-3, t_end=3.0, snapshot_stride=50, nonlinear=False)
    traj = ev.evolve(u0, params_default, cfg)
    _, defect = ev.scattering_profile(traj)
    assert defect < 1e-10


def test_scattering_profile_needs_enough_snapshots(params_default, grid_coarse):
    cfg = ev.EvolveConfig(dt=1e-2, t_end=0.1, snapshot_stride=100)
    traj = ev.evolve(gaussian_field(grid_coarse, 0.1, 1.0), params_default, cfg)
    with pytest.raises(ValueError):
        ev.scattering_profile(traj)


def test_sponge_damps_mass_monotonically(params_default, grid_medium):
    u = gaussian_field(grid_medium, 0.5, 1.0)
    cfg = ev.EvolveConfig(
        dt=5e-3, t_end=8.0, snapshot_stride=100, sponge_strength=5.0, sponge_start=12.0
    )
    traj = ev.evolve(u, params_default, cfg)
    assert traj.sponge_on
    masses = np.array([rec.mass for rec in traj.records])
    assert np.all(np.diff(masses) <= 1e-12)
    assert masses[-1] < 0.8 * masses[0]
    # outgoing radiation is absorbed instead of reflecting off the wall
    assert np.max(np.abs(traj.snapshots[-1].values[-40:])) < 1e-3
    with pytest.raises(ValueError):
        ev.scattering_profile(traj)


def test_sponge_validation(params_default):
    # the layer geometry is checked against the grid at run time
    grid = build_grid(20.0, 256)
    for start in (0.0, 30.0):
        cfg = ev.EvolveConfig(dt=1e-3, t_end=0.1, sponge_strength=1.0, sponge_start=start)
        with pytest.raises(ValueError):
            ev.evolve(gaussian_field(grid, 0.1, 1.0), params_default, cfg)


def test_gradient_ceiling_flags_collapse(ground_state_cache):
    params, grid, gs = ground_state_cache(r_max=16.0, n=256, tol=1e-9)
    u0 = Field(grid=grid, values=1.3 * gs.profile.values)
    cfg = ev.EvolveConfig(dt=1e-3, t_end=2.0, snapshot_stride=20, grad_ceiling_factor=10.0)
    traj = ev.evolve(u0, params, cfg)
    assert traj.status == "blowup_suspected"
    assert traj.times[-1] < 2.0
    growth = traj.records[-1].grad_sq / traj.records[0].grad_sq
    assert growth >= 100.0


def test_warns_when_dt_exceeds_dr(params_default, grid_coarse):
    cfg = ev.EvolveConfig(dt=0.5, t_end=1.0)
    with pytest.warns(UserWarning):
        ev.evolve(gaussian_field(grid_coarse, 0.1, 1.0), params_default, cfg)


def test_checkpoint_round_trip(tmp_path, params_default, grid_coarse):
    u = gaussian_field(grid_coarse, 0.4, 1.1)
    stepped = ev.step(u, params_default, 1e-3)
    path = str(tmp_path / "state.npz")
    ev.save_checkpoint(path, 0.25, stepped)
    t, restored = ev.load_checkpoint(path, grid_coarse)
    assert t == 0.25
    assert np.array_equal(restored.values, stepped.values)
    with pytest.raises(ValueError):
        ev.load_checkpoint(path, build_grid(16.0, 512))

import math

import numpy as np
import pytest

from ndspin import (
    CONSTANTS,
    FieldConfig,
    FlipSchedule,
    IntegrationError,
    IntegratorConfig,
    NanodiamondParams,
    TrajectoryState,
    UniformGradientField,
    delta_scan,
    derive_oscillator,
    equilibrium_positions,
    force,
    integrate,
    magnetic_moment,
    max_separation,
    sensitivity_scan,
)


def test_moment_zero_field_is_axial_spin(nd_250nm):
    mu = magnetic_moment((0.0, 0.0, 0.0), 1, nd_250nm)
    assert mu[1] == 0.0 and mu[2] == 0.0
    assert mu[0] == pytest.approx(-CONSTANTS.hbar * CONSTANTS.gamma_e, rel=1e-14)


def test_moment_flip_negates_only_axial_term(nd_250nm):
    B = (1e-5, 2e-5, -3e-5)
    up = magnetic_moment(B, 1, nd_250nm)
    dn = magnetic_moment(B, -1, nd_250nm)
    assert up[1] == dn[1] and up[2] == dn[2]
    gap = up[0] - dn[0]
    assert gap == pytest.approx(-2.0 * CONSTANTS.hbar * CONSTANTS.gamma_e,
                                rel=1e-14)


def test_moment_bohr_magneton_convention(nd_250nm):
    mu = magnetic_moment((0.0, 0.0, 0.0), 1, nd_250nm, spin_moment="mu_B")
    assert mu[0] == pytest.approx(CONSTANTS.mu_B, rel=1e-14)
    with pytest.raises(ValueError):
        magnetic_moment((0.0, 0.0, 0.0), 1, nd_250nm, spin_moment="bogus")
    with pytest.raises(ValueError):
        magnetic_moment((0.0, 0.0, 0.0), 2, nd_250nm)


def test_force_at_trap_center(coil_564):
    nd = NanodiamondParams.from_mass(5.6e-14)
    J = coil_564.jacobian_at((0.0, 0.0, 0.0))
    bprime = J[0, 0]
    f = force((0.0, 0.0, 0.0), 1, coil_564, nd)
    # uniform-gradient analytic limit: diamagnetic part vanishes with B = 0
    want = -CONSTANTS.hbar * CONSTANTS.gamma_e * bprime
    assert f[0] == pytest.approx(want, rel=1e-9)
    assert abs(f[1]) < 1e-9 * abs(f[0])
    assert abs(f[2]) < 1e-9 * abs(f[0])


def test_forces_differ_only_axially_on_axis(coil_564):
    nd = NanodiamondParams.from_mass(5.6e-14)
    for x in (0.0, 2e-7, -3e-7):
        fp = force((x, 0.0, 0.0), 1, coil_564, nd)
        fm = force((x, 0.0, 0.0), -1, coil_564, nd)
        assert fp[1] == fm[1] and fp[2] == fm[2]
        assert fp[0] != fm[0]


def test_spinless_force_vanishes_at_null(coil_564):
    nd = NanodiamondParams.from_mass(5.6e-14)
    fp = force((0.0, 0.0, 0.0), 1, coil_564, nd)
    fm = force((0.0, 0.0, 0.0), -1, coil_564, nd)
    # the diamagnetic parts are even in spin; they cancel at the field null
    assert np.linalg.norm(fp + fm) < 1e-9 * np.linalg.norm(fp)


def test_uniform_gradient_matches_closed_form(nd_250nm, field_fig2):
    src = UniformGradientField(field_fig2.Bprime)
    osc = derive_oscillator(nd_250nm, field_fig2)
    x0p, x0m = equilibrium_positions(nd_250nm, field_fig2)
    t_eval = np.linspace(0.0, osc.period, 300)
    cfg = IntegratorConfig(rel_tol=1e-11, abs_tol_pos=1e-18, abs_tol_vel=1e-17)
    for spin, x0 in ((1, x0p), (-1, x0m)):
        traj = integrate(TrajectoryState(0.0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)),
                         spin, src, nd_250nm, None, osc.period, cfg, t_eval)
        want = x0 * (1.0 - np.cos(osc.omega * t_eval))
        assert np.max(np.abs(traj.x - want)) < 1e-6 * abs(2.0 * x0)
        assert np.all(traj.y == 0.0) and np.all(traj.z == 0.0)


def test_period_recovered_within_tolerance(nd_250nm, field_fig2):
    src = UniformGradientField(field_fig2.Bprime)
    osc = derive_oscillator(nd_250nm, field_fig2)
    # bracket the return-to-origin instant around one period
    t_eval = np.linspace(0.98 * osc.period, 1.02 * osc.period, 4001)
    traj = integrate(TrajectoryState(0.0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)),
                     1, src, nd_250nm, None, 1.02 * osc.period,
                     IntegratorConfig(rel_tol=1e-11, abs_tol_pos=1e-18,
                                      abs_tol_vel=1e-17), t_eval)
    t_return = t_eval[np.argmin(np.abs(traj.x))]
    assert t_return == pytest.approx(osc.period, rel=1e-3)


def _effective_energy(traj, nd, bprime):
    b2 = bprime**2 * (traj.x**2 + traj.y**2 / 4.0 + traj.z**2 / 4.0)
    kinetic = 0.5 * nd.mass * np.sum(traj.v**2, axis=1)
    potential = (nd.chi_magnitude * nd.volume * b2 / (2.0 * CONSTANTS.mu0)
                 + CONSTANTS.hbar * CONSTANTS.gamma_e * traj.spin
                 * bprime * traj.x)
    return kinetic + potential


def test_energy_drift_uniform_gradient(nd_250nm, field_fig2):
    src = UniformGradientField(field_fig2.Bprime)
    osc = derive_oscillator(nd_250nm, field_fig2)
    x0p, _ = equilibrium_positions(nd_250nm, field_fig2)
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol_pos=1e-17, abs_tol_vel=1e-16)
    t_eval = np.linspace(0.0, 10.0 * osc.period, 1500)
    traj = integrate(TrajectoryState(0.0, (0.0, 1e-7, -5e-8), (0.0, 0.0, 0.0)),
                     1, src, nd_250nm, None, 10.0 * osc.period, cfg, t_eval)
    E = _effective_energy(traj, nd_250nm, field_fig2.Bprime)
    kinetic_scale = 0.5 * nd_250nm.mass * (x0p * osc.omega) ** 2
    assert np.max(np.abs(E - E[0])) < 1e-6 * kinetic_scale


def test_energy_drift_at_default_tolerances():
    # the default absolute floors only bind when the velocities clear them,
    # which smaller (faster-oscillating) particles do
    nd = NanodiamondParams(diameter=80e-9)
    fld = FieldConfig(Bprime=1e3)
    src = UniformGradientField(fld.Bprime)
    osc = derive_oscillator(nd, fld)
    x0p, _ = equilibrium_positions(nd, fld)
    t_eval = np.linspace(0.0, 10.0 * osc.period, 1500)
    traj = integrate(TrajectoryState(0.0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)),
                     1, src, nd, None, 10.0 * osc.period,
                     IntegratorConfig(), t_eval)
    E = _effective_energy(traj, nd, fld.Bprime)
    kinetic_scale = 0.5 * nd.mass * (x0p * osc.omega) ** 2
    assert np.max(np.abs(E - E[0])) < 1e-6 * kinetic_scale


def test_tolerance_convergence_sanity(nd_250nm, field_fig2):
    src = UniformGradientField(field_fig2.Bprime)
    osc = derive_oscillator(nd_250nm, field_fig2)
    x0p, _ = equilibrium_positions(nd_250nm, field_fig2)
    t_end = 3.3 * osc.period
    want = x0p * (1.0 - math.cos(osc.omega * t_end))

    def endpoint_error(rel):
        cfg = IntegratorConfig(rel_tol=rel, abs_tol_pos=1e-18,
                               abs_tol_vel=1e-17)
        traj = integrate(TrajectoryState(0.0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)),
                         1, src, nd_250nm, None, t_end, cfg, [t_end])
        return abs(traj.x[0] - want)

    coarse, fine = endpoint_error(1e-6), endpoint_error(1e-9)
    assert fine < coarse


def test_flip_events_and_mirror_symmetry(nd_250nm, field_fig2):
    src = UniformGradientField(field_fig2.Bprime)
    osc = derive_oscillator(nd_250nm, field_fig2)
    n_flip = 16
    sched = FlipSchedule(omega_dd=n_flip * osc.omega)
    t_eval = np.linspace(0.0, osc.period, 400)
    cfg = IntegratorConfig(rel_tol=1e-11, abs_tol_pos=1e-18, abs_tol_vel=1e-17)
    trajs = {s: integrate(TrajectoryState(0.0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)),
                          s, src, nd_250nm, sched, osc.period, cfg, t_eval)
             for s in (1, -1)}
    assert len(trajs[1].flip_times) == n_flip - 1  # flips strictly inside
    x_scale = np.max(np.abs(trajs[1].x))
    assert np.max(np.abs(trajs[1].x + trajs[-1].x)) < 1e-9 * x_scale
    # spin labels recorded per sample
    assert set(np.unique(trajs[1].spin)) == {-1, 1}


def test_synchronized_flips_keep_dynamics(nd_250nm, field_fig2):
    # delta = 0: spin and current flip together, trajectory unchanged
    src = UniformGradientField(field_fig2.Bprime)
    osc = derive_oscillator(nd_250nm, field_fig2)
    x0p, _ = equilibrium_positions(nd_250nm, field_fig2)
    sched = FlipSchedule(omega_dd=200 * osc.omega, delta=0.0)
    t_eval = np.linspace(0.0, osc.period, 300)
    cfg = IntegratorConfig(rel_tol=1e-11, abs_tol_pos=1e-18, abs_tol_vel=1e-17)
    traj = integrate(TrajectoryState(0.0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)),
                     1, src, nd_250nm, sched, osc.period, cfg, t_eval)
    want = x0p * (1.0 - np.cos(osc.omega * t_eval))
    assert np.max(np.abs(traj.x - want)) < 1e-6 * abs(2.0 * x0p)


def test_input_validation(nd_250nm, field_fig2):
    src = UniformGradientField(field_fig2.Bprime)
    start = TrajectoryState(0.0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        integrate(start, 1, src, nd_250nm, None, 0.0)
    with pytest.raises(ValueError):
        integrate(start, 2, src, nd_250nm, None, 1.0)
    with pytest.raises(ValueError):
        integrate(start, 1, src, nd_250nm, None, 1.0, t_eval=[2.0])
    with pytest.raises(ValueError):
        FlipSchedule(omega_dd=1.0, delta=math.pi)
    with pytest.raises(ValueError):
        TrajectoryState(0.0, (math.nan, 0.0, 0.0), (0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0.0)


def test_nan_field_raises(nd_250nm):
    class BrokenSource:
        def field_at(self, p, constants=None):
            return np.array([math.nan, 0.0, 0.0])

        def jacobian_at(self, p, constants=None):
            return np.full((3, 3), math.nan)

    start = TrajectoryState(0.0, (1e-7, 0.0, 0.0), (0.0, 0.0, 0.0))
    with pytest.raises((IntegrationError, FloatingPointError, ValueError)):
        integrate(start, 1, BrokenSource(), nd_250nm, None, 1.0)


def test_sensitivity_scan_degenerate_origin(nd_250nm, field_fig2):
    src = UniformGradientField(field_fig2.Bprime)
    osc = derive_oscillator(nd_250nm, field_fig2)
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol_pos=1e-17, abs_tol_vel=1e-16)
    recs = sensitivity_scan(0.0, [0.0, math.pi / 4.0], [0.0], src, nd_250nm,
                            None, osc.period, cfg, n_samples=50)
    assert len(recs) == 1  # r = 0 collapses the angular grid
    traj = recs[0]["trajectories"][1]
    direct = integrate(TrajectoryState(0.0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)),
                       1, src, nd_250nm, None, osc.period, cfg,
                       np.linspace(0.0, osc.period, 50))
    assert np.allclose(traj.x, direct.x, rtol=0.0, atol=1e-18)


def test_x_shift_leaves_max_separation(nd_250nm, field_fig2):
    src = UniformGradientField(field_fig2.Bprime)
    osc = derive_oscillator(nd_250nm, field_fig2)
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol_pos=1e-17, abs_tol_vel=1e-16)
    t_eval = np.linspace(0.0, osc.period, 201)
    dx = max_separation(nd_250nm, field_fig2)

    def max_sep(x_start):
        trajs = [integrate(TrajectoryState(0.0, (x_start, 0.0, 0.0),
                                           (0.0, 0.0, 0.0)),
                           s, src, nd_250nm, None, osc.period, cfg, t_eval)
                 for s in (1, -1)]
        return np.max(np.abs(trajs[0].x - trajs[1].x))

    assert max_sep(0.0) == pytest.approx(dx, rel=1e-6)
    assert max_sep(2e-7) == pytest.approx(max_sep(0.0), rel=1e-6)


def test_no_transverse_start_no_transverse_motion(nd_250nm, field_fig2,
                                                  coil_564):
    nd = NanodiamondParams.from_mass(5.6e-14)
    osc_scale = derive_oscillator(nd, FieldConfig(Bprime=0.676))
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol_pos=1e-17, abs_tol_vel=1e-16)
    t_end = 0.1 * osc_scale.period
    traj = integrate(TrajectoryState(0.0, (3e-7, 0.0, 0.0), (0.0, 0.0, 0.0)),
                     1, coil_564, nd, None, t_end, cfg,
                     np.linspace(0.0, t_end, 40))
    assert np.max(np.abs(traj.y)) == 0.0
    assert np.max(np.abs(traj.z)) == 0.0


def test_zero_coordinate_stays_frozen_while_other_oscillates(coil_564):
    # y = 0 start: no y motion ever, while the z offset oscillates
    nd = NanodiamondParams.from_mass(5.6e-14)
    osc_scale = derive_oscillator(nd, FieldConfig(Bprime=0.676))
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol_pos=1e-17, abs_tol_vel=1e-16)
    t_end = 1.2 * osc_scale.period  # > half a transverse period (omega/2)
    traj = integrate(TrajectoryState(0.0, (0.0, 0.0, 4e-7), (0.0, 0.0, 0.0)),
                     1, coil_564, nd, None, t_end, cfg,
                     np.linspace(0.0, t_end, 120))
    assert np.max(np.abs(traj.y)) == 0.0
    assert np.min(traj.z) < 0.99 * 4e-7  # z really moves
    assert np.max(np.abs(traj.z)) <= 4e-7 * (1.0 + 1e-6)


def test_delta_scan_reference_is_zero(nd_250nm, field_fig2):
    src = UniformGradientField(field_fig2.Bprime)
    osc = derive_oscillator(nd_250nm, field_fig2)
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol_pos=1e-17, abs_tol_vel=1e-16)
    res = delta_scan([0.0, math.pi / 25.0], src, nd_250nm, 40, osc.omega, cfg,
                     n_samples=200)
    assert res[0]["deviation"] == 0.0
    assert res[1]["deviation"] > 0.0
    with pytest.raises(ValueError):
        delta_scan([math.pi], src, nd_250nm, 40, osc.omega, cfg)

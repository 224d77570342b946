import math

import numpy as np
import pytest

from ndspin import (
    CONSTANTS,
    FieldConfig,
    NanodiamondParams,
    ProtocolConfig,
    Scenario,
    TwoQubitState,
    casimir_polder_separation,
    delta_phi_bd,
    delta_phi_rate,
    derive_oscillator,
    final_state,
    gravity_phases,
    max_separation,
    min_distance,
    negativity,
    optimize_tmin,
    protocol_duration,
)
from ndspin.protocol import SURFACE_CSV_HEADER, partial_transpose, write_surface_csv


def _cp_bisection_oracle(nd):
    """Independent route to Delta_CP: bisect V_CP(x) = 0.1 V_G(x) with the
    retarded two-sphere potential V_CP = 23 hbar c alpha^2 / (4 pi x^7)."""
    R3 = 3.0 * nd.volume / (4.0 * math.pi)
    alpha = R3 * (nd.epsilon - 1.0) / (nd.epsilon + 2.0)
    m = nd.mass

    def excess(x):
        v_cp = 23.0 * CONSTANTS.hbar * CONSTANTS.c * alpha**2 / (
            4.0 * math.pi * x**7)
        v_g = CONSTANTS.G * m * m / x
        return v_cp - 0.1 * v_g

    lo, hi = 1e-9, 1.0
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def test_casimir_polder_against_bisection_oracle(nd_1pg):
    got = casimir_polder_separation(nd_1pg)
    want = _cp_bisection_oracle(nd_1pg)
    # the published prefactor 2.01413 is the 6-digit rounding of
    # 2 (2070/(64 pi^3))^{1/6}; the bisection oracle carries the exact one
    assert got == pytest.approx(want, rel=1e-5)
    assert got == pytest.approx(1.56e-4, rel=1e-2)
    exact_prefactor = (2070.0 / (64.0 * math.pi**3)) ** (1.0 / 6.0)
    assert got / want == pytest.approx((2.01413 / 2.0) / exact_prefactor,
                                       rel=1e-10)


def test_casimir_polder_mass_invariant_at_fixed_density():
    # V^2/m^2 is rho^-2 at fixed density, so the threshold distance carries
    # no mass dependence at all
    a = casimir_polder_separation(NanodiamondParams.from_mass(1e-14))
    b = casimir_polder_separation(NanodiamondParams.from_mass(8e-14))
    assert a == pytest.approx(b, rel=1e-12)


def test_casimir_polder_vanishes_for_unit_permittivity():
    nd = NanodiamondParams.from_mass(1e-12, epsilon=1.0 + 1e-9)
    assert casimir_polder_separation(nd) < 1e-3 * casimir_polder_separation(
        NanodiamondParams.from_mass(1e-12))


def test_min_distance_structure(nd_1pg, field_yellow):
    d = min_distance(nd_1pg, field_yellow)
    assert d == pytest.approx(
        max_separation(nd_1pg, field_yellow)
        + casimir_polder_separation(nd_1pg), rel=1e-14)
    assert d == pytest.approx(1.56e-4, rel=1e-2)
    # gradient -> large kills the separation term
    tight = min_distance(nd_1pg, FieldConfig(Bprime=1e6))
    assert tight == pytest.approx(casimir_polder_separation(nd_1pg), rel=1e-4)
    # strictly decreasing in the gradient
    values = [min_distance(nd_1pg, FieldConfig(Bprime=b))
              for b in (0.2, 0.5, 1.0, 5.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_rate_properties(nd_1pg):
    m = nd_1pg.mass
    assert delta_phi_rate(1e-4, 0.0, m) == 0.0
    for s in (1e-8, 1e-6, 5e-5, 9.9e-5):
        assert delta_phi_rate(1e-4, s, m) > 0.0
    with pytest.raises(ValueError):
        delta_phi_rate(1e-4, 1e-4, m)
    with pytest.raises(ValueError):
        delta_phi_rate(1e-4, -1e-6, m)


def test_rate_reference_point(nd_1pg):
    rate = delta_phi_rate(1.56e-4, 3.2e-8, 1e-12)
    assert rate == pytest.approx(3.4e-4, rel=3e-2)
    hold = 0.01 * math.pi / rate
    assert 92.0 <= hold <= 95.0


def test_hold_only_protocol_time(nd_1pg, field_yellow):
    res = protocol_duration(nd_1pg, field_yellow, ProtocolConfig())
    assert res.t_total == pytest.approx(283.0, rel=5e-3)
    assert res.delta_phi_bd == 0.0
    assert res.delta_phi_hold == pytest.approx(0.01 * math.pi, rel=1e-12)
    assert res.t_total == res.period + res.t_hold


def test_full_cycle_never_slower(nd_1pg, rng):
    for _ in range(10):
        m = float(rng.uniform(1e-15, 1e-12))
        bp = float(rng.uniform(0.2, 5.0))
        nd = NanodiamondParams.from_mass(m)
        fld = FieldConfig(Bprime=bp)
        hold = protocol_duration(nd, fld, ProtocolConfig())
        full = protocol_duration(
            nd, fld, ProtocolConfig(scenario=Scenario.FULL_CYCLE))
        assert full.t_total <= hold.t_total
        assert full.delta_phi_bd >= 0.0


def test_overshoot_keeps_one_period(nd_1pg, field_yellow):
    cfg = ProtocolConfig(target_delta_phi=1e-6,
                         scenario=Scenario.FULL_CYCLE)
    res = protocol_duration(nd_1pg, field_yellow, cfg)
    assert res.t_hold == 0.0
    assert res.t_total == res.period
    assert res.delta_phi_bd > 1e-6


def test_manual_distance_validation(nd_1pg, field_yellow):
    d_min = min_distance(nd_1pg, field_yellow)
    with pytest.raises(ValueError):
        protocol_duration(nd_1pg, field_yellow,
                          ProtocolConfig(distance=0.5 * d_min))
    with pytest.warns(UserWarning):
        res = protocol_duration(
            nd_1pg, field_yellow,
            ProtocolConfig(distance=0.5 * d_min, allow_close=True))
    assert res.d_used == pytest.approx(0.5 * d_min)
    far = protocol_duration(nd_1pg, field_yellow,
                            ProtocolConfig(distance=2.0 * d_min))
    assert far.t_total > protocol_duration(
        nd_1pg, field_yellow, ProtocolConfig()).t_total


def test_auto_distance_is_optimal(nd_1pg, field_yellow):
    d_min = min_distance(nd_1pg, field_yellow)
    auto = protocol_duration(nd_1pg, field_yellow, ProtocolConfig())
    for scale in np.linspace(1.0, 10.0, 19):
        manual = protocol_duration(
            nd_1pg, field_yellow, ProtocolConfig(distance=scale * d_min))
        assert manual.t_total >= auto.t_total * (1.0 - 1e-12)


def test_quadrature_against_trapezoid_oracle(field_yellow):
    nd = NanodiamondParams.from_mass(5.6e-14)
    fld = FieldConfig(Bprime=0.663)
    d = min_distance(nd, fld)
    got = delta_phi_bd(nd, fld, d)
    osc = derive_oscillator(nd, fld)
    dx = max_separation(nd, fld)
    t = np.linspace(0.0, osc.period, 1_000_001)
    s = 0.5 * dx * (1.0 - np.cos(osc.omega * t))
    rate = (CONSTANTS.G * nd.mass**2 / CONSTANTS.hbar) * (
        2.0 * s * s / (d * (d * d - s * s)))
    want = float(np.trapezoid(rate, t))
    assert got == pytest.approx(want, rel=1e-8)


def test_protocol_time_continuity_in_parameters():
    cfg = ProtocolConfig(scenario=Scenario.FULL_CYCLE)
    masses = np.logspace(-14, -12.8, 40)
    times = [protocol_duration(NanodiamondParams.from_mass(m),
                               FieldConfig(Bprime=0.5), cfg).t_total
             for m in masses]
    jumps = np.abs(np.diff(times))
    assert np.max(jumps) < 0.05 * np.max(np.abs(times))


def test_optimizer_hold_only_small_grid():
    res = optimize_tmin(Scenario.HOLD_ONLY, (1e-17, 1e-12), (0.1, 10.0),
                        grid_shape=(24, 24))
    assert res.t_min == pytest.approx(283.0, rel=0.05)
    assert 0.475 / 1.5 <= res.Bprime_opt <= 0.475 * 1.5
    assert res.on_mass_boundary
    assert not res.on_gradient_boundary
    assert len(res.surface) == 24 * 24


def test_optimizer_rejects_bad_ranges():
    with pytest.raises(ValueError):
        optimize_tmin(Scenario.HOLD_ONLY, (1e-12, 1e-17), (0.1, 10.0))
    with pytest.raises(ValueError):
        optimize_tmin(Scenario.HOLD_ONLY, (1e-17, 1e-12), (-1.0, 10.0))


def test_optimizer_deterministic():
    a = optimize_tmin(Scenario.HOLD_ONLY, (1e-14, 1e-12), (0.2, 2.0),
                      grid_shape=(10, 10))
    b = optimize_tmin(Scenario.HOLD_ONLY, (1e-14, 1e-12), (0.2, 2.0),
                      grid_shape=(10, 10))
    assert a.m_opt == b.m_opt and a.Bprime_opt == b.Bprime_opt
    assert a.t_min == b.t_min


def test_optimizer_threaded_map_matches_sequential():
    seq = optimize_tmin(Scenario.FULL_CYCLE, (1e-14, 1e-12), (0.2, 2.0),
                        grid_shape=(8, 8), refine=False)
    par = optimize_tmin(Scenario.FULL_CYCLE, (1e-14, 1e-12), (0.2, 2.0),
                        grid_shape=(8, 8), refine=False, threads=4)
    assert par.m_opt == seq.m_opt and par.Bprime_opt == seq.Bprime_opt
    assert par.t_min == seq.t_min
    assert par.surface_rows() == seq.surface_rows()


def test_surface_csv_schema(tmp_path):
    res = optimize_tmin(Scenario.HOLD_ONLY, (1e-14, 1e-12), (0.2, 2.0),
                        grid_shape=(6, 6), refine=False)
    path = tmp_path / "surface.csv"
    write_surface_csv(path, res)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(SURFACE_CSV_HEADER)
    assert len(lines) == 1 + 36
    first = lines[1].split(",")
    assert float(first[0]) == pytest.approx(1e-14)


def test_final_state_product_and_norm():
    st = final_state(0.0, 0.0)
    assert all(a == 0.5 for a in st.amplitudes)
    st2 = final_state(0.7, -1.2)
    assert sum(abs(a) ** 2 for a in st2.amplitudes) == pytest.approx(1.0,
                                                                     abs=1e-15)
    assert negativity(st) < 1e-12


def _hermitian_eigvals_mpmath(H):
    """Independent dense eigendecomposition (pure-python, high precision)."""
    import mpmath as mp

    mp.mp.dps = 40
    A = mp.matrix([[mp.mpc(v) for v in row] for row in np.asarray(H)])
    E, _ = mp.eighe(A)
    return np.sort(np.array([float(E[i].real) for i in range(4)]))


def test_negativity_against_independent_eigensolver():
    st = final_state(0.005 * math.pi, -0.005 * math.pi)
    rho_pt = partial_transpose(st.density_matrix())
    eig = _hermitian_eigvals_mpmath(rho_pt)
    oracle = float(-np.sum(eig[eig < 0.0]))
    assert oracle > 0.0
    assert negativity(st) == pytest.approx(oracle, abs=1e-10)
    # and the pure-state closed form
    assert negativity(st) == pytest.approx(abs(math.sin(0.005 * math.pi)) / 2.0,
                                           abs=1e-12)


def test_negativity_known_values():
    bell = TwoQubitState(amplitudes=(1.0 / math.sqrt(2.0), 0.0, 0.0,
                                     1.0 / math.sqrt(2.0)))
    assert negativity(bell) == pytest.approx(0.5, abs=1e-12)
    assert negativity(final_state(0.3, -0.3)) > 0.0


def test_negativity_monotone_in_phase_gap():
    values = []
    for dphi in np.linspace(0.05, math.pi, 24):
        values.append(negativity(final_state(-dphi / 2.0, dphi / 2.0)))
    assert all(b > a for a, b in zip(values, values[1:]))


def test_negativity_vanishes_only_at_multiples_of_two_pi():
    for k in (0, 1, 2):
        dphi = 2.0 * math.pi * k
        assert negativity(final_state(-dphi / 2.0, dphi / 2.0)) < 1e-12
    for dphi in (1e-3, math.pi / 2.0, 2.0 * math.pi - 1e-3,
                 2.0 * math.pi + 1e-3):
        assert negativity(final_state(-dphi / 2.0, dphi / 2.0)) > 1e-5


def test_negativity_rejects_unnormalized_input():
    with pytest.raises(ValueError):
        negativity([0.5, 0.5, 0.5, 0.6])
    with pytest.raises(ValueError):
        TwoQubitState(amplitudes=(1.0, 1.0, 0.0, 0.0))


def test_gravity_phase_bookkeeping(nd_1pg, field_yellow):
    res = protocol_duration(nd_1pg, field_yellow, ProtocolConfig())
    pp, pm = gravity_phases(res.d_used, res.dx_max, nd_1pg.mass, res.t_hold)
    assert pm - pp == pytest.approx(0.01 * math.pi, rel=1e-8)
    st = final_state(pp, pm)
    assert negativity(st) > 0.0
    with pytest.raises(ValueError):
        gravity_phases(1e-4, 2e-4, nd_1pg.mass, 1.0)

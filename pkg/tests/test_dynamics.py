"""Tests for source construction and amplitude integration."""

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfcx

from wqed.coupling import CouplingResult, SimParams, coupling_full
from wqed.dynamics import (
    GAUSSIAN_CLOSED_FORM,
    BARE_PREFACTOR,
    QUADRATURE,
    UNIT_EXCITATION,
    IncidentWavepacket,
    SourceTerm,
    TimeGrid,
    build_source,
    default_grid,
    integrate_markovian,
    markov_guard,
    oracle_modes,
    slowest_excited_rate,
)
from wqed.errors import ConfigurationError, NumericalError

NO_COUPLING = CouplingResult(m_total=0j, m_parts=(),
                             real_photon_part=0.0, virtual_photon_part=0.0)


def setup(gamma_over_delta=4.0, k0l=math.pi / 4, normalization=UNIT_EXCITATION,
          method=GAUSSIAN_CLOSED_FORM, span_factor=1.0, dt_factor=1.0):
    p = SimParams.from_ratios(gamma_over_delta, k0l)
    wp = IncidentWavepacket(delta=p.delta, omega0=p.omega0,
                            normalization=normalization)
    grid = default_grid(p, span_factor=span_factor, dt_factor=dt_factor)
    return p, wp, build_source(wp, p, grid, method=method)


def single_atom_convolution(params, wavepacket, grid):
    """Closed-form solution of db/dt = S01 - gamma*b with b(t_start) = 0:
    the infinite-history convolution minus its propagated initial value."""
    amp = (-1j * wavepacket.amplitude_scale
           * math.sqrt(params.gamma * params.delta) / (2 * math.sqrt(math.pi)))
    t = grid.times

    def tail(tt):
        return (np.exp(-(params.delta * tt) ** 2 / 4)
                * erfcx(params.gamma / params.delta - params.delta * tt / 2))

    full = tail(t)
    correction = tail(t[0]) * np.exp(-params.gamma * (t - t[0]))
    return amp * math.sqrt(math.pi) / params.delta * (full - correction)


class TestIncidentWavepacket:
    def test_unit_excitation_norm(self):
        wp = IncidentWavepacket(delta=0.25, omega0=2500.0)
        assert abs(wp.norm_squared() - 1.0) < 1e-10

    def test_bare_prefactor_norm(self):
        wp = IncidentWavepacket(delta=0.25, omega0=2500.0,
                                normalization=BARE_PREFACTOR)
        assert abs(wp.norm_squared() - 1 / (2 * math.sqrt(2 * math.pi))) < 1e-10

    def test_left_movers_carry_nothing(self):
        wp = IncidentWavepacket(delta=0.25, omega0=2500.0)
        assert np.all(wp.spectral_amplitude(np.array([-1.0, -2500.0, 0.0])) == 0.0)

    @pytest.mark.parametrize("kw", [
        dict(delta=0.0), dict(omega0=-1.0), dict(normalization="unknown"),
        dict(spectral_span=2.0), dict(spectral_points=16),
    ])
    def test_validation(self, kw):
        base = dict(delta=0.25, omega0=2500.0)
        base.update(kw)
        with pytest.raises(ConfigurationError):
            IncidentWavepacket(**base)


class TestTimeGrid:
    def test_from_step_preserves_dt(self):
        g = TimeGrid.from_step(-1.0, 1.0, 0.01)
        assert g.dt == pytest.approx(0.01, rel=1e-12)
        assert g.t_end >= 1.0

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            TimeGrid(1.0, 0.0, 100)
        with pytest.raises(ConfigurationError):
            TimeGrid.from_step(0.0, 1.0, -0.1)

    def test_default_grid_tracks_slow_mode(self):
        # the antisymmetric mode at k0l=pi/4 decays ~3.4x slower than
        # gamma, so its grid must be correspondingly longer than at k0l=0
        p_fast = SimParams.from_ratios(4.0, 0.0)
        p_slow = SimParams.from_ratios(4.0, math.pi / 4)
        assert slowest_excited_rate(p_fast) == pytest.approx(2.0, rel=1e-12)
        assert slowest_excited_rate(p_slow) == pytest.approx(
            1 - math.cos(math.pi / 4), rel=1e-12)
        assert default_grid(p_slow).t_end > default_grid(p_fast).t_end

    def test_default_grid_caps_near_dark_modes(self):
        # a barely-driven, barely-decaying mode must not blow up the grid
        p = SimParams.from_ratios(4.0, 1e-6)
        assert default_grid(p).t_end <= 8 / p.delta + 2000.0 / p.gamma + 1e-9


class TestBuildSource:
    def test_peak_at_atom1_retarded_time(self):
        _, _, src = setup()
        i = np.argmax(np.abs(src.s1))
        assert src.grid.times[i] == pytest.approx(0.0, abs=src.grid.dt)

    def test_phase_relation_closed_form(self):
        p, _, src = setup(k0l=math.pi / 3)
        mask = np.abs(src.s1) > 1e-8 * np.abs(src.s1).max()
        ratio = src.s2[mask] / src.s1[mask]
        assert np.abs(np.abs(ratio) - 1.0).max() < 1e-6
        assert np.abs(np.angle(ratio) - math.pi / 3).max() < 1e-6

    def test_phase_relation_quadrature(self):
        p, _, src = setup(k0l=math.pi / 3, method=QUADRATURE)
        mask = np.abs(src.s1) > 1e-8 * np.abs(src.s1).max()
        ratio = src.s2[mask] / src.s1[mask]
        assert np.abs(np.abs(ratio) - 1.0).max() < 1e-6

    def test_quadrature_matches_closed_form_at_peak(self):
        # delta/omega0 = 1e-3: the sqrt(omega0/omega) weight shifts the
        # peak by O((delta/omega0)^2) only
        p = SimParams.from_ratios(4.0, math.pi / 4, omega0_over_gamma=250.0)
        assert p.delta / p.omega0 == pytest.approx(1e-3, rel=1e-12)
        wp = IncidentWavepacket(delta=p.delta, omega0=p.omega0)
        grid = default_grid(p)
        closed = build_source(wp, p, grid, method=GAUSSIAN_CLOSED_FORM)
        quad = build_source(wp, p, grid, method=QUADRATURE)
        i = np.argmax(np.abs(closed.s1))
        assert abs(quad.s1[i] - closed.s1[i]) / abs(closed.s1[i]) < 1e-3

    def test_grid_too_short(self):
        p = SimParams.from_ratios(4.0, math.pi / 4)
        wp = IncidentWavepacket(delta=p.delta, omega0=p.omega0)
        short = TimeGrid.from_step(-4.0 / p.delta, 20.0, 0.01 / p.gamma)
        with pytest.raises(ConfigurationError):
            build_source(wp, p, short)

    def test_wavepacket_params_mismatch(self):
        p = SimParams.from_ratios(4.0, math.pi / 4)
        wp = IncidentWavepacket(delta=2 * p.delta, omega0=p.omega0)
        with pytest.raises(ConfigurationError):
            build_source(wp, p, default_grid(p))

    def test_unknown_method(self):
        p, wp, _ = setup()
        with pytest.raises(ConfigurationError):
            build_source(wp, p, default_grid(p), method="spline")


class TestIntegrateMarkovian:
    def test_single_atom_reduction(self):
        # M = 0 decouples the atoms; beta1 is the exponential convolution
        # of its own source
        p, wp, src = setup()
        traj = integrate_markovian(src, NO_COUPLING, p)
        exact = single_atom_convolution(p, wp, src.grid)
        dev = np.abs(traj.beta1 - exact).max() / np.abs(exact).max()
        assert dev < 1e-8

    def test_zero_source_stays_zero(self):
        p, _, src = setup()
        silent = dataclasses.replace(
            src, s1=np.zeros_like(src.s1), s2=np.zeros_like(src.s2),
            s1_mid=np.zeros_like(src.s1_mid), s2_mid=np.zeros_like(src.s2_mid))
        traj = integrate_markovian(silent, coupling_full(p), p)
        assert np.all(traj.beta1 == 0) and np.all(traj.beta2 == 0)

    def test_matches_mode_oracle(self):
        p, _, src = setup()
        cpl = coupling_full(p)
        rk = integrate_markovian(src, cpl, p)
        om = oracle_modes(src, cpl, p)
        scale = np.abs(om.beta1).max()
        dev = max(np.abs(rk.beta1 - om.beta1).max(),
                  np.abs(rk.beta2 - om.beta2).max()) / scale
        assert dev < 1e-8

    def test_step_size_guard(self):
        p = SimParams.from_ratios(1.0, math.pi / 4)
        wp = IncidentWavepacket(delta=p.delta, omega0=p.omega0)
        coarse = TimeGrid.from_step(-8 / p.delta, 8 / p.delta + 12 / p.gamma,
                                    0.1 / p.gamma)
        src = build_source(wp, p, coarse)
        with pytest.raises(ConfigurationError):
            integrate_markovian(src, coupling_full(p), p)

    def test_nan_detection_reports_time(self):
        p, _, src = setup()
        src.s1[src.grid.n // 2] = float("nan")
        with pytest.raises(NumericalError, match="t ="):
            integrate_markovian(src, coupling_full(p), p)

    def test_grid_mismatch(self):
        p, _, src = setup()
        other = TimeGrid.from_step(src.grid.t_start, src.grid.t_end,
                                   2 * src.grid.dt)
        with pytest.raises(ConfigurationError):
            integrate_markovian(src, coupling_full(p), p, grid=other)

    def test_decay_and_bound_invariants(self):
        for gd in (0.02, 0.25, 4.0):
            p, _, src = setup(gamma_over_delta=gd)
            traj = integrate_markovian(src, coupling_full(p), p)
            pop = np.abs(traj.beta1) ** 2 + np.abs(traj.beta2) ** 2
            assert pop.max() <= 1.0
            assert traj.beta1[0] == 0.0 and traj.beta2[0] == 0.0
            for b in (traj.beta1, traj.beta2):
                assert np.abs(b[-1]) <= 1e-3 * np.abs(b).max()

    def test_convergence_order(self):
        p, wp, _ = setup()
        cpl = coupling_full(p)
        errs = []
        for factor in (2.0, 1.0):
            grid = default_grid(p, dt_factor=factor)
            src = build_source(wp, p, grid)
            rk = integrate_markovian(src, cpl, p)
            om = oracle_modes(src, cpl, p)
            errs.append(max(np.abs(rk.beta1 - om.beta1).max(),
                            np.abs(rk.beta2 - om.beta2).max())
                        / np.abs(om.beta1).max())
        order = math.log2(errs[0] / errs[1])
        assert order >= 3.8


class TestOracleModes:
    def test_symmetric_drive_leaves_dark_mode_empty(self):
        # k0l = 0: both atoms driven identically, v = beta1 - beta2 = 0
        p, _, src = setup(k0l=0.0)
        traj = oracle_modes(src, coupling_full(p), p)
        v = traj.beta1 - traj.beta2
        assert np.abs(v).max() <= 1e-14 * np.abs(traj.beta1).max()

    def test_superradiant_rate_at_zero_separation(self):
        # gamma << delta: the pulse is over quickly, then the only
        # populated mode free-decays at 2*gamma
        p, _, src = setup(gamma_over_delta=0.25, k0l=0.0)
        traj = oracle_modes(src, coupling_full(p), p)
        t = src.grid.times
        sel = (t > 9 / p.delta) & (t < 9 / p.delta + 2 / p.gamma)
        u = np.abs(traj.beta1[sel] + traj.beta2[sel])
        rate = -np.polyfit(t[sel], np.log(u), 1)[0]
        assert rate == pytest.approx(2 * p.gamma, rel=1e-3)

    def test_quarter_period_modes_decay_at_gamma(self):
        # k0l = pi/2: M = i*gamma, both modes |u|,|v| decay at gamma
        p, _, src = setup(gamma_over_delta=0.25, k0l=math.pi / 2)
        traj = oracle_modes(src, coupling_full(p), p)
        t = src.grid.times
        sel = (t > 9 / p.delta) & (t < 9 / p.delta + 2 / p.gamma)
        for combo in (traj.beta1 + traj.beta2, traj.beta1 - traj.beta2):
            rate = -np.polyfit(t[sel], np.log(np.abs(combo[sel])), 1)[0]
            assert rate == pytest.approx(p.gamma, rel=1e-3)


class TestSystemInvariants:
    @given(st.floats(min_value=0.2, max_value=5.0),
           st.floats(min_value=-math.pi, max_value=math.pi))
    @settings(max_examples=8, deadline=None)
    def test_linearity(self, mag, phase):
        lam = mag * complex(math.cos(phase), math.sin(phase))
        p, _, src = setup(gamma_over_delta=1.0)
        cpl = coupling_full(p)
        base = integrate_markovian(src, cpl, p)
        scaled_src = dataclasses.replace(
            src, s1=lam * src.s1, s2=lam * src.s2,
            s1_mid=lam * src.s1_mid, s2_mid=lam * src.s2_mid)
        scaled = integrate_markovian(scaled_src, cpl, p)
        assert np.allclose(scaled.beta1, lam * base.beta1, rtol=1e-13, atol=1e-18)
        assert np.allclose(scaled.beta2, lam * base.beta2, rtol=1e-13, atol=1e-18)

    def test_swap_symmetry(self):
        # exchanging the atoms (and their drives) swaps the trajectories
        # bitwise: the update rule is symmetric in the pair
        p, _, src = setup(k0l=1.3)
        cpl = coupling_full(p)
        base = integrate_markovian(src, cpl, p)
        swapped_src = dataclasses.replace(
            src, s1=src.s2, s2=src.s1, s1_mid=src.s2_mid, s2_mid=src.s1_mid)
        swapped = integrate_markovian(swapped_src, cpl, p)
        assert np.array_equal(swapped.beta1, base.beta2)
        assert np.array_equal(swapped.beta2, base.beta1)

    def test_doubling_window_shrinks_endpoint(self):
        p, wp, src = setup(gamma_over_delta=0.25)
        cpl = coupling_full(p)
        short = integrate_markovian(src, cpl, p)
        grid2 = default_grid(p, span_factor=2.0)
        src2 = build_source(wp, p, grid2)
        long = integrate_markovian(src2, cpl, p)
        assert np.abs(long.beta1[-1]) < 0.1 * np.abs(short.beta1[-1])


class TestMarkovGuard:
    def test_all_pass(self):
        p = SimParams(gamma=1.0, delta=1.0, omega0=1000.0, l=0.01)
        assert markov_guard(p).ok

    def test_flight_time_warning(self):
        p = SimParams(gamma=1.0, delta=1.0, omega0=1000.0, l=1.0)
        report = markov_guard(p)
        assert "retardation" in report.warnings and not report.ok

    def test_carrier_ratio_warning(self):
        p = SimParams(gamma=1.0, delta=1.0, omega0=10.0, l=0.001)
        report = markov_guard(p)
        assert "gamma_over_omega0" in report.warnings
        assert "delta_over_omega0" in report.warnings

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtcsim.meanfield import (ISING_CONVENTIONS, MeanFieldState, PoleError, bloch_rhs,
                              default_seed_grid, effective_params, eom_rhs, integrate, mf_energy,
                              one_period_map, psos, stroboscopic, wrap_angle)
from dtcsim.model import ModelParams, ProductStateSpec, local_spinor

IDEAL = ModelParams(h=math.pi, T=1.0)
FIG2A = ModelParams.from_epsilon(0.05, 1.0, J=1.0, lam=0.05)
START = MeanFieldState(0.0, math.pi / 2)


class TestEnergy:
    def test_pure_drive_at_origin(self):
        assert mf_energy(MeanFieldState(0.0, 0.0), 0.0, IDEAL) == pytest.approx(-math.pi)

    @pytest.mark.parametrize("Q", [1.0, -1.0])
    @pytest.mark.parametrize("P", [0.0, 1.3, -2.0])
    def test_poles_kill_drive(self, Q, P):
        assert mf_energy(MeanFieldState(Q, P), 0.37, IDEAL) == pytest.approx(0.0, abs=1e-15)

    def test_interaction_only_at_half_period(self):
        p = ModelParams(h=math.pi, T=1.0, J=1.0)
        assert mf_energy(MeanFieldState(0.0, math.pi / 2), 0.5, p) == pytest.approx(-1.0)

    def test_spin_convention_quarters_ising_term(self):
        p = ModelParams(h=math.pi, T=1.0, J=1.0)
        e = mf_energy(MeanFieldState(0.0, math.pi / 2), 0.5, p, convention="spin")
        assert e == pytest.approx(-0.25)
        assert effective_params(p, "pauli") is p
        with pytest.raises(ValueError, match="convention"):
            effective_params(p, "bogus")
        assert set(ISING_CONVENTIONS) == {"pauli", "spin"}

    def test_field_term(self):
        p = ModelParams(h=0.0, T=1.0, lam=0.3)
        # +y state: sqrt(1-Q^2) sin P + Q = 1
        assert mf_energy(START, 0.0, p) == pytest.approx(0.3)

    def test_energy_matches_product_state_expectation(self):
        # per-site <H>/N for N -> infinity equals the mean-field energy up to the constant J
        p = ModelParams.from_epsilon(0.05, 1.0, J=0.7, lam=0.2)
        v = local_spinor(ProductStateSpec(0.4, 1))
        s = MeanFieldState.from_spinor(v)
        x, y, z = s.bloch()
        t = 0.3
        direct = (-p.h * math.cos(0.5 * p.omega * t) ** 2 * x - p.J * z * z + p.lam * (y + z))
        assert mf_energy(s, t, p) == pytest.approx(direct - p.J, abs=1e-12)


class TestEom:
    def test_drive_precession_rate(self):
        dq, dp = eom_rhs(START, 0.0, IDEAL)
        assert dq == pytest.approx(-2 * math.pi) and dp == pytest.approx(0.0, abs=1e-15)

    def test_interaction_only_conserves_q(self):
        p = ModelParams(h=0.0, T=1.0, J=2.3)
        assert eom_rhs(MeanFieldState(0.4, 1.0), 0.2, p)[0] == 0.0

    def test_zero_at_half_period(self):
        assert eom_rhs(MeanFieldState(0.0, 0.0), 0.5, IDEAL) == (0.0, 0.0)

    def test_pole_raises(self):
        with pytest.raises(PoleError):
            eom_rhs(MeanFieldState(1.0, 0.0), 0.0, IDEAL)

    @settings(max_examples=100, deadline=None)
    @given(Q=st.floats(-0.9, 0.9), P=st.floats(-3.1, 3.1), t=st.floats(0, 1),
           J=st.floats(-3, 3), lam=st.floats(-1, 1), eps=st.floats(-0.5, 0.5))
    def test_hamilton_equations_match_finite_differences(self, Q, P, t, J, lam, eps):
        p = ModelParams.from_epsilon(eps, 1.0, J=J, lam=lam)
        d = 1e-6
        dHdP = (mf_energy(MeanFieldState(Q, P + d), t, p)
                - mf_energy(MeanFieldState(Q, P - d), t, p)) / (2 * d)
        dHdQ = (mf_energy(MeanFieldState(Q + d, P), t, p)
                - mf_energy(MeanFieldState(Q - d, P), t, p)) / (2 * d)
        dq, dp = eom_rhs(MeanFieldState(Q, P), t, p)
        assert abs(dq + 2 * dHdP) < 1e-6
        assert abs(dp - 2 * dHdQ) < 1e-6

    @settings(max_examples=50, deadline=None)
    @given(Q=st.floats(-0.9, 0.9), P=st.floats(-3.1, 3.1), t=st.floats(0, 1))
    def test_bloch_flow_is_the_same_flow(self, Q, P, t):
        s = MeanFieldState(Q, P)
        dq, dp = eom_rhs(s, t, FIG2A)
        x, y, z = s.bloch()
        ds = bloch_rhs(s.bloch(), t, FIG2A)
        r2 = x * x + y * y
        assert ds[2] == pytest.approx(dq, abs=1e-10)
        assert (x * ds[1] - y * ds[0]) / r2 == pytest.approx(dp, abs=1e-10)


class TestIntegrate:
    def test_one_period_is_pi_rotation(self):
        traj = integrate(START, 0.0, 1.0, IDEAL)
        assert abs(wrap_angle(traj.final.P) + math.pi / 2) < 1e-8
        assert abs(traj.final.Q) < 1e-8
        assert traj.times[0] == 0.0 and traj.times[-1] == 1.0 and len(traj.times) == 1001

    def test_two_periods_return(self):
        s = integrate(START, 0.0, 2.0, IDEAL).final
        assert abs(wrap_angle(s.P - math.pi / 2)) < 1e-8 and abs(s.Q) < 1e-8

    def test_partial_last_step(self):
        traj = integrate(START, 0.0, 0.12345, IDEAL, steps_per_period=100)
        assert traj.times[-1] == 0.12345
        assert np.all(np.diff(traj.times) > 0)

    def test_forward_backward_reversible(self):
        s0 = MeanFieldState(0.3, 1.1)
        fwd = integrate(s0, 0.0, 1.0, FIG2A).final
        back = integrate(fwd, 1.0, 0.0, FIG2A).final
        assert abs(back.Q - s0.Q) <= 1e-9
        assert abs(wrap_angle(back.P - s0.P)) <= 1e-9

    def test_frozen_drive_conserves_energy(self):
        s0 = MeanFieldState(0.2, 0.7)
        traj = integrate(s0, 0.0, 100.0, FIG2A, frozen_drive=True)
        e0 = mf_energy(s0, 0.0, FIG2A, frozen_drive=True)
        e1 = mf_energy(traj.final, 0.0, FIG2A, frozen_drive=True)
        assert abs(e1 - e0) <= 1e-6

    def test_rejects_degenerate_requests(self):
        with pytest.raises(ValueError):
            integrate(START, 1.0, 1.0, IDEAL)
        with pytest.raises(ValueError):
            integrate(START, 0.0, 1.0, IDEAL, steps_per_period=10)

    def test_p_is_unwrapped_internally(self):
        # Ising-only flow precesses about z at rate 4 J Q; P runs continuously past -pi
        traj = integrate(MeanFieldState(0.5, 1.0), 0.0, 3.0, ModelParams(h=0.0, T=1.0, J=1.0))
        assert np.max(np.abs(np.diff(traj.P))) < 0.1
        assert traj.P[-1] == pytest.approx(1.0 - 6.0, abs=1e-9)
        assert np.allclose(traj.Q, 0.5)


class TestStroboscopic:
    def test_ideal_alternation(self):
        s = stroboscopic(START, 4, IDEAL)
        assert np.allclose(s.with_initial, [1, -1, 1, -1, 1], atol=1e-8)
        assert list(s.columns) == ["n", "P", "Q", "sigma_y"]

    def test_x_axis_state_is_fixed(self):
        s = stroboscopic(MeanFieldState(0.0, 0.0), 6, IDEAL)
        assert np.allclose(s.with_initial, 0.0, atol=1e-12)

    def test_values_bounded(self):
        s = stroboscopic(START, 200, ModelParams.from_epsilon(0.05, 1.0, J=4.0, lam=0.05))
        assert np.all(np.abs(s.values) <= 1.0 + 1e-12)

    @pytest.mark.parametrize("start,convention", [(START, "spin"),
                                                  (MeanFieldState(0.0, 1.19), "pauli")])
    def test_step_convergence_on_regular_orbits(self, start, convention):
        a = stroboscopic(start, 100, FIG2A, 1000, convention=convention).values
        b = stroboscopic(start, 100, FIG2A, 2000, convention=convention).values
        assert np.max(np.abs(a - b)) <= 1e-6

    def test_chaotic_orbit_amplifies_step_differences(self):
        # the literal-energy orbit from (pi/2, 0) is not confined: tiny step-size
        # differences grow, which is why convergence is checked on regular orbits
        a = stroboscopic(START, 100, FIG2A, 1000).values
        b = stroboscopic(START, 100, FIG2A, 2000).values
        assert np.max(np.abs(a[:5] - b[:5])) < 1e-9
        assert np.max(np.abs(a - b)) > 1e-3

    def test_island_band_in_published_convention(self):
        # published JT=1 phase portrait: the +y start sits inside a period-2 island
        s = stroboscopic(START, 1200, FIG2A, convention="spin").with_initial
        even, odd = s[0::2], s[1::2]
        assert np.all(even > 0) and np.all(odd < 0)
        assert np.ptp(even) < 0.5 and np.ptp(odd) < 0.5

    def test_literal_energy_island_location(self):
        # with the literal energy, the JT=1 period-2 orbit sits at (+-1.186, 0);
        # pi/2 is outside the island, so the series is not confined
        p = ModelParams(h=math.pi, T=1.0, J=1.0)
        P, Q = one_period_map(1.1862, 0.0, p)
        P2, Q2 = one_period_map(P, Q, p)
        assert abs(wrap_angle(P2 - 1.1862)) < 5e-3 and abs(Q2) < 5e-3
        s = stroboscopic(START, 1200, FIG2A).with_initial
        assert np.ptp(s[0::2]) > 0.5

    def test_deterministic(self):
        a = stroboscopic(START, 50, FIG2A).values
        b = stroboscopic(START, 50, FIG2A).values
        assert np.array_equal(a, b)


def _jacobian_det(P, Q, params, d=1e-5):
    fp = np.array(one_period_map(P + d, Q, params)) - np.array(one_period_map(P - d, Q, params))
    fq = np.array(one_period_map(P, Q + d, params)) - np.array(one_period_map(P, Q - d, params))
    return (fp[0] * fq[1] - fp[1] * fq[0]) / (4 * d * d)


class TestPsos:
    @pytest.mark.parametrize("P,Q", [(0.3, 0.1), (1.5, -0.4), (-2.0, 0.6), (math.pi / 2, 0.0)])
    @pytest.mark.parametrize("JT", [1.0, 4.0])
    def test_area_preservation(self, P, Q, JT):
        p = ModelParams.from_epsilon(0.05, 1.0, J=JT, lam=0.05)
        assert abs(_jacobian_det(P, Q, p) - 1.0) <= 1e-4

    def test_zero_hamiltonian_fixes_every_seed(self):
        seeds = default_seed_grid(6, 5)
        cloud = psos(seeds, 3, ModelParams(h=0.0, T=1.0))
        expected = np.repeat(cloud.seeds, 4, axis=0)
        assert np.allclose(cloud.points, expected, atol=1e-12)

    def test_layout_and_pole_seeds(self):
        seeds = [MeanFieldState(0.0, 0.1), MeanFieldState(1.0, 0.0), MeanFieldState(0.2, -1.0)]
        cloud = psos(seeds, 5, FIG2A)
        assert cloud.skipped == [1]
        assert cloud.points.shape == (12, 2)
        assert list(cloud.seed_index) == [0] * 6 + [2] * 6
        assert list(cloud.n[:6]) == list(range(6))
        assert np.all(np.abs(cloud.points[:, 0]) <= math.pi)

    def test_default_grid(self):
        g = default_seed_grid()
        assert len(g) == 576
        P = np.array([s.P for s in g])
        Q = np.array([s.Q for s in g])
        assert P.max() == pytest.approx(math.pi) and P.min() > -math.pi
        assert Q.min() == pytest.approx(-0.95) and Q.max() == pytest.approx(0.95)

    def test_islands_near_half_pi_published_convention(self):
        # seeds around (+-pi/2, 0) stay confined, as in the published portrait
        p = ModelParams(h=math.pi, T=1.0, J=1.0)
        for P0 in (math.pi / 2, -math.pi / 2):
            s = stroboscopic(MeanFieldState(0.05, P0 + 0.05), 400, p, convention="spin")
            Q = s.columns["Q"]
            assert np.max(np.abs(Q)) < 0.3

    def test_strong_interaction_scatters(self):
        p = ModelParams.from_epsilon(0.05, 1.0, J=4.0, lam=0.05)
        seeds = [MeanFieldState(q, math.pi / 2 + dp) for q in (-0.05, 0.05) for dp in (-0.05, 0.05)]
        cloud = psos(seeds, 400, p)
        assert np.ptp(cloud.points[:, 1]) > 1.0


def test_state_helpers():
    s = MeanFieldState.from_spinor(local_spinor(ProductStateSpec(0.0, 1)))
    assert s.Q == pytest.approx(0.0) and s.P == pytest.approx(math.pi / 2)
    assert s.sigma_y == pytest.approx(1.0)
    b = MeanFieldState.from_bloch([0.0, -1.0, 0.0])
    assert b.P == pytest.approx(-math.pi / 2)
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        MeanFieldState(1.5, 0.0)

"""Tests for the comoving time stepper and the weighted decay experiment.

The headline checks: the front is a numerically stationary solution of the
stepper, the invariant region [0,1]^2 is preserved, the linearized weighted
stepper is the true linearization of the nonlinear one, and a small weighted
perturbation launched ahead of the front decays like (1+t)^{-3/2} in the
rescaled sup norm, both nonlinearly and linearly.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulledfront import simulate
from pulledfront.front import solve_front
from pulledfront.model import WeightFunction
from tests.conftest import REF_PARAMS


def _evolve(state, params, dc, t_end):
    while state.t < t_end - 1e-9:
        state = simulate.step(state, params, dc)
    return state


@pytest.fixture(scope="module")
def wide_profile(ref_dc):
    # decay runs need the +L boundary far ahead of the diffusive bump at
    # x ~ sqrt(t); on L=80 the leading-edge closure error is convectively
    # amplified back into the diagnostic window after t ~ 40
    return solve_front(REF_PARAMS, ref_dc, L=400.0, n=40000)


@pytest.fixture(scope="module")
def decay_diag(ref_dc, wide_profile):
    return simulate.run_decay_experiment(
        REF_PARAMS, ref_dc, wide_profile,
        perturbation_cfg=dict(center=8.0, width=2.0), T=200.0)


class TestStepper:
    def test_reaction_budget(self):
        # 0.25 * min(1, 1/r) with r = 0.2
        assert simulate.reaction_budget(REF_PARAMS) == pytest.approx(0.25)

    def test_cfl_guard(self, ref_dc, ref_profile):
        state = simulate.SimState(t=0.0, xi=ref_profile.grid,
                                  u=ref_profile.U.copy(),
                                  v=ref_profile.V.copy(), dt=0.3)
        with pytest.raises(simulate.CFLViolated):
            simulate.step(state, REF_PARAMS, ref_dc)

    def test_front_is_stationary(self, ref_dc, ref_profile):
        # after the initial boundary-closure transient relaxes, the per-step
        # change of the front under the stepper drops below 1e-8 per unit time
        dt = 0.2
        state = simulate.SimState(t=0.0, xi=ref_profile.grid,
                                  u=ref_profile.U.copy(),
                                  v=ref_profile.V.copy(), dt=dt)
        state = _evolve(state, REF_PARAMS, ref_dc, 5.0)
        nxt = simulate.step(state, REF_PARAMS, ref_dc)
        rate = max(np.max(np.abs(nxt.u - state.u)),
                   np.max(np.abs(nxt.v - state.v))) / dt
        assert rate < 1e-8

    def test_uniform_state_stationary_in_interior(self, ref_dc):
        # (u, v) = (1, 0) solves the PDE exactly; the Dirichlet row at +L
        # pins (0, 1) there, so exact stationarity holds away from the ends
        xi = np.linspace(-80.0, 80.0, 1601)
        u = np.ones_like(xi)
        v = np.zeros_like(xi)
        u[-1], v[-1] = 0.0, 1.0
        state = simulate.SimState(t=0.0, xi=xi, u=u, v=v, dt=0.2)
        state = _evolve(state, REF_PARAMS, ref_dc, 1.0)
        interior = np.abs(xi) <= 60.0
        assert np.max(np.abs(state.u[interior] - 1.0)) < 1e-10
        assert np.max(np.abs(state.v[interior])) < 1e-10

    def test_steady_residual_of_front(self, ref_dc, ref_profile):
        res = simulate.steady_residual(ref_profile.grid, ref_profile.U,
                                       ref_profile.V, REF_PARAMS,
                                       ref_dc.c_star)
        assert res < 1e-6

    @settings(max_examples=5, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_invariant_region(self, ref_dc, seed):
        # random smooth data in [0,1]^2 stays there under the IMEX stepper
        rng = np.random.default_rng(seed)
        xi = np.linspace(-40.0, 40.0, 801)
        kernel = np.exp(-np.linspace(-3, 3, 31) ** 2)
        kernel /= kernel.sum()

        def smooth01(raw):
            s = np.convolve(raw, kernel, mode="same")
            s -= s.min()
            return s / max(s.max(), 1e-12)

        u = smooth01(rng.uniform(0.0, 1.0, xi.size))
        v = smooth01(rng.uniform(0.0, 1.0, xi.size))
        state = simulate.SimState(t=0.0, xi=xi, u=u, v=v, dt=0.2)
        for _ in range(200):
            state = simulate.step(state, REF_PARAMS, ref_dc)
        assert np.all(state.u >= -1e-12) and np.all(state.u <= 1.0 + 1e-12)
        assert np.all(state.v >= -1e-12) and np.all(state.v <= 1.0 + 1e-12)


class TestWeightedPerturbation:
    def test_zero_on_front(self, ref_dc, ref_profile, ref_weight):
        state = simulate.SimState(t=0.0, xi=ref_profile.grid,
                                  u=ref_profile.U.copy(),
                                  v=ref_profile.V.copy(), dt=0.2)
        p, q, tp, tq = simulate.weighted_perturbation(state, ref_profile,
                                                      ref_weight)
        assert np.all(p == 0.0) and np.all(q == 0.0)
        assert tp == 0.0 and tq == 0.0

    def test_inverse_linear_bump(self, ref_dc, ref_profile, ref_weight):
        # u - U = omega/(1 + |x|) gives sup |p|/(1+|x|) = 1 at x = 0
        xi = ref_profile.grid
        omega = ref_weight(xi)
        state = simulate.SimState(
            t=0.0, xi=xi, u=ref_profile.U + omega / (1.0 + np.abs(xi)),
            v=ref_profile.V.copy(), dt=0.2)
        _, _, tp, tq = simulate.weighted_perturbation(state, ref_profile,
                                                      ref_weight)
        assert tp == pytest.approx(1.0, rel=1e-12)
        assert tq == 0.0

    def test_gaussian_bump(self, ref_dc, ref_profile, ref_weight):
        xi = ref_profile.grid
        omega = ref_weight(xi)
        state = simulate.SimState(
            t=0.0, xi=xi, u=ref_profile.U.copy(),
            v=ref_profile.V + omega * np.exp(-xi ** 2), dt=0.2)
        _, _, tp, tq = simulate.weighted_perturbation(state, ref_profile,
                                                      ref_weight)
        assert tq == pytest.approx(1.0, rel=1e-12)
        assert tp == 0.0


class TestLinearization:
    def test_linear_stepper_is_linearization(self, ref_dc, ref_profile,
                                             ref_weight):
        # background-differenced nonlinear run vs the weighted linear stepper;
        # the gap is first order in dt since the two discretizations differ
        xi = ref_profile.grid
        omega = ref_weight(xi)
        eps = 1e-5
        p0 = eps * np.exp(-((xi - 2.0)) ** 2)
        mask = omega >= 1e-8
        gaps = []
        for dt in (0.05, 0.025):
            pert = simulate.SimState(t=0.0, xi=xi, u=ref_profile.U + omega * p0,
                                     v=ref_profile.V + omega * p0, dt=dt)
            base = simulate.SimState(t=0.0, xi=xi, u=ref_profile.U.copy(),
                                     v=ref_profile.V.copy(), dt=dt)
            pert = _evolve(pert, REF_PARAMS, ref_dc, 5.0)
            base = _evolve(base, REF_PARAMS, ref_dc, 5.0)
            _, ph, qh = simulate.linear_evolution(
                REF_PARAMS, ref_dc, ref_profile, ref_weight, p0, p0, 5.0,
                dt=dt, sample_times=[5.0])
            dp = np.max(np.abs((pert.u - base.u) / omega - ph[0])[mask])
            dq = np.max(np.abs((pert.v - base.v) / omega - qh[0])[mask])
            scale = max(np.max(np.abs(ph[0][mask])), np.max(np.abs(qh[0][mask])))
            gaps.append(max(dp, dq) / scale)
        assert gaps[0] < 0.03
        assert gaps[1] < 0.7 * gaps[0]

    def test_zero_data_stays_zero(self, ref_dc, ref_profile, ref_weight):
        xi = ref_profile.grid
        z = np.zeros_like(xi)
        _, ph, qh = simulate.linear_evolution(REF_PARAMS, ref_dc, ref_profile,
                                              ref_weight, z, z, 2.0,
                                              sample_times=[2.0])
        assert np.all(ph == 0.0) and np.all(qh == 0.0)


class TestDecayExperiment:
    def test_exponent_is_minus_three_halves(self, decay_diag):
        assert decay_diag.exponent == pytest.approx(-1.5, abs=0.15)
        assert decay_diag.exponent_stderr < 0.05

    def test_diagnostics_decay(self, decay_diag):
        d = decay_diag
        assert np.all(d.theta_p > 0.0)
        assert d.theta_p[-1] < 0.02 * np.max(d.theta_p)
        assert d.theta_q[-1] < 0.02 * np.max(d.theta_q)

    def test_linear_exponent_matches(self, ref_dc, wide_profile, ref_weight,
                                     decay_diag):
        exponent, stderr = simulate.fit_linear_exponent(
            REF_PARAMS, ref_dc, wide_profile, ref_weight, T=200.0,
            center=8.0, width=2.0)
        assert exponent == pytest.approx(-1.5, abs=0.15)
        # nonlinear corrections are O(eps); the fitted exponents agree closely
        assert abs(exponent - decay_diag.exponent) < 0.05
        assert stderr < 0.05

    def test_mass_diagnostics_recorded(self, decay_diag):
        assert decay_diag.mass_p.shape == decay_diag.times.shape
        assert np.all(decay_diag.mass_p >= 0.0)
        assert decay_diag.mass_p[-1] < decay_diag.mass_p.max()

    def test_large_amplitude_rejected(self, ref_dc, ref_profile):
        with pytest.raises(simulate.PerturbationTooLarge):
            simulate.run_decay_experiment(
                REF_PARAMS, ref_dc, ref_profile,
                perturbation_cfg=dict(eps=0.5), T=40.0)

    def test_zero_perturbation_rejected(self, ref_dc, ref_profile):
        with pytest.raises(simulate.WindowTooShort):
            simulate.run_decay_experiment(
                REF_PARAMS, ref_dc, ref_profile,
                perturbation_cfg=dict(eps=0.0), T=40.0)

    def test_too_few_samples(self, ref_dc, ref_profile):
        with pytest.raises(simulate.WindowTooShort):
            simulate.run_decay_experiment(REF_PARAMS, ref_dc, ref_profile,
                                          T=40.0, n_samples=5)

    def test_growth_guard(self, ref_dc, ref_profile):
        # with a near-identity weight the essential spectrum ahead of the
        # front is unstable (rate 1 - a); the diagnostic must trip the guard
        flat = WeightFunction(delta=1e-6, gamma_star=1e-6)
        with pytest.raises(simulate.PerturbationTooLarge):
            simulate.run_decay_experiment(
                REF_PARAMS, ref_dc, ref_profile,
                perturbation_cfg=dict(center=30.0, width=2.0),
                T=80.0, weight=flat)

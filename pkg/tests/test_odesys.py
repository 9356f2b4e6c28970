import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulledfront import odesys
from pulledfront.front import solve_front
from pulledfront.model import (
    ModelParameters,
    SpectralPoint,
    WeightFunction,
    derive_constants,
)

from conftest import REF_PARAMS, RESONANT_PARAMS


@pytest.fixture(scope="session")
def resonant_field():
    dc = derive_constants(RESONANT_PARAMS)
    prof = solve_front(RESONANT_PARAMS, dc, L=170.0, n=17000)
    wgt = WeightFunction(delta=dc.delta, gamma_star=dc.gamma_star)
    return odesys.CoefficientField(prof, wgt, RESONANT_PARAMS, dc)


finite_complex = st.complex_numbers(min_magnitude=0.0, max_magnitude=10.0,
                                    allow_nan=False, allow_infinity=False)


def complex_vectors(n):
    return st.lists(finite_complex, min_size=n, max_size=n).map(np.array)


class TestWedgeAlgebra:
    @given(complex_vectors(4), complex_vectors(4), complex_vectors(4),
           complex_vectors(4))
    @settings(max_examples=50, deadline=None)
    def test_pairing_is_determinant(self, a, b, c, d):
        det = np.linalg.det(np.column_stack([a, b, c, d]))
        pairing = odesys.wedge_pairing(odesys.wedge(a, b),
                                       odesys.wedge(c, d))
        assert abs(pairing - det) <= 1e-9 * max(1.0, abs(det))

    @given(complex_vectors(16), complex_vectors(4), complex_vectors(4))
    @settings(max_examples=50, deadline=None)
    def test_induced_action(self, entries, u, v):
        A = entries.reshape(4, 4)
        lhs = odesys.wedge(A @ u, v) + odesys.wedge(u, A @ v)
        rhs = odesys.wedge_matrix(A) @ odesys.wedge(u, v)
        scale = max(1.0, np.abs(lhs).max())
        assert np.abs(lhs - rhs).max() <= 1e-9 * scale

    def test_pairing_antisymmetry_of_arguments(self):
        rng = np.random.default_rng(7)
        a, b, c, d = rng.standard_normal((4, 4))
        xi, eta = odesys.wedge(a, b), odesys.wedge(c, d)
        # swapping the two 2-forms swaps two column pairs: det is invariant
        assert odesys.wedge_pairing(xi, eta) == pytest.approx(
            odesys.wedge_pairing(eta, xi))


class TestKernelQuadrature:
    def test_phi_series_matches_direct_at_switch(self):
        for z in (0.34, 0.36, 0.34j, -0.34 + 0.1j):
            for k in range(1, 5):
                series = odesys._phi_function(0.999 * z, k)
                direct = odesys._phi_function(1.001 * z, k)
                assert abs(series - direct) <= 1e-3 * abs(series)

    def test_phi_one_closed_form(self):
        for z in (0.5, 2.0, -1.0 + 3.0j):
            assert odesys._phi_function(z, 1) == pytest.approx(
                (np.exp(z) - 1.0) / z, rel=1e-12)

    def test_phi_recurrence(self):
        # phi_{k-1}(z) = z phi_k(z) + 1/(k-1)!
        for z in (0.1, 0.3j, 1.5, -2.0 + 1.0j):
            for k in range(2, 5):
                lhs = odesys._phi_function(z, k - 1)
                rhs = z * odesys._phi_function(z, k) \
                    + 1.0 / math.factorial(k - 1)
                assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    def test_exp_recurrence_matches_loop(self):
        rng = np.random.default_rng(3)
        Q = rng.standard_normal(300) + 1j * rng.standard_normal(300)
        E = np.exp(-0.03 + 0.2j)
        fast = odesys._exp_recurrence(E, Q, block=64)
        slow = np.zeros(301, dtype=complex)
        for k in range(300):
            slow[k + 1] = E * slow[k] + Q[k]
        assert np.abs(fast - slow).max() <= 1e-12 * np.abs(slow).max()

    def test_exp_recurrence_block_size_irrelevant(self):
        rng = np.random.default_rng(4)
        Q = rng.standard_normal(257) + 1j * rng.standard_normal(257)
        E = np.exp(-0.5)
        a = odesys._exp_recurrence(E, Q, block=7)
        b = odesys._exp_recurrence(E, Q, block=128)
        assert np.abs(a - b).max() <= 1e-11 * np.abs(b).max()

    def test_quadrature_solves_scalar_model(self):
        # theta' = -theta + e^{-2s} on one exponential mode; exact solution
        # theta = e^{-s} - e^{-2s} has the canonical zero value at s = 0
        h = 0.02
        s = np.arange(0, 10 + h / 2, h)
        wgt = [math.factorial(m) * h ** (m + 1)
               * odesys._phi_function(-1.0 * h, m + 1) for m in range(4)]
        from scipy.interpolate import CubicSpline
        c = CubicSpline(s, np.exp(-2.0 * s)).c
        Q = sum(c[3 - m] * wgt[m] for m in range(4))
        theta = odesys._exp_recurrence(np.exp(-h), Q.astype(complex))
        exact = np.exp(-s) - np.exp(-2.0 * s)
        assert np.abs(theta - exact).max() <= 1e-9


class TestCoefficientField:
    def test_limits_attained(self, ref_field):
        lam = 0.3 + 0.1j
        for x, lim in ((150.0, ref_field.matrix_plus(lam)),
                       (-150.0, ref_field.matrix_minus(lam))):
            diff = np.abs(ref_field.matrix(x, lam) - lim).max()
            assert diff <= 1e-10

    def test_remainder_lambda_independent(self, ref_field):
        x = np.array([-3.0, -0.5, 0.0, 0.5, 2.0, 7.0])
        r1 = ref_field.matrix(x, 0.2) - np.where(
            x[:, None, None] >= 0, ref_field.matrix_plus(0.2),
            ref_field.matrix_minus(0.2))
        r2 = ref_field.matrix(x, 5.0 + 2.0j) - np.where(
            x[:, None, None] >= 0, ref_field.matrix_plus(5.0 + 2.0j),
            ref_field.matrix_minus(5.0 + 2.0j))
        assert np.abs(r1 - r2).max() <= 1e-12

    def test_measured_decay_rates(self, ref_field, ref_dc):
        assert ref_field.alpha_plus > ref_dc.alpha
        assert ref_field.alpha_minus > ref_dc.alpha
        assert ref_field.cutoff(+1) < ref_field.cutoff(-1)
        assert ref_field.cutoff(-1) <= ref_field.profile.L - 2.0

    def test_cutoff_meets_threshold(self, ref_field):
        for side in (+1, -1):
            X = ref_field.cutoff(side, threshold=1e-10)
            tail = np.abs(ref_field.remainder(side * X)).max()
            assert tail <= 1e-9   # fit constant is approximate, one decade

    def test_decay_too_slow(self, spectral_profile, ref_weight, ref_dc):
        greedy = dataclasses.replace(ref_dc, alpha=0.5)
        with pytest.raises(odesys.DecayTooSlow):
            odesys.CoefficientField(spectral_profile, ref_weight,
                                    REF_PARAMS, greedy)


class TestBoundedBasis:
    def test_modes_solve_the_system(self, ref_field):
        lam = 0.1
        basis = odesys.solution_basis(ref_field, lam)
        h = 0.02
        stencil = h * np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
        for name, x0 in (("phi1_plus", 0.5), ("phi1_plus", 3.0),
                         ("phi2_plus", 2.0), ("phi1_minus", -4.0),
                         ("phi2_minus", -0.5)):
            mode = basis.modes[name]
            P = odesys.continue_mode(ref_field, lam, mode, x0 + stencil)
            dP = (-P[:, 4] + 8 * P[:, 3] - 8 * P[:, 1] + P[:, 0]) / (12 * h)
            res = dP - ref_field.matrix(x0, lam) @ P[:, 2]
            assert np.abs(res).max() <= 1e-5 * max(1.0, np.abs(P).max())

    def test_corrections_vanish_at_far_end(self, ref_field):
        basis = odesys.solution_basis(ref_field, 0.1)
        for name in ("phi1_plus", "phi2_plus", "phi1_minus", "phi2_minus"):
            mode = basis.modes[name]
            assert basis.correction_norm(name, mode.x_far) <= 1e-8
            # the normalization pins the amplitude of the mode's own vector
            assert np.abs(mode.rescaled(mode.x_far) - mode.w).max() <= 1e-8

    def test_basis_well_conditioned(self, ref_field):
        basis = odesys.solution_basis(ref_field, 0.1)
        assert np.linalg.cond(basis.matrix_at_zero()) < 1e3

    def test_truncation_insensitive(self, ref_field):
        lam = 0.1
        ref = odesys.solution_basis(ref_field, lam).matrix_at_zero()
        Xp, Xm = ref_field.cutoff(+1), ref_field.cutoff(-1)
        other = odesys.solution_basis(ref_field, lam, X_plus=Xp - 4.0,
                                      X_minus=Xm - 4.0).matrix_at_zero()
        assert np.abs(other - ref).max() <= 1e-8

    def test_conjugate_symmetry(self, ref_field):
        lam = 0.3 + 0.4j
        upper = odesys.solution_basis(ref_field, lam).matrix_at_zero()
        lower = odesys.solution_basis(
            ref_field, lam.conjugate()).matrix_at_zero()
        assert np.abs(upper.conj() - lower).max() <= 1e-10

    def test_growing_pair_available(self, ref_field):
        basis = odesys.solution_basis(ref_field, 0.1, include_psi=True)
        full = np.column_stack([basis.at_zero(n) for n in
                                ("phi1_plus", "phi2_plus", "psi1_plus",
                                 "psi2_plus")])
        # the four +inf solutions span the phase space
        assert abs(np.linalg.det(full)) > 1e-3

    def test_branch_cut_rejected(self, ref_field):
        with pytest.raises(Exception):
            odesys.solution_basis(ref_field, -0.5)

    def test_separation_guard(self):
        with pytest.raises(odesys.OrderingViolated):
            odesys._check_separation([1.0, 1.0 + 1e-12, 2.0, 3.0], 1.0)
        with pytest.raises(odesys.OrderingViolated):
            odesys._check_separation([1.0, 2.0, 3.0, 4.0], 5.0)


class TestWronskianLaws:
    """The determinant of the full basis grows with the trace of the
    coefficient matrix; on |x| >= 1 the weight contributions integrate to a
    constant, so the growth factor is the pure sum of asymptotic rates.
    This holds exactly for the continuous problem and is insensitive to
    profile discretization bias, so it isolates the solver error."""

    @pytest.mark.parametrize("lam", [0.01, 0.1, np.exp(1j * np.pi / 4)])
    def test_growth_laws(self, ref_field, lam):
        basis = odesys.solution_basis(ref_field, lam)
        W0 = np.linalg.det(basis.matrix_at_zero())
        _, ed = odesys._eigendata_for(ref_field, lam)
        for xs, rate_sum in (
                (np.linspace(1.0, 5.0, 9), ed.nu_v_minus + ed.nu_v_plus),
                (np.linspace(-5.0, -1.0, 9),
                 ed.mu_u_plus + ed.mu_u_minus + ed.mu_v_plus
                 + ed.mu_v_minus)):
            M = odesys.basis_matrix_at(ref_field, lam, basis, xs)
            expected = W0 * np.exp(rate_sum * xs)
            err = np.abs(np.linalg.det(M) - expected) / np.abs(expected)
            assert err.max() <= 1e-7


class TestTwoForms:
    @pytest.mark.parametrize("lam", [0.1, np.exp(1j * np.pi / 4)])
    def test_pairing_matches_direct_determinant(self, ref_field, lam):
        basis = odesys.solution_basis(ref_field, lam)
        W0 = np.linalg.det(basis.matrix_at_zero())
        tf = odesys.integrate_two_forms(ref_field, lam)
        W_tf = odesys.wedge_pairing(tf.y_plus0, tf.y_minus0)
        assert abs(W_tf - W0) <= 1e-7 * abs(W0)

    def test_normalized_flow_stays_bounded(self, ref_field):
        tf = odesys.integrate_two_forms(ref_field, 0.1)
        lo, hi = tf.norm_range
        assert lo > 1e-3
        assert hi < 1e3

    def test_system_evaluator(self, ref_field):
        ev = odesys.two_form_system(ref_field, 0.1)
        M = ev(0.7)
        assert M.shape == (6, 6)
        direct = odesys.wedge_matrix(ref_field.matrix(0.7, 0.1))
        assert np.abs(M - direct).max() == 0.0

    def test_resonant_minus_basis_degenerates(self, resonant_field):
        with pytest.raises(odesys.OrderingViolated):
            odesys.bounded_basis_minus(resonant_field, 0.1)

    def test_resonant_two_form_still_works(self, resonant_field):
        # the decaying 2-plane at -inf remains a simple eigenvector of the
        # induced 6-dim system even when the 4-dim rates collide
        tf = odesys.integrate_two_forms(resonant_field, 0.1)
        W = odesys.wedge_pairing(tf.y_plus0, tf.y_minus0)
        assert np.isfinite(W)
        assert abs(W) > 1e-6
        lo, hi = tf.norm_range
        assert lo > 1e-3 and hi < 1e3


class TestContinuation:
    def test_agrees_inside_home_interval(self, ref_field):
        lam = 0.1
        basis = odesys.solution_basis(ref_field, lam)
        mode = basis.modes["phi1_plus"]
        xs = np.array([0.3, 1.7, 6.0])
        direct = mode.value(xs)
        continued = odesys.continue_mode(ref_field, lam, mode, xs)
        assert np.abs(direct - continued).max() <= 1e-12

    def test_smooth_across_home_boundary(self, ref_field):
        lam = 0.1
        basis = odesys.solution_basis(ref_field, lam)
        mode = basis.modes["phi1_minus"]   # home interval is x <= 0
        xs = np.array([-1e-4, 1e-4])
        vals = odesys.continue_mode(ref_field, lam, mode, xs)
        assert np.abs(vals[:, 1] - vals[:, 0]).max() <= 1e-3 * \
            np.abs(vals).max()

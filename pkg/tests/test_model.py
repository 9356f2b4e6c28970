import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pulledfront.model import (
    ModelParameters,
    SpectralPoint,
    WeightFunction,
    BranchCut,
    NonPositive,
    NotNegative,
    ViolatesMonotone,
    admissible_delta_range,
    asymptotic_eigendata,
    asymptotic_matrix_minus,
    asymptotic_matrix_plus,
    compute_M_s,
    derive_constants,
    fredholm_borders,
    sector_contains,
    spectral_margin,
    validate_parameters,
)

REF = ModelParameters(a=0.75, b=2.0, sigma=1.0, r=0.2)


class TestValidateParameters:
    def test_symmetric_point_is_valid(self):
        dc = validate_parameters(0.5, 2.0, 1.0, 1.0)
        assert dc.c_star == pytest.approx(1.41421356, abs=1e-8)
        assert dc.gamma_star == pytest.approx(0.70710678, abs=1e-8)

    def test_reference_point(self):
        dc = validate_parameters(0.75, 2.0, 1.0, 0.2)
        assert dc.c_star == pytest.approx(1.0)
        assert dc.gamma_star == pytest.approx(0.5)

    def test_monotonicity_violation(self):
        with pytest.raises(ViolatesMonotone):
            validate_parameters(1.2, 2.0, 1.0, 1.0)

    def test_nonpositive_rate(self):
        with pytest.raises(NonPositive):
            validate_parameters(0.5, 2.0, 1.0, -1.0)
        with pytest.raises(NonPositive):
            validate_parameters(0.5, 2.0, 2.5, 1.0)


class TestDeltaRange:
    def test_reference_interval(self):
        lo, hi = admissible_delta_range(REF)
        assert lo == 0.0
        assert hi == pytest.approx(0.17082039, abs=1e-8)

    def test_equal_branches(self):
        lo, hi = admissible_delta_range(ModelParameters(0.75, 2.0, 1.0, 1.0))
        assert hi == pytest.approx(0.61803399, abs=1e-8)

    def test_degenerate_b_limit(self):
        # as b -> 1+ the second branch forces the range shut
        _, hi = admissible_delta_range(ModelParameters(0.75, 1.0 + 1e-10, 1.0, 1.0))
        assert 0.0 < hi < 1e-4

    def test_range_matches_margin_sign(self):
        # the admissible interval is exactly where the margin stays negative
        # on the two delta-dependent branches
        _, hi = admissible_delta_range(REF)
        c, sig, r, b = 1.0, REF.sigma, REF.r, REF.b
        for delta in np.linspace(1e-4, 2.0 * hi, 100):
            branch_u = -1.0 + c * delta + delta ** 2
            branch_v = r * (1.0 - b) + c * delta + sig * delta ** 2
            inside = delta < hi
            assert (max(branch_u, branch_v) < 0.0) == inside


class TestSpectralMargin:
    def test_reference_value(self):
        assert spectral_margin(REF, 0.1) == pytest.approx(-0.09, abs=1e-12)

    def test_zero_delta_negative(self):
        assert spectral_margin(REF, 0.0) < 0.0

    def test_boundary_delta_rejected(self):
        _, hi = admissible_delta_range(REF)
        with pytest.raises(NotNegative):
            spectral_margin(REF, hi)


class TestFredholmBorders:
    def test_u_plus_is_negative_halfline(self):
        out = fredholm_borders(REF, 0.085, np.linspace(-3, 3, 101))
        curve = out["curves"]["u_plus"]
        assert np.all(curve.imag == 0.0)
        assert np.all(curve.real <= 0.0)
        assert out["max_real"]["u_plus"] == pytest.approx(0.0)

    def test_u_minus_vertex(self):
        delta = 0.085
        out = fredholm_borders(REF, delta, np.array([0.0]))
        vertex = out["curves"]["u_minus"][0]
        assert vertex.real == pytest.approx(-1.0 + delta + delta ** 2)
        assert vertex.real < 0.0

    def test_v_plus_vertex_is_sup(self):
        out = fredholm_borders(REF, 0.085, np.linspace(-5, 5, 1001))
        expected = -REF.r + (REF.sigma - 2.0) * 0.25
        assert out["max_real"]["v_plus"] == pytest.approx(expected, abs=1e-3)

    def test_three_parabolas_strictly_stable(self):
        out = fredholm_borders(REF, 0.085, np.linspace(-10, 10, 2001))
        for name in ("u_minus", "v_minus", "v_plus"):
            assert out["max_real"][name] < 0.0


class TestSector:
    def test_origin_inside(self):
        assert sector_contains(0.0, 0.05, 1.0)

    def test_left_of_vertex_outside(self):
        assert not sector_contains(-0.05 - 1.0, 0.05, 1.0)

    @given(st.floats(-100.0, 100.0))
    def test_boundary_inclusive(self, t):
        delta0, delta1 = 0.05, 1.0
        lam = complex(-delta0 - delta1 * abs(t), t)
        assert sector_contains(lam, delta0, delta1)

    @given(
        st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False),
        st.floats(1e-3, 10.0),
        st.floats(1e-3, 10.0),
    )
    def test_right_half_plane_always_inside(self, lam, delta0, delta1):
        if lam.real >= 0.0:
            assert sector_contains(lam, delta0, delta1)


class TestEigenData:
    def test_strong_rates_at_origin(self):
        ed = asymptotic_eigendata(0.0, REF, 0.1)
        assert ed.nu_v_plus == pytest.approx(0.67082039, abs=1e-8)
        assert ed.nu_v_minus == pytest.approx(-0.67082039, abs=1e-8)
        assert ed.y_v_plus == pytest.approx(-0.88888889, abs=1e-8)

    def test_minus_side_rates_at_origin(self):
        ed = asymptotic_eigendata(0.0, REF, 0.1)
        assert ed.mu_u_plus == pytest.approx(0.51803399, abs=1e-8)
        assert ed.mu_u_minus == pytest.approx(-1.71803399, abs=1e-8)
        assert ed.mu_v_plus == pytest.approx(0.07082039, abs=1e-8)
        assert ed.mu_v_minus == pytest.approx(-1.27082039, abs=1e-8)

    def test_eigen_residual_spot(self):
        lam = 0.3 + 0.1j
        ed = asymptotic_eigendata(lam, REF, 0.085)
        mat = asymptotic_matrix_plus(lam, REF)
        res = np.max(np.abs(mat @ ed.e_u_plus - ed.point.mu * ed.e_u_plus))
        assert res <= 1e-12

    def test_branch_cut_rejected(self):
        with pytest.raises(BranchCut):
            SpectralPoint(-1.0)

    def test_eigen_residuals_on_grid(self):
        # all eight formulas reproduce the spectrum of the explicit matrices
        rng = np.random.default_rng(7)
        mags = rng.uniform(1e-3, 5.0, 100)
        args = rng.uniform(-0.95 * math.pi, 0.95 * math.pi, 100)
        for mag, arg in zip(mags, args):
            lam = mag * np.exp(1j * arg)
            ed = asymptotic_eigendata(lam, REF, 0.085)
            ap = asymptotic_matrix_plus(lam, REF)
            am = asymptotic_matrix_minus(lam, REF, 0.085)
            pairs = [
                (ap, ed.e_u_plus, ed.point.mu),
                (ap, ed.e_u_minus, -ed.point.mu),
                (ap, ed.e_v_plus, ed.nu_v_plus),
                (ap, ed.e_v_minus, ed.nu_v_minus),
                (am, ed.eps_u_plus, ed.mu_u_plus),
                (am, ed.eps_u_minus, ed.mu_u_minus),
                (am, ed.eps_v_plus, ed.mu_v_plus),
                (am, ed.eps_v_minus, ed.mu_v_minus),
            ]
            for mat, vec, rate in pairs:
                scale = max(1.0, abs(rate))
                assert np.max(np.abs(mat @ vec - rate * vec)) <= 1e-10 * scale


class TestSmallRadius:
    def test_positive(self):
        assert compute_M_s(REF, 0.085) > 0.0

    def test_ordering_inside_and_outside(self):
        m_s = compute_M_s(REF, 0.085)
        inside = asymptotic_eigendata(0.5 * m_s, REF, 0.085)
        assert inside.ordering_ok
        outside = asymptotic_eigendata(10.0 * m_s, REF, 0.085)
        assert not outside.ordering_ok


class TestWeight:
    def setup_method(self):
        self.w = WeightFunction(delta=0.085, gamma_star=0.5)

    def test_exact_values(self):
        assert self.w(0.0) == pytest.approx(1.0, abs=1e-15)
        assert self.w(2.0) == pytest.approx(math.exp(-1.0))
        assert self.w(-2.0) == pytest.approx(math.exp(-0.17))

    def test_positive_everywhere(self):
        xs = np.linspace(-50, 50, 2001)
        assert np.all(self.w(xs) > 0.0)

    def test_c2_at_seams(self):
        # one-sided limits of omega, omega'/omega and omega''/omega agree;
        # h is small enough that variation within a branch is negligible
        h = 1e-8
        for seam in (-1.0, 1.0):
            for fn in (self.w, self.w.slope_ratio, self.w.curvature_ratio):
                left = fn(seam - h)
                right = fn(seam + h)
                assert abs(right - left) <= 1e-6 * max(1.0, abs(left))

    def test_slope_ratio_matches_difference_quotient(self):
        xs = np.linspace(-0.9, 0.9, 7)
        h = 1e-6
        for x in xs:
            numeric = (self.w.log_weight(x + h) - self.w.log_weight(x - h)) / (2 * h)
            assert self.w.slope_ratio(x) == pytest.approx(numeric, abs=1e-6)

    @given(st.floats(0.01, 0.17), st.floats(0.26, 1.0))
    @settings(max_examples=25, deadline=None)
    def test_seam_values_any_rates(self, delta, gamma):
        w = WeightFunction(delta=delta, gamma_star=gamma)
        assert w(1.0) == pytest.approx(math.exp(-gamma), rel=1e-12)
        assert w(-1.0) == pytest.approx(math.exp(-delta), rel=1e-12)
        assert w(0.0) == pytest.approx(1.0, abs=1e-12)


class TestDeriveConstants:
    def test_reference_bundle(self):
        dc = derive_constants(REF, delta=0.085)
        assert dc.delta == 0.085
        assert dc.iota < 0.0
        assert 0.0 < dc.alpha < min(dc.delta, dc.gamma_star)
        assert dc.M_s > 0.0
        assert dc.M_l == pytest.approx(100.0 * (1.0 + 0.2 + 0.25))
        assert dc.delta0 == pytest.approx(0.5 * abs(dc.iota))
        assert 0.0 < dc.delta1 <= 1.0

    @pytest.mark.parametrize("params,delta", [
        (REF, 0.085), (REF, None),
        (ModelParameters(0.75, 1.4, 1.0, 2.5), None),
        (ModelParameters(0.75, 1.4, 1.2, 4.0), None),
    ])
    def test_sector_avoids_essential_borders(self, params, delta):
        # every sampled border point with nonzero imaginary part must lie
        # strictly outside the sector (the real-axis borders are excluded;
        # contours indent around them separately)
        dc = derive_constants(params, delta=delta)
        borders = fredholm_borders(params, dc.delta, np.linspace(-40, 40,
                                                                 8001))
        for curve in borders["curves"].values():
            off_axis = curve[np.abs(curve.imag) > 1e-12]
            assert not any(sector_contains(z, dc.delta0, dc.delta1)
                           for z in off_axis)

    def test_default_delta_is_midpoint(self):
        dc = derive_constants(REF)
        _, hi = admissible_delta_range(REF)
        assert dc.delta == pytest.approx(0.5 * hi)

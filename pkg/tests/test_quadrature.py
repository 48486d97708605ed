import numpy as np
import pytest

from hismhd import quadrature
from hismhd.quadrature import (
    adaptive_panel_integral,
    delta_scaling_report,
    fg_cross_integral,
    multiplier_bounds_check,
    profile_normalisation,
    radial_profile,
)


class TestRadialProfile:
    def test_support(self):
        r = np.array([0.7, 0.76, 1.0, 1.24, 1.3])
        vals = radial_profile(r, 0.25)
        assert vals[0] == 0.0 and vals[-1] == 0.0
        assert vals[2] == pytest.approx(1.0)

    def test_normalisation_integrates_to_budget(self):
        delta, m1 = 0.2, 3.0
        amp = profile_normalisation(delta, m1)
        r = np.linspace(1 - delta, 1 + delta, 200001)
        integral = 4 * np.pi * np.trapezoid(amp * radial_profile(r, delta) * r**2, r)
        assert integral == pytest.approx(m1, rel=1e-8)


class TestAdaptivePanels:
    def test_polynomial_exact(self):
        res = adaptive_panel_integral(lambda x, y: x * y**2, 0.0, 2.0, 0.0, 1.0)
        assert res.value == pytest.approx(2.0 / 3.0, rel=1e-12)

    def test_refinement_reduces_error_estimate(self):
        def bumpy(x, y):
            return np.exp(-50 * ((x - 0.3) ** 2 + (y - 0.6) ** 2))

        loose = adaptive_panel_integral(bumpy, 0, 1, 0, 1, rtol=1e-3)
        tight = adaptive_panel_integral(bumpy, 0, 1, 0, 1, rtol=1e-9)
        assert tight.error_estimate < 0.5 * max(loose.error_estimate, 1e-300)
        assert tight.value == pytest.approx(loose.value, rel=1e-3)
        assert tight.refinements >= loose.refinements


class TestCrossIntegral:
    def test_zero_delta(self):
        assert fg_cross_integral(0.0, 1.0, 1.0, 2.0).value == 0.0

    def test_symmetric_kernel_vanishes(self):
        res = fg_cross_integral(0.25, 2.0, nu=1.0, mu=1.0)
        assert res.value == pytest.approx(0.0, abs=1e-14)

    def test_delta_out_of_range(self):
        with pytest.raises(ValueError):
            fg_cross_integral(0.7, 1.0, 1.0, 2.0)

    def test_time_truncation_converges_to_full(self):
        full = fg_cross_integral(0.25, 1.0, 1.0, 2.0).value
        truncated = fg_cross_integral(0.25, 1.0, 1.0, 2.0, t_max=80.0).value
        assert truncated == pytest.approx(full, rel=1e-6)
        short = fg_cross_integral(0.25, 1.0, 1.0, 2.0, t_max=0.1).value
        assert short < full

    @pytest.mark.parametrize("alpha", [0.0, 1.0, 2.0])
    def test_delta_scaling_linear(self, alpha):
        rep = delta_scaling_report(alpha, nu=1.0, mu=2.0)
        assert abs(rep.exponent - 1.0) <= 0.15
        assert rep.values[0] > rep.values[1] > rep.values[2] > 0.0


class TestMultiplierBounds:
    def test_zero_delta_vanishes(self):
        for alpha in (0.0, 1.0, 2.0):
            rep = multiplier_bounds_check(0.0, alpha)
            assert rep.sup_quadratic_over_frac == 0.0
            assert rep.sup_frac_over_quadratic == 0.0

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 2.0])
    def test_suprema_match_corner_closed_forms(self, alpha):
        # independent oracle: the maxima sit at the annulus corners
        # (s, r) = (1 + delta, 1 - delta)
        for delta in (0.25, 0.125, 0.0625):
            rep = multiplier_bounds_check(delta, alpha)
            sup1 = 4.0 * delta / (1.0 - delta) ** alpha
            sup2 = ((1 + delta) ** alpha - (1 - delta) ** alpha) / (1 - delta) ** 2
            assert rep.sup_quadratic_over_frac == pytest.approx(sup1, rel=1e-4)
            assert rep.sup_frac_over_quadratic == pytest.approx(sup2, rel=1e-4)

    def test_nondecreasing_in_delta(self):
        for alpha in (0.0, 1.0, 2.0):
            sups = [multiplier_bounds_check(d, alpha).sup_quadratic_over_frac
                    for d in (0.0625, 0.125, 0.25, 0.5)]
            assert all(b > a for a, b in zip(sups, sups[1:]))

    def test_stated_constant_flags(self):
        # the first stated bound is exceeded by the realized supremum
        # (4 delta + higher order against 3^{1-alpha} delta); the second holds
        rep = multiplier_bounds_check(0.25, 1.0)
        assert rep.violates_stated[0]
        assert not rep.violates_stated[1]

    def test_exact_linearity_at_alpha_zero(self):
        a = multiplier_bounds_check(0.25, 0.0).sup_quadratic_over_frac
        b = multiplier_bounds_check(0.125, 0.0).sup_quadratic_over_frac
        assert b == pytest.approx(0.5 * a, rel=1e-9)

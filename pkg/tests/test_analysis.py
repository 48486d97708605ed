import numpy as np
import pytest

from hismhd import analysis, dynamics, spectral
from hismhd.analysis import (
    ReferenceFlows,
    decay_rate_check,
    fit_decay_rate,
    forcing_fields,
    interaction_bounds_eval,
    perturbation_extract,
    perturbation_residual,
    theorem_monitor,
)
from hismhd.dynamics import State

from conftest import make_params, rel_err


@pytest.fixture(scope="module")
def flows16(grid16):
    return ReferenceFlows(grid16, make_params(nu=0.8, mu=1.2, alpha=1.0,
                                              alpha1=1.0, alpha2=0.7, sigma=0.5, kappa=0.1))


class TestReferenceFlows:
    def test_initial_values(self, grid16, flows16):
        assert np.array_equal(flows16.free_flow("f", 0.0), flows16.u02)
        assert np.array_equal(flows16.free_flow("g", 0.0), flows16.b02)

    def test_single_shell_l2_decay(self, grid16, flows16):
        # unit-shell data: every mode decays at exactly nu (alpha exponent on |k|=1)
        t = 0.9
        norm0 = spectral.l2_norm(grid16, flows16.u02)
        norm_t = spectral.l2_norm(grid16, flows16.free_flow("f", t))
        assert norm_t == pytest.approx(np.exp(-0.8 * t) * norm0, rel=1e-12)

    def test_curl_eigen_preserved(self, grid16, flows16):
        for t in (0.0, 0.5, 2.0):
            ft = flows16.free_flow("f", t)
            defect = spectral.sobolev_norm(
                grid16, spectral.curl(grid16, ft) - spectral.frac_laplacian(grid16, ft, 1.0), 3.0
            ) / spectral.sobolev_norm(grid16, ft, 3.0)
            assert defect < 1e-12

    def test_negative_time_rejected(self, flows16):
        with pytest.raises(ValueError):
            flows16.free_flow("f", -0.5)


class TestDecayRateCheck:
    def test_exact_rates_and_floors(self, flows16):
        t_grid = np.linspace(0.0, 2.0, 9)
        for which, rate in (("f", 0.8), ("g", 1.2)):
            rep = decay_rate_check(flows16, which, t_grid)
            assert rep.fits[f"sup_norm_{which}"].rate == pytest.approx(rate, rel=1e-6)
            assert rep.passed

    def test_alpha_one_floor(self, grid16):
        fl = ReferenceFlows(grid16, make_params(nu=1.0, alpha=1.0))
        rep = decay_rate_check(fl, "f", np.linspace(0, 2, 9))
        assert rep.fits["sup_norm_f"].rate == pytest.approx(1.0, rel=1e-6)
        assert rep.expected_rates["floor"] == pytest.approx(0.5)

    def test_needs_enough_samples(self, flows16):
        with pytest.raises(ValueError):
            decay_rate_check(flows16, "f", np.linspace(0, 1, 5))

    def test_degenerate_fit_rejected(self):
        with pytest.raises(ValueError):
            fit_decay_rate(np.linspace(0, 1, 9), np.zeros(9))
        with pytest.raises(ValueError):
            fit_decay_rate(np.linspace(0, 1, 9), np.ones(9))


class TestLemma23:
    def test_rate_relations(self, grid16):
        fl = ReferenceFlows(grid16, make_params(nu=0.8, mu=1.2, alpha=1.0,
                                                alpha1=1.0, alpha2=0.7))
        rep = interaction_bounds_eval(fl, np.linspace(0.0, 1.5, 8))
        assert rep.passed
        assert rep.fits["h3_g_cross_curl_g"].rate == pytest.approx(2 * 1.2, rel=0.02)
        assert rep.fits["h3_cubic_g"].rate == pytest.approx(3 * 1.2, rel=0.02)

    def test_alpha2_zero_degenerates(self, grid16):
        fl = ReferenceFlows(grid16, make_params(alpha1=1.0, alpha2=0.0))
        rep = interaction_bounds_eval(fl, np.linspace(0.0, 1.0, 8))
        assert np.max(rep.series["w5inf_g"]) == 0.0
        assert np.max(rep.series["h3_f_cross_g"]) == 0.0
        assert rep.metadata["cross_integral"] == pytest.approx(0.0, abs=1e-12)

    def test_unit_shell_beltrami_cancellation_with_full_plateau(self, grid16):
        # chi == 1 and delta_eff = 0: f x curl f = f x f = 0 pointwise
        fl = ReferenceFlows(grid16, make_params(alpha1=1.0, alpha2=0.0, m0=2 * np.pi))
        rep = interaction_bounds_eval(fl, np.linspace(0.0, 1.0, 8))
        scale = spectral.sobolev_norm(grid16, fl.cutoff_flow("f", 0.0), 3.0) ** 2
        assert np.max(rep.series["h3_f_cross_curl_f"]) <= 1e-12 * scale


class TestPerturbation:
    def test_zero_amplitudes_identity(self, grid16):
        p = make_params(alpha1=0.0, alpha2=0.0)
        fl = ReferenceFlows(grid16, p)
        state = dynamics.random_state(grid16, 20, 1.0, t=0.7)
        U, B = perturbation_extract(grid16, state, fl)
        assert np.array_equal(U, state.u)
        assert np.array_equal(B, state.b)

    def test_extraction_linearity(self, grid16, flows16):
        s1 = dynamics.random_state(grid16, 21, 1.0, t=0.2)
        s2 = dynamics.random_state(grid16, 22, 1.0, t=0.2)
        mid = State(0.5 * (s1.u + s2.u), 0.5 * (s1.b + s2.b), 0.2)
        U1, _ = perturbation_extract(grid16, s1, flows16)
        U2, _ = perturbation_extract(grid16, s2, flows16)
        Um, _ = perturbation_extract(grid16, mid, flows16)
        assert rel_err(Um, 0.5 * (U1 + U2)) < 1e-13

    def test_initial_perturbation_without_projection_is_small_part(self, grid16):
        # with chi == 1 the cutoff product has no divergence leak, so the
        # assembly projection is the identity and U(0) = u01 exactly
        from hismhd.initdata import assemble_initial_data, make_small_part

        p = make_params(alpha1=0.4, alpha2=0.3, m0=2 * np.pi, small_budget=0.2, seed=9)
        u0, b0, _ = assemble_initial_data(p, grid16)
        fl = ReferenceFlows(grid16, p)
        U, B = perturbation_extract(grid16, State(u0, b0, 0.0), fl)
        assert rel_err(U, make_small_part(grid16, 9, 0.1)) < 1e-11
        assert rel_err(B, make_small_part(grid16, 10, 0.1)) < 1e-11


class TestForcingFields:
    def test_full_plateau_drops_cutoff_terms(self, grid16):
        # two-shell annulus (delta = 1/2) so the cross products do not vanish
        p = make_params(alpha1=1.0, alpha2=0.7, m0=2 * np.pi, kappa=0.1, delta=0.5,
                        nu=0.8, mu=1.3)
        fl = ReferenceFlows(grid16, p)
        out = forcing_fields(fl, 0.4)
        ft = fl.cutoff_flow("f", 0.4)
        gt = fl.cutoff_flow("g", 0.4)
        expected_F = analysis._masked_cross(grid16, ft, spectral.curl(grid16, ft))
        expected_F -= analysis._masked_cross(grid16, gt, spectral.curl(grid16, gt))
        assert np.max(np.abs(expected_F)) > 1e-6  # cancellation broken
        assert rel_err(out.F, expected_F) < 1e-11

    def test_f_equals_g_cancels_cross_blocks(self, grid16):
        p = make_params(alpha1=0.6, alpha2=0.6, nu=1.0, mu=1.0, alpha=2.0, kappa=0.0)
        fl = ReferenceFlows(grid16, p)
        out = forcing_fields(fl, 0.3)
        # f == g: the two quadratic blocks of F cancel, leaving the commutator
        comm = analysis._commutator(grid16, fl.chi, fl.free_flow("f", 0.3), 1.0, 2.0,
                                    "spectral")
        assert rel_err(out.F, -comm) < 1e-11

    def test_modes_agree_at_alpha_two(self, grid16):
        p = make_params(alpha1=1.0, alpha2=0.7, alpha=2.0, kappa=0.1)
        fl = ReferenceFlows(grid16, p)
        a = forcing_fields(fl, 0.2, mode="spectral")
        b = forcing_fields(fl, 0.2, mode="local")
        assert not a.mode_warning and not b.mode_warning
        assert rel_err(a.F, b.F) < 1e-10
        assert rel_err(a.G, b.G) < 1e-10

    def test_local_mode_warns_for_fractional_alpha(self, grid16):
        p = make_params(alpha=1.5)
        fl = ReferenceFlows(grid16, p)
        assert forcing_fields(fl, 0.1, mode="local").mode_warning


class TestPerturbationResidual:
    def _decomposed_state(self, grid, fl, t=0.25, seed=30):
        u = dynamics.random_divfree_field(grid, seed, 0.6) + fl.cutoff_flow("f", t)
        b = dynamics.random_divfree_field(grid, seed + 1, 0.6) + fl.cutoff_flow("g", t)
        return State(spectral.leray_project(grid, u), spectral.leray_project(grid, b), t)

    def test_zero_flow_reduces_to_rearranged_equations(self, grid16):
        p = make_params(alpha1=0.0, alpha2=0.0, sigma=0.5, kappa=0.1)
        fl = ReferenceFlows(grid16, p)
        state = dynamics.random_state(grid16, 31, 1.0, t=0.1)
        res = perturbation_residual(grid16, state, fl, p)
        assert res["relative_u"] < 1e-11
        assert res["relative_b"] < 1e-11

    def test_alpha_two_full_generality(self, grid16):
        p = make_params(alpha=2.0, sigma=0.5, kappa=0.1, alpha1=1.0, alpha2=0.7)
        fl = ReferenceFlows(grid16, p)
        state = self._decomposed_state(grid16, fl)
        res = perturbation_residual(grid16, state, fl, p)
        assert res["relative_u"] < 1e-9
        assert res["relative_b"] < 1e-9

    def test_no_hall_no_ionslip(self, grid16):
        p = make_params(alpha=1.5, sigma=0.0, kappa=0.0, alpha1=1.0, alpha2=0.7)
        fl = ReferenceFlows(grid16, p)
        state = self._decomposed_state(grid16, fl, seed=40)
        res = perturbation_residual(grid16, state, fl, p)
        assert res["relative_u"] < 1e-10
        assert res["relative_b"] < 1e-10


class TestCommutatorSpotCheck:
    def test_finite_ratio_over_random_fields(self, grid16):
        for seed in range(10):
            lhs, rhs = analysis.commutator_estimate_spot_check(grid16, 3.0, seed)
            assert np.isfinite(lhs) and np.isfinite(rhs)
            assert lhs <= 10.0 * rhs  # finiteness of the ratio, constant not certified

    def test_bilinear_homogeneity(self, grid16):
        lhs1, rhs1 = analysis.commutator_estimate_spot_check(grid16, 3.0, 4, scale=1.0)
        lhs2, rhs2 = analysis.commutator_estimate_spot_check(grid16, 3.0, 4, scale=3.0)
        assert lhs2 == pytest.approx(9.0 * lhs1, rel=1e-10)
        assert rhs2 == pytest.approx(9.0 * rhs1, rel=1e-10)


class TestTheoremMonitor:
    def test_zero_perturbation_passes(self):
        verdict = theorem_monitor([(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)], m0=8.0)
        assert verdict.passed and verdict.within_stated
        assert verdict.sup_perturbation == 0.0

    def test_sup_below_threshold(self):
        samples = [(t, 0.1, 0.05) for t in np.linspace(0, 5, 11)]
        verdict = theorem_monitor(samples, m0=8.0)
        assert verdict.passed
        assert verdict.sup_perturbation == pytest.approx(0.15)

    def test_boundary_budget_reported(self):
        m0 = 8.0
        samples = [(0.0, m0**-0.5, 0.0), (1.0, 0.1, 0.0)]
        verdict = theorem_monitor(samples, m0=m0, threshold=m0**-0.5)
        assert verdict.sup_perturbation == pytest.approx(m0**-0.5)
        assert verdict.passed  # sup equals the threshold exactly
        assert verdict.t_at_sup == 0.0

    def test_empty_stream_rejected(self):
        with pytest.raises(ValueError):
            theorem_monitor([], m0=8.0)

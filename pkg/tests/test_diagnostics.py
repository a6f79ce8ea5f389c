"""Tests for the estimate-measurement diagnostics."""

import math

import numpy as np
import pytest

from dnl_lab.core import ExponentTriple, Grid1D
from dnl_lab.exact import TrudingerGaussian, SupercriticalExtinction
from dnl_lab.solver import CauchyDirichletProblem, SolverConfig, solve
from dnl_lab.diagnostics import (
    RegimeError,
    DiagnosticReport,
    SolutionSource,
    map_probes,
    thread_count,
    _monotone_exceedance,
    harnack_scan,
    integral_harnack,
    sup_bound,
    expansion_of_positivity,
    extinction_analysis,
    decay_exponent_fit,
    gradient_bound,
    holder_fit,
)


def _bump(g, amp=1.0):
    x = g.centers()
    xi = (x - 0.5 * (g.x_lo + g.x_hi)) / (0.5 * (g.x_hi - g.x_lo))
    return amp * np.cos(0.5 * np.pi * xi) ** 2


@pytest.fixture(scope="module")
def const_traj():
    """Steady constant-0.7 state (dirichlet boundary matching the data)."""
    g = Grid1D(-1.0, 1.0, 24)
    e = ExponentTriple(2.0, 2.0, 1)
    pr = CauchyDirichletProblem(
        e,
        g,
        np.full(24, 0.7),
        0.1,
        boundary="dirichlet",
        boundary_values=lambda t: (0.7, 0.7),
    )
    return solve(pr, SolverConfig(dt=5e-3))


@pytest.fixture(scope="module")
def linear_traj():
    """Steady linear profile u = (x+1)/2 on (-1, 1)."""
    g = Grid1D(-1.0, 1.0, 40)
    e = ExponentTriple(2.0, 1.0, 1)
    u0 = 0.5 * (g.centers() + 1.0)
    pr = CauchyDirichletProblem(
        e,
        g,
        u0,
        0.1,
        boundary="dirichlet",
        boundary_values=lambda t: (0.0, 1.0),
    )
    return solve(pr, SolverConfig(dt=5e-3))


@pytest.fixture(scope="module")
def zero_traj():
    g = Grid1D(-1.0, 1.0, 16)
    e = ExponentTriple(2.0, 2.0, 1)
    pr = CauchyDirichletProblem(e, g, np.zeros(16), 2e-3)
    return solve(pr, SolverConfig(dt=1e-3))


@pytest.fixture(scope="module")
def bump_traj():
    g = Grid1D(-1.0, 1.0, 60)
    e = ExponentTriple(2.0, 2.0, 1)
    pr = CauchyDirichletProblem(e, g, _bump(g), 2e-2)
    return solve(pr, SolverConfig(dt=1e-3))


class TestUtilities:
    def test_thread_count_default(self, monkeypatch):
        monkeypatch.delenv("DNL_LAB_THREADS", raising=False)
        assert thread_count() == 1
        monkeypatch.setenv("DNL_LAB_THREADS", "4")
        assert thread_count() == 4
        monkeypatch.setenv("DNL_LAB_THREADS", "junk")
        assert thread_count() == 1

    def test_map_probes_threaded_matches_serial(self, monkeypatch):
        items = list(range(20))
        fn = lambda k: k * k
        monkeypatch.delenv("DNL_LAB_THREADS", raising=False)
        serial = map_probes(fn, items)
        monkeypatch.setenv("DNL_LAB_THREADS", "4")
        assert map_probes(fn, items) == serial

    def test_monotone_exceedance(self):
        assert _monotone_exceedance([1.0, 2.0, 4.0, 8.0])
        assert not _monotone_exceedance([1.0, 2.0, 4.0])  # too few scales
        assert not _monotone_exceedance([1.0, 1.1, 1.2, 1.3])  # small spread
        assert not _monotone_exceedance([8.0, 1.0, 4.0, 2.0])  # not monotone

    def test_report_formats(self):
        rep = DiagnosticReport("demo")
        rep.probes = [{"rho": 1.0}]
        rep.lhs = [3.0]
        rep.rhs = [2.0]
        rep.implied_constant = 1.5
        rep.verdict = "bounded"
        assert rep.summary_line() == "demo,bounded,1.5"
        rows = rep.csv_rows()
        assert rows[0]["implied"] == pytest.approx(1.5)
        assert rows[0]["rho"] == 1.0


class TestSolutionSource:
    def test_closed_form(self):
        sol = TrudingerGaussian(p=2.0, n_dim=1)
        src = SolutionSource(sol)
        assert src.kind == "closed_form"
        assert src.eval([0.0], 1.0) == pytest.approx(1.0)
        assert src.valid([0.0], 1.0)
        assert not src.valid([0.0], -1.0)

    def test_trajectory(self, linear_traj):
        src = SolutionSource(linear_traj)
        assert src.kind == "trajectory"
        assert src.eval([0.0], 2e-3) == pytest.approx(0.5, abs=1e-6)
        assert src.grad_norm([0.0], 2e-3) == pytest.approx(0.5, abs=1e-6)
        # validity extends to the domain boundary, not just cell centers
        assert src.valid([1.0], 2e-3)
        assert not src.valid([1.1], 2e-3)
        assert not src.valid([0.0], 1.0)

    def test_type_error(self):
        with pytest.raises(TypeError):
            SolutionSource(42)


class TestHarnackScan:
    def test_constant_state_gamma_one(self, const_traj):
        rep = harnack_scan(
            SolutionSource(const_traj), [(0.0, 0.05)], [0.2, 0.4], sigma=0.1
        )
        assert rep.verdict == "bounded"
        assert rep.implied_constant == pytest.approx(1.0, abs=1e-9)

    def test_trudinger_slice_ratio(self):
        # sigma = 0: gamma over K_1(l) at fixed t=2 is exp((2l+1)/8) exactly
        src = SolutionSource(TrudingerGaussian(p=2.0, n_dim=1))
        for ell in (5.0, 10.0):
            rep = harnack_scan(src, [(ell, 2.0)], [1.0], sigma=0.0)
            assert rep.implied_constant == pytest.approx(
                math.exp((2 * ell + 1) / 8), rel=1e-12
            )

    def test_trudinger_divergence(self):
        src = SolutionSource(TrudingerGaussian(p=2.0, n_dim=1))
        rep = harnack_scan(
            src, [(x, 2.0) for x in (5.0, 8.0, 12.0, 16.0, 20.0)], [1.0], sigma=0.0
        )
        assert rep.verdict == "diverging"

    def test_sigma_validation(self, const_traj):
        src = SolutionSource(const_traj)
        with pytest.raises(ValueError):
            harnack_scan(src, [(0.0, 0.05)], [0.2], sigma=1.0)

    def test_zero_center_rejected(self, zero_traj):
        src = SolutionSource(zero_traj)
        with pytest.raises(RegimeError):
            harnack_scan(src, [(0.0, 1e-3)], [0.1], sigma=0.0)

    def test_scaling_invariance(self):
        # gamma_emp is invariant under the intrinsic rescaling of the probes
        src = SolutionSource(TrudingerGaussian(p=2.0, n_dim=1))
        base = harnack_scan(src, [(4.0, 2.0)], [1.0], sigma=0.0)
        k = 2.0
        scaled = harnack_scan(src, [(4.0 * k, 2.0 * k * k)], [k], sigma=0.0)
        assert scaled.implied_constant == pytest.approx(
            base.implied_constant, rel=1e-10
        )


class TestIntegralEstimates:
    def test_regime_guards(self):
        # q = p - 1 (trudinger case) is outside the fast-diffusion range
        src = SolutionSource(TrudingerGaussian(p=2.0, n_dim=1))
        with pytest.raises(RegimeError):
            integral_harnack(src, 0.0, 1.0, 0.5, 0.5)
        # lambda_q < 0 above the critical line
        sup = SolutionSource(SupercriticalExtinction(n_dim=40, p=2.0, q=3.0))
        with pytest.raises(RegimeError):
            integral_harnack(sup, 1.0, 0.5, 0.2, 0.1)
        with pytest.raises(RegimeError):
            sup_bound(sup, 1.0, 0.5, 0.2, 0.1, r=0.1)

    def test_numerical_run_bounded(self, bump_traj):
        src = SolutionSource(bump_traj)  # p=2, q=2, lam_q = 2 > 0 at N=1
        rep = integral_harnack(src, 0.0, 1.5e-2, 0.4, 5e-3)
        assert rep.verdict == "bounded"
        assert 0 < rep.implied_constant < 10
        rep2 = sup_bound(src, 0.0, 1.5e-2, 0.4, 5e-3, r=3.0)
        assert rep2.verdict == "bounded"
        assert 0 < rep2.implied_constant < 10


class TestExpansionOfPositivity:
    def test_bounded_on_bump(self, bump_traj):
        src = SolutionSource(bump_traj)
        rep = expansion_of_positivity(src, 0.0, 2e-3, 0.25, M=0.5, alpha=0.5)
        assert rep.verdict == "bounded"
        assert rep.implied_constant > 0.1

    def test_measure_hypothesis(self, bump_traj):
        src = SolutionSource(bump_traj)
        with pytest.raises(RegimeError):
            expansion_of_positivity(src, 0.0, 2e-3, 0.25, M=2.0, alpha=0.5)


class TestExtinction:
    def test_regime_guards(self, bump_traj, const_traj):
        with pytest.raises(RegimeError):
            extinction_analysis(const_traj)  # non-zero boundary
        g = Grid1D(-1.0, 1.0, 16)
        pr = CauchyDirichletProblem(
            ExponentTriple(3.0, 1.0, 1), g, _bump(g), 1e-3
        )
        slow = solve(pr, SolverConfig(dt=1e-3))
        with pytest.raises(RegimeError):
            extinction_analysis(slow)  # q + 1 <= p

    def test_no_extinction_inconclusive(self, bump_traj):
        rep = extinction_analysis(bump_traj)
        assert rep.verdict == "inconclusive"
        assert "no extinction" in rep.notes

    def test_decay_fit(self):
        sol = SupercriticalExtinction(n_dim=40, p=2.0, q=3.0, T=1.0)
        slope, r2 = decay_exponent_fit(sol, 0.0)
        # exact decay exponent at the origin is N/|lambda_q| = 40/74
        assert slope == pytest.approx(40.0 / 74.0, rel=1e-6)
        assert r2 > 0.999999


class TestGradientBound:
    def test_constant_bounded(self, const_traj):
        src = SolutionSource(const_traj)
        rep = gradient_bound(src, [(0.0, 0.05, 0.2), (0.0, 0.05, 0.4)])
        assert rep.verdict == "bounded"
        assert rep.implied_constant == pytest.approx(0.0, abs=1e-9)

    def test_trudinger_center_ratios(self):
        # |Du|/u = x/(2t) for the gaussian: K = n/2 at (n, 1) with rho = 1
        src = SolutionSource(TrudingerGaussian(p=2.0, n_dim=1))
        probes = [(float(n), 1.0, 1.0) for n in (1, 2, 4, 8, 16)]
        rep = gradient_bound(src, probes, lattice=1)
        ks = list(rep.lhs)
        assert ks == pytest.approx([0.5, 1.0, 2.0, 4.0, 8.0], rel=1e-12)
        assert rep.verdict == "diverging"

    def test_nonpositive_center(self, zero_traj):
        src = SolutionSource(zero_traj)
        with pytest.raises(RegimeError):
            gradient_bound(src, [(0.0, 1e-3, 0.1)], lattice=1)


class TestHolderFit:
    def test_needs_four_radii(self, bump_traj):
        src = SolutionSource(bump_traj)
        with pytest.raises(ValueError):
            holder_fit(src, 0.0, 1e-2, [0.1, 0.2, 0.3])

    def test_affine_profile_inconclusive(self, linear_traj):
        # Du is constant: oscillations vanish, alpha is effectively infinite
        src = SolutionSource(linear_traj)
        out = holder_fit(src, 0.0, 0.05, [0.05, 0.1, 0.15, 0.2])
        assert out["report"].verdict == "inconclusive"
        assert math.isinf(out["alpha_fit"])

    def test_smooth_profile_capped_at_one(self, bump_traj):
        src = SolutionSource(bump_traj)
        out = holder_fit(src, 0.3, 1e-2, [0.05, 0.1, 0.15, 0.2, 0.25])
        assert 0 < out["alpha_fit"] <= 1.0
        assert out["lipschitz_const"] > 0
        assert out["r_squared"] > 0.9
        assert out["report"].verdict == "bounded"

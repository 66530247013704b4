"""Problem catalog: exact solutions, spectra, targets, adaptive bounds."""

import math

import numpy as np
import pytest

from muntzfit.problems import (
    SUPERVISED_CATALOG,
    SingularODE,
    SingularPoisson,
    Wedge,
    bc_adaptive_bounds,
    build_problem,
    ode_exact,
    poisson_exact,
    supervised_targets,
    wedge_problem,
    wedge_spectrum,
)

GRID = np.linspace(0.0, 1.0, 201)


def _num_d2(fn, x, h=1e-5):
    return (fn(x + h) - 2.0 * fn(x) + fn(x - h)) / h**2


class TestOdeExact:
    def test_solution_and_exponent(self):
        sol = ode_exact()
        assert sol.exponents == (0.5,)
        assert sol.fn(0.25) == pytest.approx(0.5)

    def test_satisfies_operator_and_bc(self):
        sol = ode_exact()
        x = GRID[GRID >= 0.05]
        d1 = (sol.fn(x + 1e-6) - sol.fn(x - 1e-6)) / 2e-6
        res = x * _num_d2(sol.fn, x) + 0.5 * d1
        assert np.max(np.abs(res)) < 1e-3  # FD floor; exact check in test_losses
        assert sol.fn(1.0) == pytest.approx(1.0, abs=1e-10)


class TestPoissonExact:
    def test_forcing_half_coefficients(self):
        sol = poisson_exact(-0.5)
        assert sol.exponents == (1.0, 1.5)
        np.testing.assert_allclose(sol.coefficients, (4.0 / 3.0, -4.0 / 3.0),
                                   rtol=1e-12)

    def test_beta_zero_closed_form(self):
        sol = poisson_exact(0.0)
        x = GRID
        np.testing.assert_allclose(sol.fn(x), 0.5 * (x - x**2), atol=1e-12)

    def test_induced_exponent_is_beta_plus_two(self):
        assert poisson_exact(-0.5).exponents[1] == pytest.approx(1.5)
        assert poisson_exact(-0.25).exponents[1] == pytest.approx(1.75)

    def test_boundary_values(self):
        for beta in (-0.5, -0.25, 0.0, 1.0):
            sol = poisson_exact(beta)
            assert sol.fn(0.0) == pytest.approx(0.0, abs=1e-10)
            assert sol.fn(1.0) == pytest.approx(0.0, abs=1e-10)

    def test_satisfies_operator(self):
        for beta in (-0.5, 0.0, 1.0):
            sol = poisson_exact(beta)
            x = GRID[(GRID >= 0.05) & (GRID <= 0.95)]
            res = -_num_d2(sol.fn, x) - x**beta
            assert np.max(np.abs(res)) < 1e-3

    def test_beta_validation(self):
        with pytest.raises(ValueError):
            poisson_exact(-1.0)
        with pytest.raises(ValueError):
            SingularPoisson(beta=-1.5)

    def test_exclusion_zone_only_for_singular_forcing(self):
        assert SingularPoisson(beta=-0.5).residual_cutoff == pytest.approx(0.01)
        assert SingularPoisson(beta=0.0).residual_cutoff == 0.0


class TestWedgeSpectrum:
    def test_corner_dd_modes(self):
        omega = 1.5 * math.pi
        modes = wedge_spectrum(omega, "DD", 2)
        assert modes[0] == pytest.approx(2.0 / 3.0, rel=1e-12)
        assert modes[1] == pytest.approx(4.0 / 3.0, rel=1e-12)

    def test_flat_boundary_dd(self):
        assert wedge_spectrum(math.pi, "DD", 1)[0] == pytest.approx(1.0)

    def test_mixed_fundamental(self):
        omega = 1.5 * math.pi
        assert wedge_spectrum(omega, "DN", 1)[0] == pytest.approx(1.0 / 3.0)

    def test_nn_equals_dd_spectrum(self):
        omega = math.radians(210)
        assert wedge_spectrum(omega, "NN", 3) == wedge_spectrum(omega, "DD", 3)

    def test_ascending(self):
        modes = wedge_spectrum(math.radians(330), "ND", 5)
        assert modes == sorted(modes)

    def test_validation(self):
        with pytest.raises(ValueError):
            wedge_spectrum(-1.0, "DD", 1)
        with pytest.raises(ValueError):
            wedge_spectrum(1.0, "DX", 1)


class TestWedgeProblem:
    def test_angular_family_per_bc(self):
        omega = 1.5 * math.pi
        assert wedge_problem(omega, "DD").angular == "sin"
        assert wedge_problem(omega, "DN").angular == "sin"
        assert wedge_problem(omega, "NN").angular == "cos"
        assert wedge_problem(omega, "ND").angular == "cos"

    def test_constraint_family_per_bc(self):
        omega = 1.5 * math.pi
        assert wedge_problem(omega, "DD").constraint_trig == "sin"
        assert wedge_problem(omega, "NN").constraint_trig == "sin"
        assert wedge_problem(omega, "DN").constraint_trig == "cos"
        assert wedge_problem(omega, "ND").constraint_trig == "cos"

    def test_constraint_trig_vanishes_on_spectrum(self):
        for deg in (90, 150, 210, 270, 330):
            omega = math.radians(deg)
            for bc in ("DD", "NN", "DN", "ND"):
                w = wedge_problem(omega, bc)
                trig = math.sin if w.constraint_trig == "sin" else math.cos
                for mu in wedge_spectrum(omega, bc, 3):
                    assert abs(trig(mu * omega)) < 1e-9

    def test_corner_arc_data(self):
        w = wedge_problem(1.5 * math.pi, "DD")
        theta = np.array([0.0, 3.0 * math.pi / 4.0])
        np.testing.assert_allclose(w.arc_data(theta), [0.0, 1.0], atol=1e-12)

    def test_exact_solution_fundamental(self):
        w = wedge_problem(1.5 * math.pi, "DD")
        sol = w.exact
        assert sol.exponents == (pytest.approx(2.0 / 3.0),)
        assert sol.fn(1.0, 3.0 * math.pi / 4.0) == pytest.approx(1.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            Wedge(omega=0.0, bc="DD")
        with pytest.raises(ValueError):
            Wedge(omega=1.0, bc="XY")


class TestAdaptiveBounds:
    def test_corner_dd(self):
        b = bc_adaptive_bounds(1.5 * math.pi, "DD")
        assert b.mu_min == pytest.approx(0.2, rel=1e-12)
        assert b.mu_max == pytest.approx(5.0 / 3.0, rel=1e-12)

    def test_corner_dn(self):
        b = bc_adaptive_bounds(1.5 * math.pi, "DN")
        assert b.mu_min == pytest.approx(0.1, rel=1e-12)
        assert b.mu_max == pytest.approx(5.0 / 6.0, rel=1e-12)

    def test_fundamental_strictly_inside(self):
        for deg in (90, 150, 210, 270, 330):
            for bc in ("DD", "NN", "DN", "ND"):
                omega = math.radians(deg)
                mu1 = wedge_spectrum(omega, bc, 1)[0]
                b = bc_adaptive_bounds(omega, bc)
                assert b.mu_min < mu1 < b.mu_max


class TestSupervisedCatalog:
    def test_single_value(self):
        p = supervised_targets("single")
        assert p.exact.fn(0.25) == pytest.approx(0.5)

    def test_three_term_ground_truth(self):
        assert SUPERVISED_CATALOG["three-term"].exponents == (0.1, 0.5, 1.5)

    def test_close_pair_members(self):
        assert SUPERVISED_CATALOG["close-pair-0.1"].exponents == (0.5, 0.6)
        for d in (0.02, 0.05, 0.1, 0.2, 0.3):
            assert f"close-pair-{d:g}" in SUPERVISED_CATALOG

    def test_log_correction_flagged_non_power_law(self):
        sol = SUPERVISED_CATALOG["log-correction"]
        assert not sol.power_law
        assert sol.fn(np.array([0.25]))[0] == pytest.approx(0.5 * math.log(0.25))

    def test_unknown_target_lists_known(self):
        with pytest.raises(KeyError, match="single"):
            supervised_targets("nope")


class TestBuildProblem:
    def test_round_trips_each_kind(self):
        assert build_problem("supervised", name="single").kind == "supervised"
        assert build_problem("ode").kind == "ode"
        assert build_problem("poisson", beta=-0.5).beta == -0.5
        w = build_problem("wedge", omega=1.5 * math.pi, bc="NN")
        assert (w.omega, w.bc) == (1.5 * math.pi, "NN")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            build_problem("heat")


class TestExactSolutionsSatisfyTheirProblems:
    """Every catalog exact solution obeys its operator and BCs on a grid."""

    def test_all_power_law_targets_reproduce_their_series(self):
        x = np.linspace(0.01, 1.0, 200)
        for name, sol in SUPERVISED_CATALOG.items():
            if not sol.power_law:
                continue
            series = sum(c * x**a for a, c in zip(sol.exponents, sol.coefficients))
            np.testing.assert_allclose(sol.fn(x), series, rtol=1e-10,
                                       err_msg=name)

    def test_wedge_exact_is_harmonic(self):
        w = wedge_problem(math.radians(210), "ND")
        sol = w.exact
        h = 1e-5
        for r, th in ((0.5, 0.7), (0.8, 2.1)):
            u = lambda rr, tt: sol.fn(rr, tt)
            u_rr = (u(r + h, th) - 2 * u(r, th) + u(r - h, th)) / h**2
            u_r = (u(r + h, th) - u(r - h, th)) / (2 * h)
            u_tt = (u(r, th + h) - 2 * u(r, th) + u(r, th - h)) / h**2
            assert abs(u_rr + u_r / r + u_tt / r**2) < 1e-4

import numpy as np
import pytest
from scipy.special import gamma

from fracschwarz.fraccalc import (PiecewiseLinearTrace, SlopeJumpForm,
                                  frac_deriv_polynomial, rl_left_deriv,
                                  rl_power_rule, rl_right_deriv, to_slope_jumps)
from oracles import (frac_integral_of, random_tent, rl_left_deriv_quad,
                     rl_power_rule_mp, rl_right_deriv_quad)

TENT = PiecewiseLinearTrace([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])

# (1/Gamma(1.4)) * (3^0.4 - 2*2^0.4 + 1), high-precision
TENT_LEFT_A06_X3 = -0.098246142703916481042
# sum of the power rule over the monomials of (2t - t^2)^4 at t = 1, mu = 1.5
G_COEFFS = (0.0, 0.0, 0.0, 0.0, 16.0, -32.0, 24.0, -8.0, 1.0)
DG15_AT_1 = -2.9627186336046278863


class TestToSlopeJumps:
    def test_tent(self):
        form = to_slope_jumps(TENT)
        assert np.allclose(form.locations, [0.0, 1.0, 2.0])
        assert np.allclose(form.coeffs, [1.0, -2.0, 1.0])

    def test_narrow_hat(self):
        h = 0.125
        form = to_slope_jumps(PiecewiseLinearTrace([0.0, h, 2 * h], [0.0, 1.0, 0.0]))
        assert np.allclose(form.locations, [0.0, h, 2 * h])
        assert np.allclose(form.coeffs, [1 / h, -2 / h, 1 / h])

    def test_zero_trace(self):
        form = to_slope_jumps(PiecewiseLinearTrace([0.0, 1.0, 2.0], [0.0, 0.0, 0.0]))
        assert form.locations.size == 0

    def test_reconstruction_identity(self, rng):
        for _ in range(10):
            tr = random_tent(rng)
            form = to_slope_jumps(tr)
            xs = rng.uniform(tr.breakpoints[0] - 1, tr.breakpoints[-1] + 1, size=30)
            assert np.allclose(form(xs), tr(xs), atol=1e-12)

    def test_moment_invariants(self, rng):
        for _ in range(10):
            form = to_slope_jumps(random_tent(rng))
            assert abs(np.sum(form.coeffs)) < 1e-12
            assert abs(np.sum(form.coeffs * form.locations)) < 1e-12

    def test_trace_validation(self):
        with pytest.raises(ValueError):
            PiecewiseLinearTrace([0.0, 1.0, 2.0], [0.0, 1.0, 0.5])
        with pytest.raises(ValueError):
            PiecewiseLinearTrace([0.0, 1.0, 0.5], [0.0, 1.0, 0.0])


class TestLeftDeriv:
    def test_zero_left_of_support(self):
        form = to_slope_jumps(TENT)
        assert rl_left_deriv(form, 0.75, -1.0) == 0.0
        assert rl_left_deriv(form, 0.75, 0.0) == 0.0

    def test_tail_formula(self):
        form = to_slope_jumps(TENT)
        for alpha in (0.6, 0.75, 0.9):
            for x in (2.5, 4.0):
                expect = (x ** (1 - alpha) - 2 * (x - 1) ** (1 - alpha)
                          + (x - 2) ** (1 - alpha)) / gamma(2 - alpha)
                assert rl_left_deriv(form, alpha, x) == pytest.approx(expect, rel=1e-14)

    def test_frozen_value(self):
        form = to_slope_jumps(TENT)
        got = rl_left_deriv(form, 0.6, 3.0)
        assert got == pytest.approx(TENT_LEFT_A06_X3, rel=1e-13)
        assert got == pytest.approx(rl_left_deriv_quad(TENT, 0.6, 3.0), rel=1e-8)

    def test_alpha_range(self):
        form = to_slope_jumps(TENT)
        for bad in (0.3, 0.5, 1.0, 1.4):
            with pytest.raises(ValueError):
                rl_left_deriv(form, bad, 1.0)


class TestRightDeriv:
    def test_reflection_identity(self):
        form = to_slope_jumps(TENT)
        reflected = form.reflect()
        for alpha in (0.6, 0.8):
            for x in (-1.0, 0.3, 1.7):
                assert rl_right_deriv(form, alpha, x) == pytest.approx(
                    rl_left_deriv(reflected, alpha, -x), rel=1e-13, abs=1e-15)

    def test_zero_right_of_support(self):
        form = to_slope_jumps(TENT)
        assert rl_right_deriv(form, 0.75, 2.0) == 0.0
        assert rl_right_deriv(form, 0.75, 5.0) == 0.0

    def test_quadrature_oracle(self):
        form = to_slope_jumps(TENT)
        got = rl_right_deriv(form, 0.6, -1.0)
        assert got == pytest.approx(rl_right_deriv_quad(TENT, 0.6, -1.0), rel=1e-8)
        # mirror of the frozen left value by symmetry of the tent about x=1
        assert got == pytest.approx(TENT_LEFT_A06_X3, rel=1e-13)


class TestPowerRule:
    def test_p2_mu15(self):
        # Gamma(3)/Gamma(1.5) = 4/sqrt(pi)
        coef = 2.2567583341910251478
        for x in (0.5, 1.0, 2.0):
            assert rl_power_rule(2, 1.5, x) == pytest.approx(coef * np.sqrt(x), rel=1e-14)
        assert rl_power_rule(2, 1.5, 1.3) == pytest.approx(
            rl_power_rule_mp(2, 1.5, 1.3), rel=1e-12)

    def test_p1_mu15(self):
        for x in (0.5, 1.7):
            assert rl_power_rule(1, 1.5, x) == pytest.approx(
                x ** -0.5 / np.sqrt(np.pi), rel=1e-14)
        assert rl_power_rule(1, 1.5, 0.8) == pytest.approx(
            rl_power_rule_mp(1, 1.5, 0.8), rel=1e-12)

    def test_mu_zero_is_identity(self):
        assert rl_power_rule(3, 0.0, 2.0) == pytest.approx(8.0, rel=1e-15)

    def test_pole_gives_zero(self):
        # Gamma pole at p+1-mu = 0: reciprocal-Gamma kills the coefficient
        assert rl_power_rule(1, 1.0, 2.0) != 0.0
        assert frac_deriv_polynomial([0.0, 1.0], 1.0, 2.0) == pytest.approx(1.0)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            rl_power_rule(0, 1.5, 1.0)
        with pytest.raises(ValueError):
            rl_power_rule(-1, 0.5, 1.0)
        with pytest.raises(ValueError):
            rl_power_rule(2, 2.0, 1.0)


class TestPolynomialDeriv:
    def test_example_rhs_monomials(self):
        got = frac_deriv_polynomial(G_COEFFS, 1.5, 1.0)
        assert got == pytest.approx(DG15_AT_1, rel=1e-12)
        oracle = sum(a * rl_power_rule_mp(p, 1.5, 1.0)
                     for p, a in enumerate(G_COEFFS) if a)
        assert got == pytest.approx(oracle, rel=1e-8)

    def test_zero_polynomial(self):
        assert frac_deriv_polynomial([0.0, 0.0], 1.5, 1.3) == 0.0

    def test_right_deriv_via_reflection(self):
        # g(2-t) = g(t) for g = (2t-t^2)^4, so the right derivative on [0, 2]
        # is the left derivative evaluated at 2-t
        for t in (0.4, 1.0, 1.6):
            left_at_reflected = frac_deriv_polynomial(G_COEFFS, 1.5, 2.0 - t)
            g = np.polynomial.polynomial.polyval(2.0 - t, G_COEFFS)
            g2 = np.polynomial.polynomial.polyval(t, G_COEFFS)
            assert g == pytest.approx(g2, rel=1e-12)
            assert np.isfinite(left_at_reflected)

    def test_vanishing_precondition(self):
        with pytest.raises(ValueError):
            frac_deriv_polynomial([1.0, 1.0], 1.5, 0.5)


class TestInvariants:
    def test_oracle_equivalence_random_tents(self, rng):
        for _ in range(20):
            tr = random_tent(rng)
            form = to_slope_jumps(tr)
            alpha = rng.uniform(0.55, 0.95)
            lo, hi = tr.breakpoints[0], tr.breakpoints[-1]
            x = rng.uniform(lo - 0.5, hi + 2.0)
            left = rl_left_deriv(form, alpha, x)
            oracle = rl_left_deriv_quad(tr, alpha, x)
            assert left == pytest.approx(oracle, rel=1e-8, abs=1e-12)
            x = rng.uniform(lo - 2.0, hi + 0.5)
            right = rl_right_deriv(form, alpha, x)
            oracle = rl_right_deriv_quad(tr, alpha, x)
            assert right == pytest.approx(oracle, rel=1e-8, abs=1e-12)

    def test_linearity(self, rng):
        t1 = random_tent(rng)
        t2 = random_tent(rng)
        f1 = to_slope_jumps(t1)
        f2 = to_slope_jumps(t2)
        combined = SlopeJumpForm(np.concatenate([f1.locations, f2.locations]),
                                 np.concatenate([f1.coeffs, f2.coeffs]))
        xs = rng.uniform(-3, 5, size=20)
        got = rl_left_deriv(combined, 0.7, xs)
        expect = rl_left_deriv(f1, 0.7, xs) + rl_left_deriv(f2, 0.7, xs)
        np.testing.assert_allclose(got, expect, rtol=1e-13, atol=1e-14)

    def test_scaling(self):
        lam = 2.0
        alpha = 0.75
        form = to_slope_jumps(TENT)
        dilated = to_slope_jumps(TENT.dilate(lam))
        for x in (0.5, 1.5, 3.0):
            assert rl_left_deriv(dilated, alpha, lam * x) == pytest.approx(
                lam ** -alpha * rl_left_deriv(form, alpha, x), rel=1e-13)

    def test_composition_recovers_tent(self):
        # applying the order-alpha fractional integral (by quadrature) to the
        # closed-form derivative returns the function at interior points
        tent = PiecewiseLinearTrace([0.5, 1.2, 1.9], [0.0, 1.0, 0.0])
        form = to_slope_jumps(tent)
        alpha = 0.75
        deriv = lambda s: rl_left_deriv(form, alpha, s)
        for x in (0.8, 1.2, 1.6, 2.2):
            got = frac_integral_of(deriv, alpha, 0.0, x,
                                   breakpoints=form.locations)
            assert abs(got - tent(x)) < 1e-6

import math

import numpy as np
import pytest
from scipy.integrate import quad

from crossinglab.errors import TurningPointFailure
from crossinglab.potential import ScaledTanhProduct, find_crossings, turning_points
from crossinglab.potential.turning import _seed


class TestLinearExact:
    """V = v t: roots at +-i eps/v, action 2*int_0^{i eps} sqrt(s^2+eps^2) = i pi eps^2/2."""

    @pytest.mark.parametrize("eps", [0.1, 0.02, 0.004])
    def test_root_and_action(self, lz_pure, eps):
        cat = find_crossings(lz_pure, (-1, 1))
        tp = turning_points(lz_pure, cat, 0, eps)
        assert tp.first.zeta == pytest.approx(1j * eps, abs=1e-11)
        assert tp.first.action == pytest.approx(1j * math.pi * eps**2 / 2.0, rel=1e-10)
        assert tp.first.decay_coeff == pytest.approx(math.pi / 2.0, rel=1e-8)
        assert tp.scaling_exponent == pytest.approx(2.0, abs=1e-6)

    def test_landau_zener_exponent(self, lz_pure):
        """exp(-a mu_1^2) with a = pi/2 on BOTH turning points reproduces the
        exact linear-model exponent pi eps^2 / h."""
        cat = find_crossings(lz_pure, (-1, 1))
        tp = turning_points(lz_pure, cat, 0, 0.05)
        total = tp.first.decay_coeff + tp.last.decay_coeff
        assert total == pytest.approx(math.pi, rel=1e-8)


class TestTanhCubed:
    def test_seed_accuracy_scaling(self, tanh_cubed, tanh_cubed_catalog):
        """|zeta - seed| = O(eps^(2/m)) as eps -> 0."""
        errs = []
        eps_vals = [0.04, 0.02, 0.01, 0.005]
        for eps in eps_vals:
            tp = turning_points(tanh_cubed, tanh_cubed_catalog, 0, eps)
            errs.append(abs(tp.first.zeta - _seed(0.0, 3, 6.0, eps, 1)))
        slope = np.polyfit(np.log(eps_vals), np.log(errs), 1)[0]
        assert slope >= 2.0 / 3.0 - 0.15

    def test_arg_positions(self, tanh_cubed, tanh_cubed_catalog):
        """Roots approach args pi/(2m) and (2m-1)pi/(2m) as eps -> 0."""
        tp = turning_points(tanh_cubed, tanh_cubed_catalog, 0, 0.002)
        assert np.angle(tp.first.zeta) == pytest.approx(math.pi / 6, abs=0.02)
        assert np.angle(tp.last.zeta) == pytest.approx(5 * math.pi / 6, abs=0.02)
        assert tp.first.zeta.imag > 0 and tp.last.zeta.imag > 0

    def test_residual_is_root(self, tanh_cubed, tanh_cubed_catalog):
        eps = 0.01
        tp = turning_points(tanh_cubed, tanh_cubed_catalog, 0, eps)
        for zeta in (tp.first.zeta, tp.last.zeta):
            res = complex(tanh_cubed.eval(np.asarray(zeta))) ** 2 + eps * eps
            assert abs(res) < 1e-12 * eps * eps * 10 + 1e-15

    def test_decay_constant_against_quadrature_oracle(self, tanh_cubed,
                                                      tanh_cubed_catalog):
        """Leading coefficient via the scaled monomial integral:
        a = (m!/|v|)^(1/m) * Im[2 e^(i pi/6) int_0^1 sqrt(1 - s^6) ds]."""
        integral = quad(lambda s: math.sqrt(1.0 - s**6), 0.0, 1.0,
                        epsabs=1e-13)[0]
        a_expect = (math.factorial(3) / 6.0) ** (1 / 3) * 2.0 * integral * math.sin(math.pi / 6)
        tp = turning_points(tanh_cubed, tanh_cubed_catalog, 0, 0.002)
        assert tp.first.decay_coeff == pytest.approx(a_expect, rel=0.02)
        assert tp.a_min == pytest.approx(a_expect, rel=0.02)

    def test_scaling_exponent_recorded(self, tanh_cubed, tanh_cubed_catalog):
        tp = turning_points(tanh_cubed, tanh_cubed_catalog, 0, 0.01)
        assert tp.scaling_exponent == pytest.approx(4.0 / 3.0, rel=0.05)


class TestNegativeLeadingCoefficient:
    def test_nearest_pair_selected(self):
        """With v < 0 the seeds must still target the two roots closest to
        the real axis (the polynomial V^2 + eps^2 ignores the sign)."""
        model = ScaledTanhProduct(1.0, [
            {"power": 1, "slope": 6.0, "center": 2.0},
            {"power": 3, "slope": 1.0, "center": -2.0},
        ])
        cat = find_crossings(model)
        assert cat.crossings[1].v < 0
        tp = turning_points(model, cat, 1, 0.005)
        arg1 = np.angle(tp.first.zeta - cat.positions[1])
        arg2 = np.angle(tp.last.zeta - cat.positions[1])
        assert arg1 == pytest.approx(math.pi / 6, abs=0.05)
        assert arg2 == pytest.approx(5 * math.pi / 6, abs=0.05)

    def test_eps_too_large_fails_cleanly(self, tanh_cubed, tanh_cubed_catalog):
        """Seeds beyond the analyticity scale must fail loudly, not wander."""
        from crossinglab.errors import BranchAmbiguity, NewtonDiverged

        with pytest.raises((TurningPointFailure, NewtonDiverged, BranchAmbiguity)):
            turning_points(tanh_cubed, tanh_cubed_catalog, 0, 4.0)

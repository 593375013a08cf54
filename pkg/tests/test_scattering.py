import cmath
import math

import numpy as np
import pytest
from scipy.linalg import expm

from crossinglab.potential import (
    PolynomialWindowed,
    find_crossings,
    regularized_action,
)
from crossinglab.scattering import (
    JostAngles,
    connector,
    herm_phase_exp,
    jost_basis,
    landau_zener_probability,
    scattering_matrix,
)


class TestJostAngles:
    def test_half_angle_identity(self):
        """tan(2 theta) = eps / V for the stable arctan form."""
        for v, eps in [(1.0, 0.3), (8.0, 0.05), (0.5, 0.01)]:
            th = JostAngles.for_side(v, eps).angle
            assert math.tan(2 * th) == pytest.approx(eps / v, rel=1e-12)
            assert 0 < th < math.pi / 4

    def test_eps_zero(self):
        assert JostAngles.for_side(2.0, 0.0).angle == 0.0

    def test_negative_limit_uses_magnitude(self):
        th = JostAngles.for_side(-2.0, 0.1).angle
        assert math.tan(2 * th) == pytest.approx(0.1 / 2.0, rel=1e-12)


class TestHermExp:
    def test_against_expm(self, rng):
        for _ in range(20):
            x = float(rng.standard_normal())
            b = complex(rng.standard_normal(), rng.standard_normal())
            h = float(rng.uniform(0.05, 1.0))
            lhs = herm_phase_exp(x, b, h)
            rhs = expm(-1j * np.array([[x, b], [np.conj(b), -x]]) / h)
            assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_zero_matrix(self):
        assert np.array_equal(herm_phase_exp(0.0, 0.0, 0.3), np.eye(2))


class TestJostBasis:
    def test_constant_potential_is_free(self):
        """V identically V_r beyond the window: the correction is identity."""
        model = PolynomialWindowed([1.0, 0.5], window=1.0)
        basis = jost_basis(model, 0.2, 0.1, "right", 25.0)
        angles = JostAngles.for_side(model.v_right, 0.2)
        from crossinglab.scattering import free_basis

        free = free_basis(angles, 0.1, 25.0)
        assert np.max(np.abs(basis - free)) < 1e-10

    def test_orthonormal_columns(self, tanh_cubed):
        basis = jost_basis(tanh_cubed, 0.1, 0.05, "right", 14.0)
        assert np.max(np.abs(basis.conj().T @ basis - np.eye(2))) < 1e-10
        basis_l = jost_basis(tanh_cubed, 0.1, 0.05, "left", 14.0)
        assert np.max(np.abs(basis_l.conj().T @ basis_l - np.eye(2))) < 1e-10

    def test_eps_zero_diagonal(self, lz_windowed):
        basis = jost_basis(lz_windowed, 0.0, 0.1, "right", 14.0)
        assert abs(basis[1, 0]) == 0.0
        assert abs(basis[0, 1]) == 0.0
        assert abs(abs(basis[0, 0]) - 1.0) < 1e-12


class TestScatteringMatrix:
    def test_landau_zener(self, lz_windowed):
        """The windowed linear model reproduces the exact formula."""
        for eps, h in [(0.1, 0.1), (0.2, 0.05), (0.05, 0.2)]:
            rep = scattering_matrix(lz_windowed, eps, h, tol=1e-9)
            assert rep.p_transition == pytest.approx(
                landau_zener_probability(eps, h), abs=1e-6)
            assert rep.unitarity_defect < 1e-8

    def test_no_crossing_no_transition(self):
        """Zero-free V: the adiabatic state never flips."""
        model = PolynomialWindowed([1.0, 0.0, 1.0], window=3.0)  # t^2 + 1 > 0
        rep0 = scattering_matrix(model, 0.0, 0.1, tol=1e-10)
        assert rep0.p_transition == pytest.approx(0.0, abs=1e-12)
        rep = scattering_matrix(model, 0.05, 0.1, tol=1e-10)
        assert rep.p_transition < 1e-3

    def test_truncation_independence(self, tanh_cubed):
        rep1 = scattering_matrix(tanh_cubed, 0.08, 0.09, tol=1e-10)
        rep2 = scattering_matrix(tanh_cubed, 0.08, 0.09, tol=1e-10,
                                 truncation=2.0 * rep1.truncation)
        assert abs(rep1.p_transition - rep2.p_transition) < 1e-7

    def test_unitary_s(self, tanh_pair):
        rep = scattering_matrix(tanh_pair, 0.06, 0.07, tol=1e-10)
        s = rep.s_matrix
        assert np.max(np.abs(s.conj().T @ s - np.eye(2))) < 1e-8
        assert abs(abs(s[0, 0]) ** 2 + abs(s[1, 0]) ** 2 - 1.0) < 1e-8

    def test_report_serialization(self, tanh_cubed):
        rep = scattering_matrix(tanh_cubed, 0.05, 0.1, tol=1e-9)
        doc = rep.to_dict()
        assert set(doc) >= {"eps", "h", "P", "s_matrix", "unitarity_defect"}
        assert doc["P"] == rep.p_transition

    def test_needs_tails(self, lz_pure):
        with pytest.raises(ValueError):
            scattering_matrix(lz_pure, 0.1, 0.1)


class TestConnectors:
    def test_positive_limit_diagonal(self, tanh_pair):
        """sigma_n even keeps V_l > 0: diagonal connector with phase R/h."""
        cat = find_crossings(tanh_pair)
        h = 0.07
        mat, orders = connector(tanh_pair, 0.05, h, "left", -8.0, catalog=cat)
        r_val = regularized_action(tanh_pair, "left", -8.0, catalog=cat)
        assert mat[0, 0] == pytest.approx(cmath.exp(-1j * r_val / h), rel=1e-12)
        assert mat[1, 1] == pytest.approx(cmath.exp(+1j * r_val / h), rel=1e-12)
        assert mat[0, 1] == 0.0 and mat[1, 0] == 0.0
        assert "diagonal" in orders

    def test_negative_limit_antidiagonal(self, tanh_cubed):
        """sigma_n odd flips V_l < 0: antidiagonal connector."""
        cat = find_crossings(tanh_cubed)
        h = 0.07
        mat, orders = connector(tanh_cubed, 0.05, h, "left", -8.0, catalog=cat)
        r_val = regularized_action(tanh_cubed, "left", -8.0, catalog=cat)
        assert mat[0, 1] == pytest.approx(-cmath.exp(-1j * r_val / h), rel=1e-12)
        assert mat[1, 0] == pytest.approx(cmath.exp(+1j * r_val / h), rel=1e-12)
        assert mat[0, 0] == 0.0 and mat[1, 1] == 0.0

    def test_right_connector_structure_numerically(self, tanh_cubed):
        """Propagating the Jost pair back to the anchor exposes the gauge:
        off-diagonals O(eps), diagonal phase e^{-iR/h} with O(eps^2/h) error."""
        from crossinglab.propagator import fundamental_matrix

        h = 0.1
        cat = find_crossings(tanh_cubed)
        anchor = tanh_cubed.tail_anchor("right", 1e-6)
        r_r = regularized_action(tanh_cubed, "right", anchor, catalog=cat)
        offs, diags = [], []
        eps_values = [0.2, 0.1, 0.05]
        for eps in eps_values:
            rep = scattering_matrix(tanh_cubed, eps, h, tol=1e-10)
            basis = jost_basis(tanh_cubed, eps, h, "right", rep.truncation)
            back = fundamental_matrix(tanh_cubed, eps, h, rep.truncation, anchor,
                                      tol=1e-11) @ basis
            phase = cmath.exp(-1j * r_r / h)
            offs.append(abs(back[1, 0]))
            diags.append(abs(back[0, 0] / phase - 1.0))
        slope_off = np.polyfit(np.log(eps_values), np.log(offs), 1)[0]
        slope_diag = np.polyfit(np.log(eps_values), np.log(diags), 1)[0]
        assert slope_off > 0.85
        assert slope_diag > 1.6

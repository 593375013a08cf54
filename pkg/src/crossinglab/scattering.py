"""Scattering matrix and transition probability from Jost solutions.

The Jost solutions are selected by their free asymptotics at t -> +/-inf.
Numerically they are realized at a finite anchor by the free basis of the
limiting Hamiltonian corrected with the tail exponential

    U(t) = exp(-(i/h) * integral_{+/-inf}^{t} A(s) ds),

whose exponent splits into a smooth diagonal tail integral (closed form per
family) and an oscillatory off-diagonal one (integration by parts bounds the
truncation).  The scattering matrix is the change of basis between the left
and right Jost pairs across the numerically propagated middle region, and the
transition probability is the squared modulus of its (2,1) entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TailNotConverged
from .potential.catalog import CrossingCatalog, find_crossings, regularized_action
from .propagator import PropagationDiagnostics, fundamental_matrix
from .quadrature import linear_phase_integral


@dataclass(frozen=True)
class JostAngles:
    """Mixing angle and frequency of the limiting Hamiltonian on one side."""

    angle: float      # theta (V_inf > 0) or eta (V_inf < 0)
    lam: float        # sqrt(V_inf^2 + eps^2)
    v_inf: float

    @staticmethod
    def for_side(v_inf: float, eps: float) -> "JostAngles":
        lam = math.hypot(v_inf, eps)
        if eps == 0.0:
            angle = 0.0
        else:
            angle = math.atan((lam - abs(v_inf)) / eps)
        return JostAngles(angle=angle, lam=lam, v_inf=v_inf)


@dataclass
class ScatteringReport:
    s_matrix: np.ndarray
    p_transition: float
    eps: float
    h: float
    truncation: float
    anchors: tuple[float, float]
    unitarity_defect: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        s = self.s_matrix
        return {
            "eps": self.eps,
            "h": self.h,
            "P": self.p_transition,
            "s_matrix": [[{"re": z.real, "im": z.imag} for z in row] for row in s],
            "truncation": self.truncation,
            "anchors": list(self.anchors),
            "unitarity_defect": self.unitarity_defect,
            "diagnostics": self.diagnostics,
        }


def herm_phase_exp(x: float, b: complex, h: float) -> np.ndarray:
    """exp(-(i/h) * [[x, b], [conj(b), -x]]), exact for the 2x2 Hermitian form."""
    z = math.sqrt(x * x + abs(b) ** 2)
    if z == 0.0:
        return np.eye(2, dtype=complex)
    c, s = math.cos(z / h), math.sin(z / h)
    m = np.array([[x, b], [np.conj(b), -x]], dtype=complex)
    return c * np.eye(2, dtype=complex) - 1j * (s / z) * m


def free_basis(angles: JostAngles, h: float, t: float) -> np.ndarray:
    """Free Jost basis (phi^+, phi^-) of the limiting Hamiltonian at time t."""
    ph_minus = np.exp(-1j * angles.lam * t / h)
    ph_plus = np.exp(+1j * angles.lam * t / h)
    a = angles.angle
    if angles.v_inf > 0:
        return np.array([[math.cos(a) * ph_minus, -math.sin(a) * ph_plus],
                         [math.sin(a) * ph_minus, math.cos(a) * ph_plus]])
    return np.array([[math.sin(a) * ph_minus, -math.cos(a) * ph_plus],
                     [math.cos(a) * ph_minus, math.sin(a) * ph_plus]])


def _oscillatory_tail(model, side: str, v_inf: float, t_eval: float,
                      omega: float, tol: float) -> complex:
    """integral_{+/-inf}^{t_eval} (V - V_inf) exp(i omega s) ds.

    Truncated where one integration by parts bounds the remainder by
    2 * envelope / |omega| below tol.
    """
    level = max(tol * abs(omega) / 4.0, 1e-300)
    try:
        t_far = model.tail_anchor(side, min(level, 1e-7))
    except Exception as exc:  # envelope never reaches the level
        raise TailNotConverged(str(exc)) from exc
    if side == "right":
        t_far = max(t_far, t_eval) + 5.0
        val = linear_phase_integral(
            lambda s: np.real(model.eval(s)) - v_inf, t_far, t_eval, omega)
    else:
        t_far = min(t_far, t_eval) - 5.0
        val = linear_phase_integral(
            lambda s: np.real(model.eval(s)) - v_inf, t_far, t_eval, omega)
    return val


def jost_basis(model, eps: float, h: float, side: str, T: float,
               tol: float = 1e-12) -> np.ndarray:
    """Jost pair (J^+, J^-) evaluated at t = +T (right) or t = -T (left).

    The free basis of the limiting Hamiltonian is corrected by the
    tail-exponential; columns are orthonormal to floating precision.
    """
    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    v_inf = model.v_right if side == "right" else model.v_left
    angles = JostAngles.for_side(v_inf, eps)
    t_eval = T if side == "right" else -T
    phi = free_basis(angles, h, t_eval)

    # exponent X = integral_{+/-inf}^{t_eval} A(s) ds
    two_a = 2.0 * angles.angle
    cos2, sin2 = math.cos(two_a), math.sin(two_a)
    smooth_tail = model.tail_integral(side, t_eval)   # integral to +/-inf from t_eval
    if side == "right":
        i_diag = -smooth_tail
        osc = _oscillatory_tail(model, side, v_inf, t_eval, 2.0 * angles.lam / h, tol)
    else:
        i_diag = smooth_tail
        osc = _oscillatory_tail(model, side, v_inf, t_eval, 2.0 * angles.lam / h, tol)
    sign_diag = 1.0 if v_inf > 0 else -1.0
    x = sign_diag * cos2 * i_diag
    b = -sin2 * osc
    u_corr = herm_phase_exp(x, b, h)
    return phi @ u_corr


def scattering_matrix(model, eps: float, h: float, tol: float = 1e-9,
                      truncation: float | None = None, method: str = "cf4",
                      catalog: CrossingCatalog | None = None) -> ScatteringReport:
    """Full scattering matrix S and transition probability P = |S_21|^2."""
    if not model.has_tails:
        raise ValueError("scattering needs a potential with constant tails")
    if catalog is None:
        catalog = find_crossings(model)
    if truncation is None:
        level = _anchor_level(eps, h, tol)
        t_r = model.tail_anchor("right", level)
        t_l = model.tail_anchor("left", level)
        truncation = max(abs(t_r), abs(t_l))
        if catalog.crossings:
            truncation = max(truncation, abs(catalog.positions[0]) + 2.0,
                             abs(catalog.positions[-1]) + 2.0)

    diag = PropagationDiagnostics()
    m_prop = fundamental_matrix(model, eps, h, -truncation, truncation,
                                tol=tol, method=method, diagnostics=diag)
    j_right = jost_basis(model, eps, h, "right", truncation, tol=tol * 1e-3)
    j_left = jost_basis(model, eps, h, "left", truncation, tol=tol * 1e-3)
    s = j_right.conj().T @ m_prop @ j_left
    defect = float(np.max(np.abs(s.conj().T @ s - np.eye(2))))
    p = float(abs(s[1, 0]) ** 2)
    return ScatteringReport(
        s_matrix=s, p_transition=p, eps=eps, h=h, truncation=truncation,
        anchors=(truncation, -truncation), unitarity_defect=defect,
        diagnostics={
            "steps": diag.steps,
            "richardson_error": diag.richardson_error,
            "method": diag.method,
        },
    )


def _anchor_level(eps: float, h: float, tol: float) -> float:
    """Tail envelope level at the truncation point.

    The residual after the first-order tail correction is quadratic in the
    integrated tail over h, so the level scales with h and the error budget.
    """
    level = h * math.sqrt(tol / (10.0 * max(eps, 1e-9)))
    return float(min(1e-8, max(1e-13, level)))


def connector(model, eps: float, h: float, side: str, anchor: float,
              catalog: CrossingCatalog | None = None):
    """Leading closed form of the Jost-to-local connector on one side.

    Returns (matrix, error_orders) where the matrix is the diagonal phase
    exp(-+ i R/h) for a positive tail limit and the antidiagonal variant when
    the left limit is negative; error_orders tags the neglected entries.
    """
    if catalog is None:
        catalog = find_crossings(model)
    r_val = regularized_action(model, side, anchor, catalog=catalog)
    phase = np.exp(-1j * r_val / h)
    v_inf = model.v_right if side == "right" else model.v_left
    if v_inf > 0:
        mat = np.array([[phase, 0.0], [0.0, np.conj(phase)]], dtype=complex)
        orders = {"diagonal": "eps^2/h", "offdiagonal": "eps^2"}
    else:
        mat = np.array([[0.0, -phase], [np.conj(phase), 0.0]], dtype=complex)
        orders = {"antidiagonal": "eps^2/h", "diagonal": "eps"}
    return mat, orders


def landau_zener_probability(eps: float, h: float, slope: float = 1.0) -> float:
    """Exact transition probability of the linear model V = slope * t."""
    return math.exp(-math.pi * eps * eps / (slope * h))

"""Successive-approximation solutions near a crossing.

The first-order system is turned into an integral system with the scalar
fundamental solutions u^+- = exp(-+ (i/h) integral_{t_ref}^t V) and the
Volterra operators

    K_a^+- f (t) = (i/h) u^+-(t) integral_a^t f(s) / u^+-(s) ds .

Iterating produces two exact solutions w1, w2 normalized to (u^+, 0) and
(0, u^-) at the base points; truncating the Neumann series at depth d leaves
a tail O(mu^(2(d+1))) with mu = eps * h^(-m/(m+1)).  Everything is sampled on
a uniform grid fine enough that the fastest phase advances by a fraction of a
radian per interval; cumulative integrals use exact quintic-spline
antiderivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline

from .errors import QuadratureTolExceeded, SeriesNotContracting
from .potential.catalog import CrossingCatalog, find_crossings, phase_integral
from .quadrature import cumulative_smooth

GRID_MIN_POINTS = 4097
GRID_PHASE_STEP = 0.2     # max radians of the fastest phase per grid interval
GRID_MAX_POINTS = 1 << 21


@dataclass
class MsaGrid:
    """Uniform sample grid over an interval around one crossing."""

    model: object
    h: float
    t_ref: float
    points: np.ndarray
    phase: np.ndarray          # integral of V from t_ref at each grid point
    u_plus: np.ndarray         # exp(-i*phase/h)
    u_minus: np.ndarray        # exp(+i*phase/h)

    @staticmethod
    def build(model, h: float, interval: tuple[float, float], t_ref: float,
              n: int | None = None) -> "MsaGrid":
        a, b = float(interval[0]), float(interval[1])
        if n is None:
            vmax = float(np.max(np.abs(np.real(model.eval(np.linspace(a, b, 512))))))
            needed = int(np.ceil((b - a) * 2.0 * vmax / (GRID_PHASE_STEP * h))) + 1
            n = max(GRID_MIN_POINTS, needed)
            if n > GRID_MAX_POINTS:
                raise QuadratureTolExceeded(
                    f"grid of {n} points needed to resolve oscillations; h too small")
        pts = np.linspace(a, b, n)
        phase = cumulative_smooth(lambda s: np.real(model.eval(s)), pts)
        phase = phase - phase_integral(model, a, t_ref)
        u_plus = np.exp(-1j * phase / h)
        return MsaGrid(model=model, h=h, t_ref=t_ref, points=pts, phase=phase,
                       u_plus=u_plus, u_minus=np.conj(u_plus))

    def u(self, sign: int) -> np.ndarray:
        return self.u_plus if sign > 0 else self.u_minus

    def interp(self, values: np.ndarray, t):
        spl = make_interp_spline(self.points, values, k=5)
        return spl(t)


def apply_K(grid: MsaGrid, sign: int, a: float, f: np.ndarray) -> np.ndarray:
    """Volterra application K_a^+- f on the grid (sign +1 for K^+)."""
    g = f * grid.u(-sign)          # f / u^{sign} = f * u^{-sign}
    spl = make_interp_spline(grid.points, g, k=5)
    anti = spl.antiderivative()
    cumulative = anti(grid.points) - anti(a)
    return (1j / grid.h) * grid.u(sign) * cumulative


@dataclass
class MsaSolution:
    grid: MsaGrid
    which: str                  # "w1" or "w2"
    base_plus: float
    base_minus: float
    depth: int
    comp1: np.ndarray
    comp2: np.ndarray
    term_sups: list = field(default_factory=list)
    truncation_estimate: float = 0.0

    def at(self, t) -> np.ndarray:
        return np.array([self.grid.interp(self.comp1, t),
                         self.grid.interp(self.comp2, t)])

    def column_matrix_at(self, other: "MsaSolution", t) -> np.ndarray:
        return np.array([[self.grid.interp(self.comp1, t), other.grid.interp(other.comp1, t)],
                         [self.grid.interp(self.comp2, t), other.grid.interp(other.comp2, t)]])


def msa_solution(model, eps: float, h: float, which: str,
                 a_plus: float, a_minus: float, depth: int = 3,
                 interval: tuple[float, float] | None = None,
                 t_ref: float | None = None,
                 grid: MsaGrid | None = None) -> MsaSolution:
    """Truncated Neumann-series solution w1 or w2 on an interval.

    w1 is normalized to (u^+, 0) at the base points (first component seeded by
    u^+), w2 to (0, u^-).  ``depth`` counts the eps^2 double applications; the
    recorded truncation estimate is the geometric tail of the term sups.
    """
    if grid is None:
        if interval is None or t_ref is None:
            raise ValueError("need either a grid or (interval, t_ref)")
        grid = MsaGrid.build(model, h, interval, t_ref)
    if which not in ("w1", "w2"):
        raise ValueError("which must be 'w1' or 'w2'")
    if depth < 1:
        raise ValueError("depth >= 1 required")

    lead_sign = +1 if which == "w1" else -1
    a_lead = a_plus if which == "w1" else a_minus
    a_other = a_minus if which == "w1" else a_plus

    f = grid.u(lead_sign).copy()
    sum_lead = f.copy()
    sum_other = np.zeros_like(f)
    sups = [float(np.max(np.abs(f)))]
    for _ in range(depth):
        g = apply_K(grid, -lead_sign, a_other, f)
        sum_other += g
        f = eps * eps * apply_K(grid, lead_sign, a_lead, g)
        sum_lead += f
        sups.append(float(np.max(np.abs(f))))
        if sups[-1] >= sups[-2] and sups[-1] > 1e-14:
            raise SeriesNotContracting(
                f"term sups {sups}: series not contracting (mu too large)")
    ratio = sups[-1] / sups[-2] if sups[-2] > 0 else 0.0
    tail = sups[-1] * ratio / (1.0 - ratio) if ratio < 1.0 else math.inf

    comp_lead = sum_lead
    comp_other = -eps * sum_other
    if which == "w1":
        comp1, comp2 = comp_lead, comp_other
    else:
        comp1, comp2 = comp_other, comp_lead
    return MsaSolution(grid=grid, which=which, base_plus=a_plus, base_minus=a_minus,
                       depth=depth, comp1=comp1, comp2=comp2,
                       term_sups=sups, truncation_estimate=tail)


def residual_norm(sol: MsaSolution, eps: float) -> float:
    """Max norm of i h psi' - H psi on the grid, by finite differences."""
    grid = sol.grid
    h = grid.h
    v = np.real(grid.model.eval(grid.points))
    d1 = np.gradient(sol.comp1, grid.points, edge_order=2)
    d2 = np.gradient(sol.comp2, grid.points, edge_order=2)
    r1 = 1j * h * d1 - (v * sol.comp1 + eps * sol.comp2)
    r2 = 1j * h * d2 - (eps * sol.comp1 - v * sol.comp2)
    interior = slice(2, -2)
    return float(max(np.max(np.abs(r1[interior])), np.max(np.abs(r2[interior]))))


def sampled_norm(grid: MsaGrid, values: np.ndarray, q: float) -> float:
    """Norm sup|f| + h^q sup|f'| with the derivative by finite differences."""
    deriv = np.gradient(values, grid.points, edge_order=2)
    return float(np.max(np.abs(values)) + grid.h ** q * np.max(np.abs(deriv)))


def connection_T_numeric(model, eps: float, h: float, k: int,
                         ell: float, r: float, depth: int = 3,
                         catalog: CrossingCatalog | None = None,
                         grid: MsaGrid | None = None) -> np.ndarray:
    """Change of basis between left-based and right-based solutions.

    Both bases are built over [ell, r] around crossing k; the matrix is read
    off at t = r where the right-based pair reduces to diag(u^+, u^-).
    """
    if catalog is None:
        catalog = find_crossings(model)
    t_k = catalog.positions[k]
    if not (ell < t_k < r):
        raise ValueError(f"need ell < t_k={t_k} < r")
    if grid is None:
        grid = MsaGrid.build(model, h, (ell, r), t_k)
    w1l = msa_solution(model, eps, h, "w1", ell, ell, depth=depth, grid=grid)
    w2l = msa_solution(model, eps, h, "w2", ell, ell, depth=depth, grid=grid)
    u_plus_r = grid.u_plus[-1]
    u_minus_r = grid.u_minus[-1]
    left_cols = np.array([[w1l.comp1[-1], w2l.comp1[-1]],
                          [w1l.comp2[-1], w2l.comp2[-1]]])
    return np.diag([u_minus_r, u_plus_r]) @ left_cols

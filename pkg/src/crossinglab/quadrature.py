"""Quadrature primitives shared across the package.

Two families of tools live here:

* composite Gauss-Legendre rules for smooth (non-oscillatory) integrands,
  used for action integrals and phase accumulation;
* Chebyshev-Lobatto panel machinery for highly oscillatory integrands, where
  each panel is short enough that the phase advances by only a fraction of a
  radian and the integrand is polynomial-like.  Panels carry a spectral
  interpolation model of the local phase derivative so the phase itself is
  known at every node to machine accuracy.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as npcheb

from .errors import QuadratureTolExceeded

DEFAULT_PANEL_ORDER = 16  # Chebyshev degree per oscillatory panel


@lru_cache(maxsize=16)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@lru_cache(maxsize=8)
def lobatto_nodes(order: int) -> np.ndarray:
    """Chebyshev-Lobatto nodes on [-1, 1], ascending, order+1 points."""
    j = np.arange(order + 1)
    return -np.cos(np.pi * j / order)


@lru_cache(maxsize=8)
def _cheb_integral_coeffs(order: int) -> np.ndarray:
    """c_k = integral of T_k over [-1, 1]: 2/(1-k^2) for even k, else 0."""
    k = np.arange(order + 1)
    c = np.zeros(order + 1)
    even = k % 2 == 0
    c[even] = 2.0 / (1.0 - k[even].astype(float) ** 2)
    return c


def cheb_coefficients(values: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients from values at ascending Lobatto nodes.

    ``values`` has shape (..., order+1); coefficients come back in the same
    shape, index k along the last axis.
    """
    from scipy.fft import dct

    order = values.shape[-1] - 1
    # DCT-I expects samples at cos(pi*j/N); our nodes ascend, so flip.
    flipped = values[..., ::-1]
    if np.iscomplexobj(values):
        raw = dct(flipped.real, type=1, axis=-1) + 1j * dct(flipped.imag, type=1, axis=-1)
    else:
        raw = dct(flipped, type=1, axis=-1)
    coeff = raw / order
    coeff[..., 0] *= 0.5
    coeff[..., -1] *= 0.5
    return coeff


class PanelPhaseModel:
    """Spectral model of phi(t) = integral of V from a reference point.

    Given panel breakpoints and a vectorized V, builds per-panel Chebyshev
    interpolants of V, integrates them exactly, and exposes the antiderivative
    at every Lobatto node with the running cross-panel offset applied.
    """

    def __init__(self, breakpoints: np.ndarray, v_values: np.ndarray,
                 order: int = DEFAULT_PANEL_ORDER):
        self.breaks = np.asarray(breakpoints, dtype=float)
        self.order = order
        self.half = 0.5 * np.diff(self.breaks)            # (P,)
        self.coeffs = cheb_coefficients(v_values)          # (P, order+1)
        # Antiderivative coefficients in the local variable, scaled by half-width.
        anti = npcheb.chebint(self.coeffs, m=1, axis=-1)   # (P, order+2)
        self.anti = anti * self.half[:, None]
        # Value of the antiderivative at local node positions, zero at x=-1.
        x = lobatto_nodes(order)
        vander = npcheb.chebvander(x, order + 1)           # (order+1, order+2)
        left = npcheb.chebvander(np.array([-1.0]), order + 1)[0]
        node_vals = (self.anti @ vander.T) - (self.anti @ left)[:, None]
        panel_totals = node_vals[:, -1]
        offsets = np.concatenate([[0.0], np.cumsum(panel_totals)])[:-1]
        self.phi_nodes = node_vals + offsets[:, None]      # (P, order+1)
        self.panel_totals = panel_totals
        self.offsets = offsets

    def node_points(self) -> np.ndarray:
        """Physical coordinates of all panel nodes, shape (P, order+1)."""
        x = lobatto_nodes(self.order)
        mid = 0.5 * (self.breaks[:-1] + self.breaks[1:])
        return mid[:, None] + self.half[:, None] * x[None, :]


def adaptive_mesh(density, a: float, b: float, forced=(),
                  sample_points: int = 4097,
                  max_points: int | None = None) -> np.ndarray:
    """Panel breakpoints on [a, b] with local size ~ 1/density(t).

    ``density`` is a vectorized callable returning panels-per-unit-length.
    ``forced`` points are inserted exactly.  Breakpoints are placed by
    inverting the cumulative density, so the mesh adapts smoothly.
    ``max_points`` raises before any large allocation happens.
    """
    if b <= a:
        return np.array([a, b])
    anchors = sorted({float(a), float(b), *[float(t) for t in forced if a < t < b]})
    pieces = []
    total_count = 0
    for lo, hi in zip(anchors[:-1], anchors[1:]):
        t = np.linspace(lo, hi, sample_points)
        rho = np.maximum(np.asarray(density(t), dtype=float), 1.0 / (hi - lo))
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(t))])
        total = cum[-1]
        count = max(1, int(np.ceil(total)))
        total_count += count
        if max_points is not None and total_count > max_points:
            raise QuadratureTolExceeded(
                f"adaptive mesh needs more than {max_points} panels")
        targets = np.linspace(0.0, total, count + 1)
        brk = np.interp(targets, cum, t)
        brk[0], brk[-1] = lo, hi
        pieces.append(brk[:-1])
    pieces.append(np.array([anchors[-1]]))
    return np.concatenate(pieces)


def panel_integrate_nodes(values: np.ndarray, half_widths: np.ndarray,
                          return_tail: bool = False):
    """Integrate per-panel node values via the Chebyshev coefficient route.

    ``values`` has shape (P, order+1).  Returns per-panel integrals and,
    optionally, a per-panel spectral tail estimate (size of the top two
    coefficients) as an error indicator.
    """
    order = values.shape[-1] - 1
    coeff = cheb_coefficients(values)
    ic = _cheb_integral_coeffs(order)
    integrals = (coeff @ ic) * half_widths
    if not return_tail:
        return integrals
    tail = (np.abs(coeff[..., -1]) + np.abs(coeff[..., -2])) * half_widths * 2.0
    return integrals, tail


def integrate_smooth(fn, a: float, b: float, max_panel: float = 0.125,
                     order: int = 16, rtol: float = 1e-13,
                     atol: float = 1e-15) -> float:
    """Composite Gauss-Legendre integral of a smooth vectorized function.

    Compares the requested order against order//2 on the same panels as an
    error estimate; raises QuadratureTolExceeded when it is not met.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    n_panels = max(1, int(np.ceil((b - a) / max_panel)))
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)

    def composite(n):
        x, w = gauss_legendre(n)
        pts = mid[:, None] + half[:, None] * x[None, :]
        vals = fn(pts.ravel()).reshape(pts.shape)
        return float(np.sum(vals @ w * half))

    hi = composite(order)
    lo = composite(max(4, order // 2))
    err = abs(hi - lo)
    if err > atol + rtol * max(1.0, abs(hi)):
        raise QuadratureTolExceeded(
            f"smooth quadrature error estimate {err:.3e} over [{a}, {b}]")
    return sign * hi


def cumulative_smooth(fn, points: np.ndarray, order: int = 8) -> np.ndarray:
    """Cumulative integral of a smooth function along an ascending grid.

    Returns F with F[0] = 0 and F[j] = integral from points[0] to points[j],
    each interval handled by an order-point Gauss-Legendre rule.
    """
    points = np.asarray(points, dtype=float)
    x, w = gauss_legendre(order)
    mid = 0.5 * (points[:-1] + points[1:])
    half = 0.5 * np.diff(points)
    pts = mid[:, None] + half[:, None] * x[None, :]
    vals = fn(pts.ravel()).reshape(pts.shape)
    increments = (vals @ w) * half
    return np.concatenate([[0.0], np.cumsum(increments)])


def linear_phase_integral(fn, a: float, b: float, omega: float,
                          order: int = DEFAULT_PANEL_ORDER,
                          phase_per_panel: float = 0.5) -> complex:
    """Integral of fn(t) * exp(i omega t) over [a, b] by oscillation-aware panels."""
    if a == b:
        return 0.0 + 0.0j
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    width = (b - a)
    n_panels = max(1, int(np.ceil(abs(omega) * width / phase_per_panel)), int(np.ceil(width / 0.5)))
    edges = np.linspace(a, b, n_panels + 1)
    halfs = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    x = lobatto_nodes(order)
    pts = mids[:, None] + halfs[:, None] * x[None, :]
    g = fn(pts.ravel()).reshape(pts.shape) * np.exp(1j * omega * pts)
    integrals = panel_integrate_nodes(g, halfs)
    return sign * complex(np.sum(integrals))

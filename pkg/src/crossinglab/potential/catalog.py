"""Zero catalog of the coupling function and the action-type integrals.

Conventions follow the two-level crossing problem: zeros are ordered by
DECREASING position (t_1 > t_2 > ... > t_n, index 0 is the rightmost), the
partial order sums sigma_k fix the sign of V on each gap, and V -> V_r > 0 on
the right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..errors import (
    AnchorInsideCrossings,
    BracketingFailed,
    TailIntegralVanishes,
    ZeroOrderUndetermined,
)
from ..quadrature import cumulative_smooth, integrate_smooth
from .families import PotentialModel

ORDER_TOL = 1e-9       # |V^(l)| below ORDER_TOL * scale counts as vanishing
MAX_ZERO_ORDER = 12


@dataclass(frozen=True)
class Crossing:
    t: float
    m: int
    v: float  # V^(m)(t), the first nonvanishing derivative


@dataclass(frozen=True)
class CrossingCatalog:
    crossings: tuple[Crossing, ...]   # ordered by decreasing t
    sigma: tuple[int, ...]            # sigma[k] = m_0 + ... + m_k

    @property
    def n(self) -> int:
        return len(self.crossings)

    @property
    def positions(self) -> tuple[float, ...]:
        return tuple(c.t for c in self.crossings)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(c.m for c in self.crossings)

    @property
    def sigma_n(self) -> int:
        return self.sigma[-1] if self.sigma else 0

    @property
    def m_star(self) -> int:
        return max(c.m for c in self.crossings)

    @property
    def lambda_star(self) -> tuple[int, ...]:
        m = self.m_star
        return tuple(k for k, c in enumerate(self.crossings) if c.m == m)

    def sigma_before(self, k: int) -> int:
        """sigma_{k-1}: total order of crossings to the right of crossing k."""
        return self.sigma[k - 1] if k > 0 else 0

    def to_dict(self) -> dict:
        return {
            "crossings": [{"t": c.t, "m": c.m, "v": c.v} for c in self.crossings],
            "sigma": list(self.sigma),
            "m_star": self.m_star if self.crossings else None,
            "lambda_star": list(self.lambda_star) if self.crossings else [],
        }


def _zero_order(model: PotentialModel, t0: float) -> tuple[int, float]:
    """Order and leading derivative of a zero, from exact jets."""
    jet = model.taylor(t0, MAX_ZERO_ORDER)
    mags = np.abs(jet)
    scale = max(1.0, float(mags.max()))
    for order in range(1, MAX_ZERO_ORDER + 1):
        coeff = jet[order]
        if abs(coeff) > ORDER_TOL * scale:
            return order, float(np.real(coeff)) * math.factorial(order)
    raise ZeroOrderUndetermined(
        f"all derivatives at t={t0} up to order {MAX_ZERO_ORDER} below tolerance")


def _polish_zero(model: PotentialModel, t0: float) -> float:
    """Sharpen an approximate zero location.

    A multiple root reported by a generic root finder is off by ~sqrt(eps),
    which would corrupt the order classification.  The tentative multiplicity
    is read from the jet with a loose threshold, then Newton is applied to
    the (m-1)-th derivative, which has a simple zero there.
    """
    for _ in range(60):
        jet = model.taylor(t0, MAX_ZERO_ORDER)
        scale = max(1.0, float(np.max(np.abs(jet))))
        m_hat = None
        for order in range(1, MAX_ZERO_ORDER + 1):
            if abs(jet[order]) > 1e-5 * scale:
                m_hat = order
                break
        if m_hat is None:
            raise ZeroOrderUndetermined(f"no dominant derivative near t={t0}")
        step = -np.real(jet[m_hat - 1] / (m_hat * jet[m_hat])) if m_hat > 1 else \
            -np.real(jet[0] / jet[1])
        t0 = float(t0 + step)
        if abs(step) < 1e-14 * (1.0 + abs(t0)):
            return t0
    return t0


def find_crossings(model: PotentialModel,
                   search_interval: tuple[float, float] | None = None,
                   scan_points: int = 4001) -> CrossingCatalog:
    """Locate all real zeros of V with their orders and leading coefficients.

    Builtin families expose their zero candidates exactly; a sign-change scan
    over the search interval guards against omissions (it can only add
    odd-order zeros, the even-order ones do not change sign).
    """
    if search_interval is None:
        search_interval = model.suggest_interval()
    lo, hi = search_interval
    candidates = [z for z in model.candidate_zeros() if lo < z < hi]
    if len(candidates) != len(model.candidate_zeros()):
        raise BracketingFailed("family zeros fall outside the search interval")

    ts = np.linspace(lo, hi, scan_points)
    vs = np.real(model.eval(ts))
    sign_changes = np.nonzero(np.sign(vs[:-1]) * np.sign(vs[1:]) < 0)[0]
    for idx in sign_changes:
        a, b = ts[idx], ts[idx + 1]
        if any(a - 1e-6 <= z <= b + 1e-6 for z in candidates):
            continue  # bracket sits on an already known zero
        root = brentq(lambda s: float(np.real(model.eval(s))), a, b,
                      xtol=1e-12, maxiter=200)
        if not any(abs(root - z) < 1e-6 for z in candidates):
            candidates.append(root)

    polished = []
    for z in candidates:
        z = _polish_zero(model, z)
        if not any(abs(z - p) < 1e-8 for p in polished):
            polished.append(z)
    zeros = sorted(polished, reverse=True)  # decreasing t
    crossings = []
    for t0 in zeros:
        m, v = _zero_order(model, t0)
        crossings.append(Crossing(t=t0, m=m, v=v))

    sigma = tuple(int(s) for s in np.cumsum([c.m for c in crossings]))
    catalog = CrossingCatalog(tuple(crossings), sigma)
    _check_sign_pattern(model, catalog, lo, hi)
    return catalog


def _check_sign_pattern(model, catalog, lo, hi):
    """(-1)^sigma_k V > 0 on each gap, and the parity of V_l, assuming V_r > 0."""
    pts = list(catalog.positions)
    mids = []
    if pts:
        mids.append((0, 0.5 * (pts[0] + hi)))  # right of the first crossing: sigma_0 = 0
        for k in range(len(pts) - 1):
            mids.append((k + 1, 0.5 * (pts[k] + pts[k + 1])))
        mids.append((len(pts), 0.5 * (pts[-1] + lo)))
    for count, mid in mids:
        sgn = (-1.0) ** (catalog.sigma[count - 1] if count > 0 else 0)
        if sgn * float(np.real(model.eval(mid))) <= 0:
            raise BracketingFailed(
                f"sign of V at t={mid:.4g} inconsistent with crossing orders")
    if model.has_tails and catalog.crossings:
        if (-1.0) ** catalog.sigma_n * model.v_left <= 0:
            raise BracketingFailed("parity of total order inconsistent with V_l")


def phase_integral(model: PotentialModel, a: float, b: float) -> float:
    """integral of V over [a, b] to near machine precision."""
    if a == b:
        return 0.0
    return integrate_smooth(lambda s: np.real(model.eval(s)), a, b)


def cumulative_phase(model: PotentialModel, grid: np.ndarray) -> np.ndarray:
    """Cumulative integral of V from grid[0] along an ascending grid."""
    return cumulative_smooth(lambda s: np.real(model.eval(s)), grid)


def area_between(catalog: CrossingCatalog, model: PotentialModel,
                 j: int, k: int) -> float:
    """Phase-space area 2 * integral of |V| between crossings j and k (j < k).

    Indices follow the catalog ordering (decreasing t), so crossing j lies to
    the right of crossing k.  The integral is split at intermediate zeros
    where |V| has kinks.
    """
    if j == k:
        return 0.0
    if not (0 <= j < k < catalog.n):
        raise IndexError(f"need 0 <= j < k < {catalog.n}")
    total = 0.0
    pts = catalog.positions
    for idx in range(j, k):
        hi, lo = pts[idx], pts[idx + 1]
        piece = integrate_smooth(lambda s: np.real(model.eval(s)), lo, hi)
        total += abs(piece)
    return 2.0 * total


def area_adjacent(catalog: CrossingCatalog, model: PotentialModel, k: int) -> float:
    """Area A_k between consecutive crossings k and k+1 (0-based)."""
    return area_between(catalog, model, k, k + 1)


def regularized_action(model: PotentialModel, side: str, t_anchor: float,
                       catalog: CrossingCatalog | None = None,
                       vanish_tol: float = 1e-13) -> float:
    """Action constant R with the infinite tail folded in.

    R_r = V_r * t_r + integral_{+inf}^{t_r} (V - V_r), and the mirrored
    expression on the left.  The anchor must sit beyond the outermost zero and
    the tail integral must not vanish (it controls the leading diagonal phase
    of the connector there).
    """
    if catalog is None:
        catalog = find_crossings(model)
    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    if catalog.crossings:
        if side == "right" and t_anchor <= catalog.positions[0]:
            raise AnchorInsideCrossings(f"anchor {t_anchor} not beyond t_1")
        if side == "left" and t_anchor >= catalog.positions[-1]:
            raise AnchorInsideCrossings(f"anchor {t_anchor} not beyond t_n")
    tail = model.tail_integral(side, t_anchor)
    if abs(tail) < vanish_tol:
        raise TailIntegralVanishes(
            f"tail integral {tail:.3e} at anchor {t_anchor}; move the anchor")
    v_inf = model.v_right if side == "right" else model.v_left
    if side == "right":
        return v_inf * t_anchor - tail  # integral from +inf to t_r flips sign
    return v_inf * t_anchor + tail


def effective_potential(catalog: CrossingCatalog, sharp_odd_indices) -> "SignMask":
    """Sign mask implementing the effective coupling in mixed regimes.

    Walking from t = +inf toward -inf, the sign of the effective coupling
    flips at every odd-order adiabatic crossing; if their count is odd the
    flip extends to -inf.
    """
    flip_points = sorted((catalog.positions[k] for k in sharp_odd_indices),
                         reverse=True)
    return SignMask(tuple(flip_points))


@dataclass(frozen=True)
class SignMask:
    """Piecewise sign flips at the given descending positions."""

    flip_points: tuple[float, ...]

    def sign(self, t):
        t = np.asarray(t, dtype=float)
        count = np.zeros(t.shape, dtype=int)
        for p in self.flip_points:
            count += (t < p).astype(int)
        out = np.where(count % 2 == 0, 1.0, -1.0)
        return out[()] if out.ndim == 0 else out

    def intervals(self) -> list[tuple[float, float]]:
        """Flipped intervals as (lower, upper) pairs, -inf allowed."""
        pts = list(self.flip_points)
        out = []
        for i in range(0, len(pts), 2):
            upper = pts[i]
            lower = pts[i + 1] if i + 1 < len(pts) else -math.inf
            out.append((lower, upper))
        return out


def effective_phase_integral(model: PotentialModel, mask: SignMask,
                             a: float, b: float) -> float:
    """integral of mask * V over [a, b], split at mask flip points."""
    if a == b:
        return 0.0
    lo, hi = (a, b) if a < b else (b, a)
    cuts = [lo] + [p for p in sorted(mask.flip_points) if lo < p < hi] + [hi]
    total = 0.0
    for x0, x1 in zip(cuts[:-1], cuts[1:]):
        s = float(mask.sign(0.5 * (x0 + x1)))
        total += s * integrate_smooth(lambda u: np.real(model.eval(u)), x0, x1)
    return total if a < b else -total

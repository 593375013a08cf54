"""Complex turning points and their action integrals.

Near a real zero t_k of order m the function V(t)**2 + eps**2 has 2m complex
zeros arranged like scaled roots of -1.  The two closest to the real axis in
the upper half-plane control the exponential suppression of transitions in
the adiabatic regime through the imaginary part of the action

    A = 2 * integral_{t_k}^{zeta} sqrt(V**2 + eps**2) dt

taken along the straight segment with the square root branch equal to +eps at
t_k.  Im A scales like a * eps**((m+1)/m); the coefficient a is extracted by
Richardson extrapolation over two eps values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import BranchAmbiguity, NewtonDiverged, TurningPointFailure
from ..quadrature import gauss_legendre
from .catalog import CrossingCatalog
from .families import PotentialModel

NEWTON_MAX_ITER = 60
NEWTON_TOL = 1e-12


@dataclass(frozen=True)
class TurningPoint:
    zeta: complex        # root of V^2 + eps^2 in the upper half-plane
    action: complex      # A = 2 int_{t_k}^{zeta} sqrt(V^2+eps^2)
    decay_coeff: float   # a with Im A ~ a * eps^((m+1)/m)


@dataclass(frozen=True)
class TurningPointSet:
    k: int
    m: int
    eps: float
    first: TurningPoint   # branch index j = 1
    last: TurningPoint    # branch index j = m (same point when m = 1)
    scaling_exponent: float  # fitted Im A exponent, should be (m+1)/m

    @property
    def a_min(self) -> float:
        return min(self.first.decay_coeff, self.last.decay_coeff)


def _newton_root(model: PotentialModel, seed: complex, eps: float) -> complex:
    z = complex(seed)
    tol = NEWTON_TOL * max(eps * eps, 1e-300)
    f = complex(model.eval(np.asarray(z))) ** 2 + eps * eps
    for _ in range(NEWTON_MAX_ITER):
        if abs(f) <= tol:
            return z
        v = complex(model.eval(np.asarray(z)))
        dv = complex(model.deriv(np.asarray(z)))
        df = 2.0 * v * dv
        if df == 0:
            raise NewtonDiverged(f"stationary Newton step at z={z}")
        step = f / df
        # damped update: halve the step while the residual grows
        for _ in range(50):
            z_new = z - step
            f_new = complex(model.eval(np.asarray(z_new))) ** 2 + eps * eps
            if abs(f_new) < abs(f) or abs(f_new) <= tol:
                break
            step *= 0.5
        else:
            raise NewtonDiverged(f"residual stalled at |F|={abs(f):.3e}")
        z, f = z_new, f_new
    if abs(f) <= tol * 10:
        return z
    raise NewtonDiverged(f"no convergence after {NEWTON_MAX_ITER} iterations, |F|={abs(f):.3e}")


def _seed(t_k: float, m: int, v: float, eps: float, j: int) -> complex:
    # V^2 + eps^2 depends on |v| only; seeding with |v| targets the pair of
    # roots nearest the real axis for either sign of the leading coefficient.
    radius = (math.factorial(m) * eps / abs(v)) ** (1.0 / m)
    return t_k + radius * np.exp(1j * math.pi * (2 * j - 1) / (2 * m))


def _action_segment(model: PotentialModel, t_k: float, zeta: complex,
                    eps: float, n_nodes: int = 48) -> complex:
    """2 * integral along the straight segment, branch +eps at t_k.

    The substitution s = 1 - u^2 removes the square-root endpoint singularity
    at the turning point; the branch is propagated by continuity from t_k.
    """
    x, w = gauss_legendre(n_nodes)
    u = 0.5 * (x + 1.0)          # nodes on (0,1)
    wu = 0.5 * w
    s = 1.0 - u * u              # path parameter, ascending near 1 first
    order = np.argsort(s)
    s_sorted = s[order]
    z = t_k + s_sorted * (zeta - t_k)
    f_vals = model.eval(z) ** 2 + eps * eps
    g = np.sqrt(f_vals.astype(complex))
    # fix branch by continuity starting from +eps at s=0
    prev = eps
    for i in range(len(g)):
        if abs(g[i] - prev) > abs(g[i] + prev):
            g[i] = -g[i]
        if abs(g[i]) < 1e-13 * eps:
            raise BranchAmbiguity("integrand vanishes inside the action path")
        prev = g[i]
    # undo ordering, integrate in u
    g_unsorted = np.empty_like(g)
    g_unsorted[order] = g
    integral = np.sum(wu * g_unsorted * 2.0 * u) * (zeta - t_k)
    return 2.0 * integral


def _root_and_action(model, t_k, m, v, eps, j):
    zeta = _newton_root(model, _seed(t_k, m, v, eps, j), eps)
    if zeta.imag < 0:
        zeta = zeta.conjugate()
    if abs(zeta - t_k) > 10.0 * abs(_seed(t_k, m, v, eps, j) - t_k) + 1e-12:
        raise TurningPointFailure(
            f"Newton converged far from the crossing: zeta={zeta}, t_k={t_k}")
    action = _action_segment(model, t_k, zeta, eps)
    if action.imag <= 0:
        raise TurningPointFailure(f"Im A = {action.imag:.3e} <= 0 at eps={eps}")
    return zeta, action


def turning_points(model: PotentialModel, catalog: CrossingCatalog, k: int,
                   eps: float) -> TurningPointSet:
    """Nearest upper-half-plane turning points and actions for crossing k.

    Decay coefficients come from Richardson extrapolation of
    Im A / eps^((m+1)/m) over eps and eps/2; the fitted scaling exponent is
    recorded so callers can check it against (m+1)/m.
    """
    c = catalog.crossings[k]
    m, v, t_k = c.m, c.v, c.t
    exponent = (m + 1.0) / m
    js = (1, m) if m > 1 else (1,)

    points = []
    im_ratio = []
    for j in js:
        zeta, action = _root_and_action(model, t_k, m, v, eps, j)
        _, action_half = _root_and_action(model, t_k, m, v, eps / 2.0, j)
        a_eps = action.imag / eps ** exponent
        a_half = action_half.imag / (eps / 2.0) ** exponent
        q = 2.0 ** (-1.0 / m)
        a_extrap = (a_half - q * a_eps) / (1.0 - q)
        fitted = math.log(action.imag / action_half.imag) / math.log(2.0)
        points.append((TurningPoint(zeta, action, a_extrap), fitted))
        im_ratio.append(fitted)

    first = points[0][0]
    last = points[-1][0]
    scaling = float(np.mean(im_ratio))
    if abs(scaling - exponent) > 0.25 * exponent:
        raise TurningPointFailure(
            f"Im A scaling exponent {scaling:.3f} far from {(m+1)/m:.3f}; "
            "eps may be too large for the asymptotic regime")
    return TurningPointSet(k=k, m=m, eps=eps, first=first, last=last,
                           scaling_exponent=scaling)

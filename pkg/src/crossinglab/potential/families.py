"""Built-in coupling-function families.

Each family is an analytic function V(t) with nonzero limits V_r, V_l at
t -> +/-inf, exponentially integrable tails, and exact derivatives of any
order obtained by propagating Taylor jets through the closed-form building
blocks (tanh, sigmoid, softplus, polynomials).  Jets eliminate finite
difference noise when classifying zero orders and進 leading coefficients.

Families:

* ScaledTanhProduct  c * prod_i tanh(s_i (t - b_i))**p_i  -- zeros of
  prescribed orders p_i at the centers b_i.
* LinearLZ           v * t, optionally saturated to constants v*w beyond
  |t| ~ w by a smooth softplus clamp (required for scattering runs).
* PolynomialWindowed p(clamp(t)) -- arbitrary polynomial behaviour inside
  the window, constants outside; stress-test family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import spence

from ..errors import ConfigError

_MAX_JET_ORDER = 24


# ----------------------------------------------------------------------------
# Jet (truncated Taylor series) arithmetic.  A jet is a 1-D numpy array of
# coefficients c[k] of tau**k around some base point; complex base points are
# allowed everywhere.


def _jet_mul(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    out = np.convolve(a, b)[: n + 1]
    if len(out) < n + 1:
        out = np.pad(out, (0, n + 1 - len(out)))
    return out


def _jet_pow(a: np.ndarray, p: int, n: int) -> np.ndarray:
    out = np.zeros(n + 1, dtype=a.dtype)
    out[0] = 1.0
    base = a
    while p:
        if p & 1:
            out = _jet_mul(out, base, n)
        p >>= 1
        if p:
            base = _jet_mul(base, base, n)
    return out


def _tanh_jet(x0: complex, n: int) -> np.ndarray:
    """Taylor coefficients of tanh around x0, via u' = 1 - u**2."""
    c = np.zeros(n + 1, dtype=complex)
    c[0] = np.tanh(x0)
    for k in range(n):
        sq = np.dot(c[: k + 1], c[k::-1])
        rhs = (1.0 if k == 0 else 0.0) - sq
        c[k + 1] = rhs / (k + 1)
    return c


def _sigmoid(x0: complex) -> complex:
    if np.real(x0) >= 0:
        return 1.0 / (1.0 + np.exp(-x0))
    e = np.exp(x0)
    return e / (1.0 + e)


def _sigmoid_jet(x0: complex, n: int) -> np.ndarray:
    """Taylor coefficients of the logistic function, via s' = s - s**2."""
    c = np.zeros(n + 1, dtype=complex)
    c[0] = _sigmoid(x0)
    for k in range(n):
        sq = np.dot(c[: k + 1], c[k::-1])
        c[k + 1] = (c[k] - sq) / (k + 1)
    return c


def _softplus(x):
    """log(1 + exp(x)) elementwise, complex-safe and overflow-safe."""
    x = np.asarray(x)
    if np.iscomplexobj(x):
        xx = np.atleast_1d(x)
        out = np.empty(xx.shape, dtype=complex)
        big = np.real(xx) > 30.0
        out[big] = xx[big] + np.log1p(np.exp(-xx[big]))
        out[~big] = np.log1p(np.exp(xx[~big]))
        out = out.reshape(x.shape)
        return out[()] if x.ndim == 0 else out
    return np.logaddexp(0.0, x)


def _softplus_jet(x0: complex, n: int) -> np.ndarray:
    c = np.zeros(n + 1, dtype=complex)
    c[0] = complex(_softplus(np.asarray(x0, dtype=complex)))
    if n >= 1:
        sig = _sigmoid_jet(x0, n - 1)
        for k in range(1, n + 1):
            c[k] = sig[k - 1] / k
    return c


def _dilog_neg_exp(x: float, beta: float) -> float:
    """Closed form of integral_{-inf}^{x} softplus_beta(u) du.

    Equals -Li2(-exp(beta*x)) / beta**2; the inversion identity keeps the
    dilogarithm argument inside the unit disk for large x.
    """
    y = beta * x
    if y <= 0:
        return -float(spence(1.0 + math.exp(y))) / beta**2
    li2_small = float(spence(1.0 + math.exp(-y)))
    # Li2(-e^y) = -y^2/2 - pi^2/6 - Li2(-e^-y)
    return (0.5 * y * y + math.pi**2 / 6.0 - li2_small) / beta**2


class _SmoothClamp:
    """Smooth saturation of t into [-w, w] with exponential approach rate beta."""

    def __init__(self, window: float, sharpness: float):
        self.w = float(window)
        self.beta = float(sharpness)

    def __call__(self, t):
        t = np.asarray(t)
        b = self.beta
        return t - _softplus(b * (t - self.w)) / b + _softplus(b * (-t - self.w)) / b

    def deriv(self, t):
        t = np.asarray(t)
        b = self.beta
        if np.iscomplexobj(t):
            s1 = 1.0 / (1.0 + np.exp(-b * (t - self.w)))
            s2 = 1.0 / (1.0 + np.exp(b * (t + self.w)))
            return 1.0 - s1 - s2
        from scipy.special import expit
        return 1.0 - expit(b * (t - self.w)) - expit(-b * (t + self.w))

    def jet(self, t0: complex, n: int) -> np.ndarray:
        b = self.beta
        lin = np.zeros(n + 1, dtype=complex)
        lin[0] = complex(t0)
        if n >= 1:
            lin[1] = 1.0
        k = np.arange(n + 1)
        sp1 = _softplus_jet(b * (complex(t0) - self.w), n) * (b ** k) / b
        sp2 = _softplus_jet(b * (-complex(t0) - self.w), n) * ((-b) ** k) / b
        return lin - sp1 + sp2


# ----------------------------------------------------------------------------


class PotentialModel:
    """Abstract base: analytic V(t) with constant tails."""

    family_name = "abstract"

    # -- evaluation ----------------------------------------------------------
    def eval(self, t):
        raise NotImplementedError

    def deriv(self, t):
        raise NotImplementedError

    def taylor(self, t0, n: int) -> np.ndarray:
        """Taylor coefficients c[0..n] of V around t0 (complex allowed)."""
        raise NotImplementedError

    def derivative(self, t0, order: int):
        """Exact derivative V^(order)(t0) from the Taylor jet."""
        if order > _MAX_JET_ORDER:
            raise ConfigError(f"derivative order {order} beyond jet cap {_MAX_JET_ORDER}")
        c = self.taylor(t0, order)
        val = c[order] * math.factorial(order)
        if np.iscomplexobj(np.asarray(t0)):
            return complex(val)
        return float(np.real(val))

    # -- structure -----------------------------------------------------------
    @property
    def v_right(self) -> float:
        raise NotImplementedError

    @property
    def v_left(self) -> float:
        raise NotImplementedError

    @property
    def has_tails(self) -> bool:
        return True

    def candidate_zeros(self) -> list[float]:
        raise NotImplementedError

    def suggest_interval(self, margin: float = 2.0) -> tuple[float, float]:
        zs = self.candidate_zeros()
        if not zs:
            return (-margin, margin)
        return (min(zs) - margin, max(zs) + margin)

    # -- tails ---------------------------------------------------------------
    def tail_envelope(self, side: str, t: float) -> float:
        """Upper bound on |V(t) - V_side| valid in the far tail."""
        raise NotImplementedError

    def tail_anchor(self, side: str, level: float) -> float:
        """Smallest |t| (beyond all zeros) where the tail envelope <= level."""
        lo, hi = self.suggest_interval(margin=1.0)
        t = hi if side == "right" else lo
        step = 0.5 if side == "right" else -0.5
        for _ in range(10000):
            if self.tail_envelope(side, t) <= level:
                return t
            t += step
        raise ConfigError("tail envelope never reached the requested level")

    def tail_integral(self, side: str, anchor: float) -> float:
        """integral of (V - V_side) from the anchor out to +/- infinity."""
        raise NotImplementedError

    # -- config --------------------------------------------------------------
    def to_config(self) -> dict:
        raise NotImplementedError

    def validate(self) -> None:
        if not self.has_tails:
            return
        if not (self.v_right > 0):
            raise ConfigError("V must approach a positive limit at t -> +inf")
        if self.v_left == 0:
            raise ConfigError("V must approach a nonzero limit at t -> -inf")


@dataclass(frozen=True)
class TanhFactor:
    power: int
    slope: float
    center: float

    def __post_init__(self):
        if self.power < 1 or self.slope <= 0:
            raise ConfigError("tanh factor needs power >= 1 and slope > 0")


class ScaledTanhProduct(PotentialModel):
    family_name = "scaled_tanh_product"

    def __init__(self, scale: float, factors):
        self.scale = float(scale)
        self.factors = tuple(
            f if isinstance(f, TanhFactor) else TanhFactor(**f) for f in factors
        )
        if not self.factors:
            raise ConfigError("at least one tanh factor required")
        centers = [f.center for f in self.factors]
        if len(set(centers)) != len(centers):
            raise ConfigError("tanh factors must have distinct centers")
        self.validate()

    def eval(self, t):
        t = np.asarray(t)
        out = np.full(t.shape, self.scale, dtype=complex if np.iscomplexobj(t) else float)
        for f in self.factors:
            out = out * np.tanh(f.slope * (t - f.center)) ** f.power
        return out[()] if out.ndim == 0 else out

    def deriv(self, t):
        t = np.asarray(t)
        dtype = complex if np.iscomplexobj(t) else float
        th = [np.tanh(f.slope * (t - f.center)) for f in self.factors]
        total = np.zeros(t.shape, dtype=dtype)
        for i, f in enumerate(self.factors):
            term = np.full(t.shape, self.scale, dtype=dtype)
            for j, g in enumerate(self.factors):
                if j == i:
                    term = term * f.power * f.slope * th[j] ** (f.power - 1) * (1.0 - th[j] ** 2)
                else:
                    term = term * th[j] ** g.power
            total += term
        return total

    def taylor(self, t0, n: int) -> np.ndarray:
        out = np.zeros(n + 1, dtype=complex)
        out[0] = self.scale
        for f in self.factors:
            base = _tanh_jet(f.slope * (complex(t0) - f.center), n)
            base = base * (f.slope ** np.arange(n + 1))
            out = _jet_mul(out, _jet_pow(base, f.power, n), n)
        return out

    @property
    def v_right(self) -> float:
        return self.scale

    @property
    def v_left(self) -> float:
        parity = sum(f.power for f in self.factors) % 2
        return self.scale * (-1.0) ** parity

    def candidate_zeros(self) -> list[float]:
        return sorted(f.center for f in self.factors)

    def tail_envelope(self, side: str, t: float) -> float:
        # |tanh(x)**p - 1| <= 2 p exp(-2|x|) once |tanh(x)| > 0.65; a product of
        # factors deviates by at most the sum of the individual deviations
        # (all factors have modulus <= 1), doubled for safety.
        total = 0.0
        for f in self.factors:
            x = f.slope * (t - f.center)
            if (side == "right" and x < 1.0) or (side == "left" and x > -1.0):
                return math.inf
            total += 2.0 * f.power * math.exp(-2.0 * abs(x))
        return 2.0 * abs(self.scale) * total

    def tail_integral(self, side: str, anchor: float) -> float:
        from ..quadrature import integrate_smooth

        v_inf = self.v_right if side == "right" else self.v_left
        rate = 2.0 * min(f.slope for f in self.factors)
        span = max(60.0 / rate, 10.0)
        fn = lambda s: np.real(self.eval(s)) - v_inf  # noqa: E731
        if side == "right":
            return integrate_smooth(fn, anchor, anchor + span, max_panel=0.5)
        return integrate_smooth(fn, anchor - span, anchor, max_panel=0.5)

    def to_config(self) -> dict:
        return {
            "family": self.family_name,
            "params": {
                "scale": self.scale,
                "factors": [
                    {"power": f.power, "slope": f.slope, "center": f.center}
                    for f in self.factors
                ],
            },
        }


class LinearLZ(PotentialModel):
    """V = slope * t, optionally clamped to constants beyond |t| ~ window."""

    family_name = "linear_lz"

    def __init__(self, slope: float = 1.0, window: float | None = None,
                 sharpness: float = 4.0):
        if slope <= 0:
            raise ConfigError("linear_lz slope must be positive (V_r > 0)")
        self.slope = float(slope)
        self.window = None if window is None else float(window)
        self.clamp = None if window is None else _SmoothClamp(window, sharpness)
        self.validate()

    @property
    def has_tails(self) -> bool:
        return self.window is not None

    def eval(self, t):
        t = np.asarray(t)
        if self.clamp is None:
            return self.slope * t
        return self.slope * self.clamp(t)

    def deriv(self, t):
        t = np.asarray(t)
        if self.clamp is None:
            return np.full(t.shape, self.slope)
        return self.slope * self.clamp.deriv(t)

    def taylor(self, t0, n: int) -> np.ndarray:
        if self.clamp is None:
            out = np.zeros(n + 1, dtype=complex)
            out[0] = self.slope * complex(t0)
            if n >= 1:
                out[1] = self.slope
            return out
        return self.slope * self.clamp.jet(complex(t0), n)

    @property
    def v_right(self) -> float:
        if self.window is None:
            raise ConfigError("pure linear model has no tail limit")
        return self.slope * self.window

    @property
    def v_left(self) -> float:
        return -self.v_right

    def candidate_zeros(self) -> list[float]:
        return [0.0]

    def tail_envelope(self, side: str, t: float) -> float:
        if self.clamp is None:
            return math.inf
        b, w = self.clamp.beta, self.window
        x = t - w if side == "right" else -t - w
        if x < 0.5:
            return math.inf
        # |V - V_inf| <= slope * (softplus(b(w-|t|)) + softplus(-b(|t|+w))) / b
        return self.slope * 2.0 * math.exp(-b * x) / b

    def tail_integral(self, side: str, anchor: float) -> float:
        if self.clamp is None:
            raise ConfigError("pure linear model has no integrable tail")
        c = self.clamp
        if side == "right":
            # V - V_r = slope*(clamp(t) - w) = slope*(softplus(-b(t+w)) - softplus(b(w-t)))/b
            a1 = _dilog_neg_exp(c.w - anchor, c.beta)
            a2 = _dilog_neg_exp(-c.w - anchor, c.beta)
            return self.slope * (a2 - a1)
        a1 = _dilog_neg_exp(anchor + c.w, c.beta)
        a2 = _dilog_neg_exp(anchor - c.w, c.beta)
        return self.slope * (a1 - a2)

    def to_config(self) -> dict:
        params = {"slope": self.slope}
        if self.window is not None:
            params["window"] = self.window
            params["sharpness"] = self.clamp.beta
        return {"family": self.family_name, "params": params}

    def validate(self) -> None:
        if self.window is not None:
            super().validate()


class PolynomialWindowed(PotentialModel):
    """Polynomial inside a smooth window, constants outside."""

    family_name = "polynomial_windowed"

    def __init__(self, coefficients, window: float, sharpness: float = 4.0):
        self.coefficients = np.asarray(coefficients, dtype=float)
        if self.coefficients.ndim != 1 or len(self.coefficients) < 2:
            raise ConfigError("need polynomial coefficients [a0, a1, ...] with degree >= 1")
        self.clamp = _SmoothClamp(window, sharpness)
        self.window = float(window)
        self.validate()

    def _poly(self, x):
        return np.polynomial.polynomial.polyval(x, self.coefficients)

    def eval(self, t):
        return self._poly(self.clamp(np.asarray(t)))

    def deriv(self, t):
        t = np.asarray(t)
        dp = np.polynomial.polynomial.polyder(self.coefficients)
        return np.polynomial.polynomial.polyval(self.clamp(t), dp) * self.clamp.deriv(t)

    def taylor(self, t0, n: int) -> np.ndarray:
        q = self.clamp.jet(complex(t0), n)
        out = np.zeros(n + 1, dtype=complex)
        for a in self.coefficients[::-1]:
            out = _jet_mul(out, q, n)
            out[0] += a
        return out

    @property
    def v_right(self) -> float:
        return float(self._poly(self.window))

    @property
    def v_left(self) -> float:
        return float(self._poly(-self.window))

    def candidate_zeros(self) -> list[float]:
        # multiple real roots come back as near-real clusters; keep and
        # cluster them here, the catalog polishes each to full precision
        roots = np.polynomial.polynomial.polyroots(self.coefficients)
        real = [float(r.real) for r in roots
                if abs(r.imag) < 1e-5 and abs(r.real) < self.window]
        out: list[float] = []
        for r in sorted(real):
            if not out or abs(r - out[-1]) > 1e-4:
                out.append(r)
        return out

    def tail_envelope(self, side: str, t: float) -> float:
        b, w = self.clamp.beta, self.window
        x = t - w if side == "right" else -t - w
        if x < 0.5:
            return math.inf
        dp = np.polynomial.polynomial.polyder(self.coefficients)
        slope_max = float(np.max(np.abs(
            np.polynomial.polynomial.polyval(np.linspace(-w, w, 64), dp))))
        return slope_max * 2.0 * math.exp(-b * x) / b

    def tail_integral(self, side: str, anchor: float) -> float:
        from ..quadrature import integrate_smooth

        v_inf = self.v_right if side == "right" else self.v_left
        span = max(60.0 / self.clamp.beta, 10.0)
        fn = lambda s: np.real(self.eval(s)) - v_inf  # noqa: E731
        if side == "right":
            return integrate_smooth(fn, anchor, anchor + span, max_panel=0.5)
        return integrate_smooth(fn, anchor - span, anchor, max_panel=0.5)

    def to_config(self) -> dict:
        return {
            "family": self.family_name,
            "params": {
                "coefficients": list(self.coefficients),
                "window": self.window,
                "sharpness": self.clamp.beta,
            },
        }


_FAMILIES = {
    ScaledTanhProduct.family_name: ScaledTanhProduct,
    LinearLZ.family_name: LinearLZ,
    PolynomialWindowed.family_name: PolynomialWindowed,
}


def model_from_config(doc: dict) -> PotentialModel:
    """Build a potential from {"family": ..., "params": {...}}."""
    try:
        family = doc["family"]
        params = doc.get("params", {})
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"malformed potential spec: {doc!r}") from exc
    if family not in _FAMILIES:
        raise ConfigError(f"unknown family {family!r}; choose from {sorted(_FAMILIES)}")
    try:
        return _FAMILIES[family](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {family}: {exc}") from exc

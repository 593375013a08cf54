"""Closed-form transition-probability predictions.

All-diabatic regime: P is 1 - C mu^2 or C mu^2 according to the parity of the
total vanishing order, with C the product of a universal order-dependent
constant and an interference factor -- the squared modulus of a coherent sum
over the maximal-order crossings whose relative phases are the enclosed
phase-space areas over h.

Mixed regime: the leading term combines the diabatic couplings of the
"flat" crossings with the exponentially small adiabatic couplings of the
"sharp" ones, with between-crossing phases taken along the effective
(sign-masked) coupling.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import MStarTooSmall, RegimeViolation
from .oscillatory import omega_m
from .params import MU_NONADIABATIC_MAX, RegimeSplit, mu
from .potential.catalog import (
    CrossingCatalog,
    effective_phase_integral,
    effective_potential,
    phase_integral,
)
from .transfer import chain_prob_leading, crossing_transfer_adiabatic

PHASE_CONVENTIONS = ("standard", "half_shift")


@dataclass(frozen=True)
class _RawFactor:
    """Unit-diagonal coupling pair used for leading-order chain numbers."""

    a: complex
    b: complex

    def q_conjugated(self) -> "_RawFactor":
        return _RawFactor(np.conj(self.a), -np.conj(self.b))


def gamma_factor(m: int) -> float:
    """Universal prefactor of the leading transition coefficient at order m."""
    if m < 1:
        raise ValueError("order must be >= 1")
    base = 4.0 * (math.factorial(m + 1) / 2.0) ** (2.0 / (m + 1)) \
        * gamma_fn((m + 2.0) / (m + 1.0)) ** 2
    even_fold = 0.5 * (1.0 + (-1.0) ** m)
    return float(base * (1.0 - even_fold * math.sin(math.pi / (2.0 * (m + 1))) ** 2))


def _coherent_phases(catalog: CrossingCatalog, model, h: float) -> list[complex]:
    """Unit phasors of the maximal-order crossings, referenced to the last zero."""
    m_star = catalog.m_star
    t_ref = catalog.positions[-1]
    theta_m = (math.pi / (2.0 * (m_star + 1))) if m_star % 2 == 1 else 0.0
    phasors = []
    for j in catalog.lambda_star:
        c = catalog.crossings[j]
        phase = 2.0 / h * phase_integral(model, t_ref, c.t)
        phase += math.copysign(1.0, c.v) * theta_m
        phasors.append(cmath.exp(1j * phase))
    return phasors


def interference_factor(catalog: CrossingCatalog, model, h: float,
                        convention: str = "standard") -> float:
    """Interference coefficient: weighted coherent sum over maximal crossings.

    ``standard`` evaluates |sum_j |v_j|^(-1/(m+1)) e^(i phi_j)|^2, whose pair
    expansion carries the phase offset (sgn v_j) pi/(m+1) for opposite-sign
    odd-order pairs; it is the encoding validated by the interference
    acceptance run.  ``half_shift`` is the alternate pairwise encoding with
    half that offset, kept switchable for comparison.
    """
    if convention not in PHASE_CONVENTIONS:
        raise ValueError(f"convention must be one of {PHASE_CONVENTIONS}")
    m_star = catalog.m_star
    weights = [abs(catalog.crossings[j].v) ** (-1.0 / (m_star + 1))
               for j in catalog.lambda_star]
    if convention == "standard":
        phasors = _coherent_phases(catalog, model, h)
        total = sum(w * p for w, p in zip(weights, phasors))
        return float(abs(total) ** 2)

    # pairwise form with the halved phase offset
    idx = list(catalog.lambda_star)
    total = sum(w * w for w in weights)
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            j, k = idx[a], idx[b]
            cj, ck = catalog.crossings[j], catalog.crossings[k]
            phase = 2.0 / h * phase_integral(model, ck.t, cj.t)
            if m_star % 2 == 1 and math.copysign(1, cj.v) != math.copysign(1, ck.v):
                phase += math.copysign(1.0, cj.v) * math.pi / (2.0 * (m_star + 1))
            total += 2.0 * weights[a] * weights[b] * math.cos(phase)
    return float(total)


@dataclass
class NonadiabaticPrediction:
    eps: float
    h: float
    mu_star: float
    m_star: int
    parity_odd: bool
    gamma_star: float
    delta_star: float
    c_star: float
    p_pred: float
    error_order: str

    def to_dict(self) -> dict:
        return {
            "eps": self.eps, "h": self.h, "mu_star": self.mu_star,
            "m_star": self.m_star, "parity": "odd" if self.parity_odd else "even",
            "gamma_star": self.gamma_star, "delta_star": self.delta_star,
            "c_star": self.c_star, "P_pred": self.p_pred,
            "error_order": self.error_order,
        }


def predict_nonadiabatic(model, catalog: CrossingCatalog, eps: float, h: float,
                         convention: str = "standard",
                         allow_order_one: bool = False,
                         enforce_regime: bool = True) -> NonadiabaticPrediction:
    """Leading asymptotics of P when every crossing is crossed diabatically."""
    m_star = catalog.m_star
    if m_star < 2 and not allow_order_one:
        raise MStarTooSmall(
            "leading coefficient requires a tangential crossing; transversal-only "
            "catalogs need the log-corrected treatment (enable allow_order_one "
            "for diagnostics)")
    mu_star = mu(m_star, eps, h)
    if enforce_regime and mu_star > MU_NONADIABATIC_MAX:
        raise RegimeViolation(f"mu_star={mu_star:.3g} outside the diabatic regime")
    gamma_val = gamma_factor(m_star)
    delta_val = interference_factor(catalog, model, h, convention=convention)
    c_star = gamma_val * delta_val
    parity_odd = catalog.sigma_n % 2 == 1
    correction = c_star * mu_star ** 2
    p = 1.0 - correction if parity_odd else correction
    order = f"mu_star^2*(mu_star + h^(1/{m_star * (m_star + 1)}))"
    return NonadiabaticPrediction(
        eps=eps, h=h, mu_star=mu_star, m_star=m_star, parity_odd=parity_odd,
        gamma_star=gamma_val, delta_star=delta_val, c_star=c_star, p_pred=p,
        error_order=order)


def quantization_ladder(catalog: CrossingCatalog, model, h_range,
                        max_terms: int = 4096) -> list[float]:
    """Values of h in [h_min, h_max] where the two-crossing interference
    factor vanishes exactly (area quantization)."""
    if len(catalog.lambda_star) != 2:
        raise ValueError("closed ladder requires exactly two maximal crossings")
    j, k = catalog.lambda_star
    area = 2.0 * abs(phase_integral(model, catalog.positions[k], catalog.positions[j]))
    m = catalog.m_star
    shift = m * math.pi / (m + 1.0) if m % 2 == 1 else math.pi
    h_min, h_max = min(h_range), max(h_range)
    out = []
    for n in range(1, max_terms):
        denom = 2.0 * math.pi * n - shift
        if denom <= 0:
            continue
        h = area / denom
        if h_min <= h <= h_max:
            out.append(h)
        if h < h_min:
            break
    return sorted(out)


def interference_zeros(model, catalog: CrossingCatalog, h_range,
                       samples: int = 2048, convention: str = "standard"):
    """Locations in h where the interference factor vanishes (or is minimal).

    Two maximal crossings with equal |v| admit the exact quantization ladder;
    otherwise minima of the coherent sum are located numerically over the
    range.  Returns a sorted list (possibly empty).
    """
    lam = catalog.lambda_star
    weights = [abs(catalog.crossings[j].v) for j in lam]
    h_min, h_max = min(h_range), max(h_range)
    if len(lam) == 2 and abs(weights[0] - weights[1]) < 1e-9 * max(weights):
        return quantization_ladder(catalog, model, h_range)
    if len(lam) < 2:
        return []
    hs = np.linspace(h_min, h_max, samples)
    vals = np.array([interference_factor(catalog, model, h, convention=convention)
                     for h in hs])
    floor = float(np.max(vals)) * 1e-6
    out = []
    for i in range(1, samples - 1):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]:
            # parabolic refinement
            denom = vals[i - 1] - 2 * vals[i] + vals[i + 1]
            shift = 0.5 * (vals[i - 1] - vals[i + 1]) / denom if denom > 0 else 0.0
            h_loc = hs[i] + shift * (hs[1] - hs[0])
            if vals[i] <= max(floor, 0.05 * float(np.max(vals))):
                out.append(float(h_loc))
    return sorted(out)


@dataclass
class MixedPrediction:
    eps: float
    h: float
    n_sharp_odd: int
    parity_odd: bool
    leading: float
    p_pred: float
    eps1: float
    eps2: float
    blocks: dict = field(default_factory=dict)
    coefficients: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps, "h": self.h, "N_sharp_odd": self.n_sharp_odd,
            "parity": "odd" if self.parity_odd else "even",
            "L": self.leading, "P_pred": self.p_pred,
            "eps1": self.eps1, "eps2": self.eps2,
            "blocks": self.blocks,
        }


def predict_mixed(model, catalog: CrossingCatalog, eps: float, h: float,
                  split: RegimeSplit,
                  turning_sets: dict | None = None,
                  enforce_regime: bool = True) -> MixedPrediction:
    """Leading term of P in the coexistence regime.

    Builds the flip-conjugated chain numbers (diabatic couplings for flat
    crossings, dressed adiabatic couplings for sharp ones, effective-coupling
    phases in between) and evaluates the second-order probability of the
    chain, then applies the combined parity rule.
    """
    n = catalog.n
    if len(split.assignment) != n:
        raise ValueError("regime split does not match catalog")
    from .transfer import _tilde_flags, crossing_transfer_nonadiabatic

    tilde = _tilde_flags(split, n)
    mask = effective_potential(catalog, split.sharp_odd)

    alphas: list[complex] = []
    betas: list[complex] = []
    decay = {}
    for k in range(n):
        if split.assignment[k] == "N":
            # raw leading coupling (no SU(2) renormalization): the mu^2
            # adjustment belongs to the error term, and the reduction to the
            # all-diabatic coefficient must be exact
            c = catalog.crossings[k]
            if enforce_regime:
                crossing_transfer_nonadiabatic(k, eps, h, catalog)
            raw_b = -1j * np.conj(omega_m(c.m, c.v)) * mu(c.m, eps, h)
            base = _RawFactor(1.0 + 0.0j, raw_b)
        else:
            tps = None if turning_sets is None else turning_sets.get(k)
            fac = crossing_transfer_adiabatic(k, eps, h, catalog, tps=tps,
                                              model=model,
                                              enforce_regime=enforce_regime)
            base = fac.su2
            if turning_sets is not None and k in turning_sets:
                decay[k] = turning_sets[k].a_min
        if tilde[k]:
            base = base.q_conjugated()
        alphas.append(base.a)
        betas.append(base.b)

    nus: list[complex] = []
    for k in range(n - 1):
        integral = effective_phase_integral(
            model, mask, catalog.positions[k + 1], catalog.positions[k])
        nus.append(cmath.exp(-1j * integral / h))
    nus.append(1.0 + 0.0j)  # trailing connector phase, modulus irrelevant

    leading = chain_prob_leading(alphas, betas, nus)
    n_sharp_odd = split.n_sharp_odd
    parity_odd = (catalog.sigma_n + n_sharp_odd) % 2 == 1
    p = 1.0 - leading if parity_odd else leading

    blocks, coeffs = _mixed_blocks(catalog, split, alphas, betas, nus, eps, h, decay)
    eps1, eps2 = _error_gauges(catalog, split, eps, h, decay)
    return MixedPrediction(eps=eps, h=h, n_sharp_odd=n_sharp_odd,
                           parity_odd=parity_odd, leading=leading, p_pred=p,
                           eps1=eps1, eps2=eps2, blocks=blocks,
                           coefficients=coeffs)


def _mixed_blocks(catalog, split, alphas, betas, nus, eps, h, decay):
    """Named contributions: flat diagonal, sharp diagonal, cross terms."""
    mu_flat = mu(split.m_flat, eps, h) if split.m_flat else 0.0
    mu_sharp = mu(split.m_sharp, eps, h) if split.m_sharp else 0.0
    flat = [k for k, a in enumerate(split.assignment) if a == "N"]
    sharp = [k for k, a in enumerate(split.assignment) if a == "A"]
    diag_flat = sum(abs(betas[k]) ** 2 for k in flat)
    diag_sharp = sum(abs(betas[k]) ** 2 for k in sharp)

    def cross_sum(js, ks):
        total = 0.0
        for j in js:
            for k in ks:
                if j >= k:
                    continue
                cross = betas[j] * np.conj(betas[k]) * alphas[j] * alphas[k]
                for kappa in range(j + 1, k):
                    cross *= alphas[kappa] ** 2
                for kappa in range(j, k):
                    cross *= nus[kappa] ** 2
                total += 2.0 * float(np.real(cross))
        return total

    blocks = {
        "flat_flat_diag": diag_flat,
        "sharp_diag": diag_sharp,
        "flat_flat_cross": cross_sum(flat, flat),
        "flat_sharp_cross": cross_sum(flat, sharp) + cross_sum(sharp, flat),
        "sharp_sharp_cross": cross_sum(sharp, sharp),
    }
    coeffs = {}
    if mu_flat:
        coeffs["p"] = {k: betas[k] / mu_flat for k in flat
                       if catalog.crossings[k].m == split.m_flat}
    if mu_sharp and decay:
        exponent = (split.m_sharp + 1.0) / split.m_sharp
        coeffs["q"] = {k: betas[k] / math.exp(-decay[k] * mu_sharp ** exponent)
                       for k in sharp if k in decay
                       and catalog.crossings[k].m == split.m_sharp}
    return blocks, coeffs


def _error_gauges(catalog, split, eps, h, decay):
    mu_flat = mu(split.m_flat, eps, h) if split.m_flat else 0.0
    if split.m_sharp and decay:
        a_min = min(decay[k] for k in decay
                    if catalog.crossings[k].m == split.m_sharp)
        mu_sharp = mu(split.m_sharp, eps, h)
        exponent = (split.m_sharp + 1.0) / split.m_sharp
        sharp_exp = math.exp(-a_min * mu_sharp ** exponent)
        sharp_pref = mu_sharp ** (-exponent) * sharp_exp
    else:
        sharp_exp = 0.0
        sharp_pref = 0.0
    eps1 = mu_flat + sharp_exp
    flat_h = h ** (1.0 / (split.m_flat * (split.m_flat + 1))) if split.m_flat else 0.0
    eps2 = mu_flat * (mu_flat + flat_h) + sharp_pref
    return eps1, eps2


def landau_zener_consistency(eps: float, h: float, slope: float) -> tuple[float, float]:
    """First-order diabatic coefficient versus the exact linear-model exponent.

    Returns (gamma_1 * delta_1 * mu_1^2, pi eps^2/(slope h)); the two agree
    because gamma_1 = pi and delta_1 = 1/slope for a single transversal zero.
    """
    c = gamma_factor(1) * slope ** (-1.0) * mu(1, eps, h) ** 2
    exact_exponent = math.pi * eps * eps / (slope * h)
    return c, exact_exponent

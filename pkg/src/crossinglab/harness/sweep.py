"""Experiment orchestration: grids, sweeps, rate fits, interference scans.

Rows are independent and deterministic: identical configs produce
bit-identical tables regardless of worker count.  Failures are recorded
per row (status/error columns) and never abort a sweep.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import (
    ConfigError,
    InsufficientData,
    NoMinimaFound,
    PathCrossesForbiddenBand,
)
from ..params import MU_ADIABATIC_MIN, MU_NONADIABATIC_MAX, RegimeSplit, classify_regimes, mu
from ..potential import find_crossings, model_from_config
from ..potential.catalog import effective_potential
from ..predictor import interference_zeros, predict_mixed, predict_nonadiabatic
from ..scattering import scattering_matrix
from ..transfer import predicted_scattering, wkb_alpha_beta
from ..potential.turning import turning_points

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = [
    "index", "eps", "h", "mu_star", "status",
    "P_numeric", "P_nonadiabatic", "P_mixed", "P_chain",
    "residual_nonadiabatic", "residual_chain", "error",
]


@dataclass
class SweepConfig:
    potential: dict
    grid: dict
    oracles: tuple[str, ...] = ("numeric", "nonadiabatic")
    tol: float = 1e-9
    jobs: int = 1
    label: str = "sweep"

    @staticmethod
    def from_json(doc) -> "SweepConfig":
        if isinstance(doc, (str, os.PathLike)):
            with open(doc) as fh:
                doc = json.load(fh)
        try:
            return SweepConfig(
                potential=doc["potential"],
                grid=doc["grid"],
                oracles=tuple(doc.get("oracles", ("numeric", "nonadiabatic"))),
                tol=float(doc.get("tol", 1e-9)),
                jobs=int(doc.get("jobs", 1)),
                label=doc.get("label", "sweep"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad sweep config: {exc}") from exc


def build_rows(config: SweepConfig) -> list[tuple[float, float]]:
    """(eps, h) pairs from the grid spec, in deterministic order."""
    g = config.grid
    kind = g.get("type", "list")
    if kind == "list":
        return [(float(r["eps"]), float(r["h"])) for r in g["rows"]]
    if kind == "h_ladder":
        hs = [float(x) for x in g["h_values"]]
        increasing = all(b > a for a, b in zip(hs, hs[1:]))
        decreasing = all(b < a for a, b in zip(hs, hs[1:]))
        if not (increasing or decreasing):
            raise ConfigError("h ladder must be strictly monotone")
        rule = g.get("eps_rule", {"type": "fixed", "value": 0.05})
        rows = []
        for h in hs:
            rows.append((_eps_from_rule(rule, h), h))
        return rows
    raise ConfigError(f"unknown grid type {kind!r}")


def _eps_from_rule(rule: dict, h: float) -> float:
    kind = rule.get("type", "fixed")
    if kind == "fixed":
        return float(rule["value"])
    if kind == "power":
        # eps = coeff * h^exponent (the mu-constrained path)
        return float(rule["coeff"]) * h ** float(rule["exponent"])
    if kind == "log_path":
        # eps = (h log(1/h^rho))^(m/(m+1))
        rho = float(rule["rho"])
        m = int(rule["m"])
        return (h * math.log(1.0 / h**rho)) ** (m / (m + 1.0))
    raise ConfigError(f"unknown eps rule {kind!r}")


def _compute_row(args):
    config_doc, eps, h, index = args
    config = SweepConfig(**config_doc)
    model = model_from_config(config.potential)
    catalog = find_crossings(model)
    row = {c: "" for c in CSV_COLUMNS}
    row["index"] = index
    row["eps"] = eps
    row["h"] = h
    row["mu_star"] = mu(catalog.m_star, eps, h)
    row["status"] = "ok"
    errors = []

    if "numeric" in config.oracles:
        try:
            rep = scattering_matrix(model, eps, h, tol=config.tol, catalog=catalog)
            row["P_numeric"] = rep.p_transition
        except Exception as exc:
            errors.append(f"numeric: {exc}")
    if "nonadiabatic" in config.oracles:
        try:
            pred = predict_nonadiabatic(model, catalog, eps, h)
            row["P_nonadiabatic"] = pred.p_pred
        except Exception as exc:
            errors.append(f"nonadiabatic: {exc}")
    if "chain" in config.oracles:
        try:
            split = classify_regimes(catalog.orders, eps, h)
            pred = predicted_scattering(model, eps, h, split, catalog=catalog)
            row["P_chain"] = pred.p_pred
        except Exception as exc:
            errors.append(f"chain: {exc}")
    if "mixed" in config.oracles:
        try:
            split = classify_regimes(catalog.orders, eps, h)
            tps = {k: turning_points(model, catalog, k, eps)
                   for k, a in enumerate(split.assignment) if a == "A"}
            pred = predict_mixed(model, catalog, eps, h, split, turning_sets=tps)
            row["P_mixed"] = pred.p_pred
        except Exception as exc:
            errors.append(f"mixed: {exc}")

    if row["P_numeric"] != "" and row["P_nonadiabatic"] != "":
        row["residual_nonadiabatic"] = abs(row["P_numeric"] - row["P_nonadiabatic"])
    if row["P_numeric"] != "" and row["P_chain"] != "":
        row["residual_chain"] = abs(row["P_numeric"] - row["P_chain"])
    if errors:
        row["status"] = "partial" if row["P_numeric"] != "" else "failed"
        row["error"] = "; ".join(errors)
    return row


def run_sweep(config: SweepConfig) -> list[dict]:
    """Evaluate every row; failures are recorded inline and never raised."""
    rows = build_rows(config)
    args = [(config.__dict__, eps, h, i) for i, (eps, h) in enumerate(rows)]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            out = list(pool.map(_compute_row, args))
    else:
        out = [_compute_row(a) for a in args]
    return out


def write_csv(rows: list[dict], path: str) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            cells = []
            for col in CSV_COLUMNS:
                val = row.get(col, "")
                if isinstance(val, float):
                    cells.append(repr(val))
                else:
                    cells.append(str(val))
            fh.write(",".join(cells) + "\n")


def write_report(meta: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ----------------------------------------------------------------------------


@dataclass
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_used: int
    window: tuple[float, float]
    expected: float | None = None

    def to_dict(self) -> dict:
        return {
            "slope": self.slope, "intercept": self.intercept,
            "r_squared": self.r_squared, "n_used": self.n_used,
            "window": list(self.window), "expected": self.expected,
        }


def fit_rate(xs, ys, expected: float | None = None,
             noise_floor: float = 1e-13) -> RateFit:
    """Least-squares log-log slope, excluding points near the noise floor."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = (ys > 100.0 * noise_floor) & (xs > 0)
    if int(np.sum(keep)) < 5:
        raise InsufficientData(f"only {int(np.sum(keep))} usable rows (need 5)")
    lx, ly = np.log(xs[keep]), np.log(ys[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - np.mean(ly)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(slope=float(slope), intercept=float(intercept), r_squared=r2,
                   n_used=int(np.sum(keep)),
                   window=(float(np.min(xs[keep])), float(np.max(xs[keep]))),
                   expected=expected)


# ----------------------------------------------------------------------------


def scan_interference(config: SweepConfig, mu_fixed: float = 0.05) -> dict:
    """Locate minima of P/mu^2 over an h ladder and pair them with the
    predicted interference zeros."""
    model = model_from_config(config.potential)
    catalog = find_crossings(model)
    if len(catalog.lambda_star) < 2:
        raise NoMinimaFound("a single maximal crossing carries no interference")
    hs = np.asarray([h for _, h in build_rows(config)], dtype=float)
    hs = np.sort(hs)
    m_star = catalog.m_star
    normalized = []
    for h in hs:
        eps = mu_fixed * h ** (m_star / (m_star + 1.0))
        rep = scattering_matrix(model, eps, h, tol=config.tol, catalog=catalog)
        normalized.append(rep.p_transition / mu_fixed**2)
    normalized = np.asarray(normalized)

    minima = []
    for i in range(1, len(hs) - 1):
        if normalized[i] < normalized[i - 1] and normalized[i] < normalized[i + 1]:
            denom = normalized[i - 1] - 2 * normalized[i] + normalized[i + 1]
            shift = 0.5 * (normalized[i - 1] - normalized[i + 1]) / denom if denom > 0 else 0.0
            minima.append(float(hs[i] + shift * 0.5 * (hs[min(i + 1, len(hs) - 1)] - hs[max(i - 1, 0)])))
    if not minima:
        raise NoMinimaFound("no local minima of P/mu^2 over the ladder")
    predicted = interference_zeros(model, catalog, (hs[0], hs[-1]))
    pairs = []
    for m_h in minima:
        if predicted:
            nearest = min(predicted, key=lambda z: abs(z - m_h))
            pairs.append({"found": m_h, "predicted": nearest,
                          "rel_offset": abs(m_h - nearest) / nearest})
        else:
            pairs.append({"found": m_h, "predicted": None, "rel_offset": None})
    return {
        "h_values": hs.tolist(),
        "normalized_P": normalized.tolist(),
        "minima": minima,
        "predicted_zeros": predicted,
        "pairs": pairs,
    }


# ----------------------------------------------------------------------------


DEMO_POTENTIAL = {
    "family": "scaled_tanh_product",
    "params": {"scale": 1.0, "factors": [
        {"power": 1, "slope": 6.0, "center": 2.0},
        {"power": 3, "slope": 1.0, "center": -2.0},
    ]},
}

# Stations along eps = h^alpha.  The strict thresholds (0.1, 10) are
# unreachable for the middle stations at desk-scale h (mu_flat/mu_sharp =
# h^(1/(m_flat+1) - 1/(m_sharp+1)) cannot be pushed below 1/100 for h >=
# 1e-4), so those rows are flagged and classified with documented demo
# thresholds instead.
DEMO_THRESHOLDS = (0.35, 2.5)
DEMO_STATIONS = (
    # (alpha, h)
    (0.167, 1e-4), (0.190, 1e-4),
    (0.300, 1e-3), (0.450, 1e-3), (0.600, 1e-3),
    (0.618, 1e-4), (0.631, 1e-4), (0.645, 1e-4),
    (0.820, 1e-3), (1.083, 1e-3), (1.200, 1e-3),
)


def regime_switch_demo(potential: dict | None = None, stations=None,
                       tol: float = 1e-7, jobs: int = 1) -> dict:
    """Walk a path across regime boundaries and report the parity switch.

    Each row records the per-crossing smallness parameters, the strict and
    demo-scale regime classifications, the parity prediction for P (near one
    when the total order plus the count of odd adiabatic crossings is odd),
    and the observed class from the numerically exact P.
    """
    potential = potential or DEMO_POTENTIAL
    stations = stations or DEMO_STATIONS
    model = model_from_config(potential)
    catalog = find_crossings(model)
    orders = catalog.orders
    lo, hi = DEMO_THRESHOLDS

    rows = []
    n_forbidden = 0
    for alpha, h in stations:
        eps = h ** alpha
        mus = [mu(m, eps, h) for m in orders]
        strict_ok = all(v <= MU_NONADIABATIC_MAX or v >= MU_ADIABATIC_MIN for v in mus)
        demo_ok = all(v <= lo or v >= hi for v in mus)
        assignment = ["N" if v < 1.0 else "A" for v in mus]
        split = RegimeSplit.build(list(orders), assignment)
        n_odd = split.n_sharp_odd
        parity_odd = (catalog.sigma_n + n_odd) % 2 == 1
        rep = scattering_matrix(model, eps, h, tol=tol, catalog=catalog)
        p = rep.p_transition
        observed = "near1" if p > 0.8 else ("near0" if p < 0.2 else "transitional")
        status = "ok" if strict_ok else ("demo" if demo_ok else "SKIPPED_REGIME")
        if not demo_ok:
            n_forbidden += 1
        mask = effective_potential(catalog, split.sharp_odd)
        rows.append({
            "alpha": alpha, "h": h, "eps": eps,
            "mu": mus, "assignment": assignment,
            "n_sharp_odd": n_odd,
            "parity": "odd" if parity_odd else "even",
            "predicted_class": "near1" if parity_odd else "near0",
            "P_numeric": p, "observed_class": observed,
            "status": status,
            "mask_flips": list(mask.flip_points),
        })
    if n_forbidden == len(rows):
        raise PathCrossesForbiddenBand("every station sits in the untreated band")

    consistent = all(
        r["observed_class"] == r["predicted_class"]
        for r in rows
        if r["status"] in ("ok", "demo") and r["observed_class"] != "transitional"
    )
    return {
        "potential": potential,
        "orders": list(orders),
        "sigma_n": catalog.sigma_n,
        "demo_thresholds": list(DEMO_THRESHOLDS),
        "rows": rows,
        "classification_consistent": consistent,
    }


def sharp_decay_slope(potential: dict | None = None, h: float = 1e-4,
                      mu_range=(2.5, 5.0), samples: int = 72,
                      crossing: int | None = None) -> dict:
    """Fit the exponential decay rate of the adiabatic coupling.

    The coupling is a two-saddle interference, |beta| =
    envelope(mu) * |2 cos(phase)|, so the raw log-values oscillate below the
    envelope line.  The envelope decay -a_k is fitted on the upper convex
    hull of (mu^((m+1)/m), log|beta|) and compared with the decay
    coefficient extracted independently from the turning-point actions at
    small eps.
    """
    potential = potential or DEMO_POTENTIAL
    model = model_from_config(potential)
    catalog = find_crossings(model)
    if crossing is None:
        crossing = max(range(catalog.n), key=lambda k: catalog.crossings[k].m)
    m = catalog.crossings[crossing].m
    exponent = (m + 1.0) / m

    ref = turning_points(model, catalog, crossing, 1e-4)
    a_ref = ref.a_min

    mus = np.linspace(mu_range[0], mu_range[1], samples)
    xs, ys = [], []
    for mu_val in mus:
        eps = mu_val * h ** (m / (m + 1.0))
        tps = turning_points(model, catalog, crossing, eps)
        _, beta = wkb_alpha_beta(crossing, eps, h, catalog, tps)
        if abs(beta) > 0:
            xs.append(mu_val ** exponent)
            ys.append(math.log(abs(beta)))
    hull_x, hull_y = _upper_hull(np.asarray(xs), np.asarray(ys))
    if len(hull_x) >= 6:
        # window endpoints are hull vertices by construction but usually sit
        # in an oscillation trough; drop them
        hull_x, hull_y = hull_x[1:-1], hull_y[1:-1]
    slope, intercept = np.polyfit(hull_x, hull_y, 1)
    return {
        "crossing": crossing, "m": m, "a_turning_point": float(a_ref),
        "fitted_decay": float(-slope),
        "rel_error": float(abs(-slope - a_ref) / a_ref),
        "hull_points": len(hull_x), "mu_range": list(mu_range), "h": h,
    }


def _upper_hull(xs: np.ndarray, ys: np.ndarray):
    """Vertices of the upper convex hull of the point set, ascending in x."""
    order = np.argsort(xs)
    pts = list(zip(xs[order], ys[order]))
    hull: list[tuple[float, float]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (p[0] - x1) * (y2 - y1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    hx = np.array([p[0] for p in hull])
    hy = np.array([p[1] for p in hull])
    return hx, hy

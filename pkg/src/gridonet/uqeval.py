"""Evaluation metrics: relative errors, confidence intervals, coverage
calibration, under-voltage alarm classification, residual normality."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .deeponet import DeepOnetConfig, forward_batch

__all__ = [
    "relative_errors",
    "inverse_normal_cdf",
    "confidence_interval",
    "epsilon_ratio",
    "chi_coverage_curve",
    "analytic_coverage",
    "threshold_profile",
    "AlarmOutcome",
    "alarm_analysis",
    "NormalityReport",
    "residual_normality",
    "collect_residuals",
    "TrajectoryReport",
    "aggregate_reports",
    "write_csv",
]


def relative_errors(pred, target) -> tuple[float, float]:
    """(L1, L2) relative errors in percent."""
    p = np.asarray(pred, dtype=float)
    t = np.asarray(target, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {t.shape}")
    l1_den = np.sum(np.abs(t))
    l2_den = np.sqrt(np.sum(t * t))
    if l1_den == 0.0 or l2_den == 0.0:
        raise ValueError("target has zero norm")
    l1 = 100.0 * np.sum(np.abs(p - t)) / l1_den
    l2 = 100.0 * np.sqrt(np.sum((p - t) ** 2)) / l2_den
    return float(l1), float(l2)


# Acklam's rational approximation of the standard normal quantile, refined by
# one Halley step through erfc; the result is accurate to well under 1e-8.
_IN_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
         1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_IN_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
         6.680131188771972e01, -1.328068155288572e01)
_IN_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
         -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_IN_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
         3.754408661907416e00)


def inverse_normal_cdf(p: float) -> float:
    if not (0.0 < p < 1.0):
        raise ValueError(f"quantile argument must be in (0,1), got {p}")
    a, b, c, d = _IN_A, _IN_B, _IN_C, _IN_D
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
            ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
        )
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    # Halley refinement
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def confidence_interval(mean, std, level: float = 0.95):
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    if np.any(std < 0):
        raise ValueError("std must be non-negative")
    z = inverse_normal_cdf(0.5 + 0.5 * level)
    return mean - z * std, mean + z * std


def epsilon_ratio(lower, upper, targets) -> float:
    """Percent of target points inside the band."""
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    t = np.asarray(targets, dtype=float)
    if not (lo.shape == hi.shape == t.shape):
        raise ValueError("band and target lengths differ")
    return float(100.0 * np.mean((lo <= t) & (t <= hi)))


def analytic_coverage(chi) -> np.ndarray:
    """P(|N(0,1)| <= chi) = erf(chi / sqrt(2))."""
    return np.array([math.erf(c / math.sqrt(2.0)) for c in np.atleast_1d(chi)])


def chi_coverage_curve(mu, sigma, target, chis):
    """Empirical fraction of |mu - target| <= chi * sigma, per chi, pooled.

    Returns (empirical, analytic) arrays aligned with chis.
    """
    chis = np.asarray(chis, dtype=float)
    if chis.size > 1 and np.any(np.diff(chis) < 0):
        raise ValueError("chis must be non-decreasing")
    mu = np.concatenate([np.ravel(m) for m in np.atleast_1d(mu)]) if isinstance(mu, list) else np.ravel(mu)
    sigma = np.concatenate([np.ravel(s) for s in np.atleast_1d(sigma)]) if isinstance(sigma, list) else np.ravel(sigma)
    target = np.concatenate([np.ravel(t) for t in np.atleast_1d(target)]) if isinstance(target, list) else np.ravel(target)
    err = np.abs(mu - target)
    empirical = np.array([np.mean(err <= c * sigma) for c in chis])
    return empirical, analytic_coverage(chis)


def threshold_profile(t: float, t_cl: float = 2.0) -> float:
    """Under-voltage limit: 0.70 pu just after clearing, 0.90 pu once the
    grid should have recovered."""
    if t <= t_cl:
        raise ValueError(f"threshold is defined on the post-fault interval, got t={t}")
    return 0.70 if t <= t_cl + 0.5 else 0.90


@dataclass(frozen=True)
class AlarmOutcome:
    traj_id: int
    mean: float
    lower: float
    upper: float
    truth: float
    flags: dict


def alarm_analysis(items, y_star: float, t_cl: float = 2.0, profile=threshold_profile):
    """Classify each trajectory's prediction at probe time y_star.

    items: iterable of (traj_id, mean, lower, upper, truth) at y_star.
    An under-voltage violation means truth < threshold; the alarm region is
    below the threshold, so a CI entirely above it never raises an alarm.
    """
    thr = profile(y_star, t_cl)
    outcomes = []
    for traj_id, mean, lo, hi, truth in items:
        violation = truth < thr
        flags = {
            "FN": bool(violation and lo >= thr),
            "TP": bool(violation and lo < thr),
            "FP_conservative": bool(not violation and lo < thr),
            "FP_nonconservative": bool(not violation and hi < thr),
            "TN": bool(not violation and lo >= thr),
        }
        outcomes.append(AlarmOutcome(traj_id, mean, lo, hi, truth, flags))
    n = max(len(outcomes), 1)
    summary = {"threshold": thr, "y_star": y_star, "count": len(outcomes)}
    for key in ("FN", "TP", "FP_conservative", "FP_nonconservative", "TN"):
        hits = sum(o.flags[key] for o in outcomes)
        summary[key] = hits
        summary[f"{key}_rate"] = 100.0 * hits / n
    return outcomes, summary


@dataclass(frozen=True)
class NormalityReport:
    skewness: float
    excess_kurtosis: float
    normal: bool
    hist_counts: np.ndarray
    hist_edges: np.ndarray


def residual_normality(residuals, bins: int = 40, skew_tol: float = 0.2,
                       kurt_tol: float = 0.5) -> NormalityReport:
    """Moment-based verdict: |skew| < skew_tol and |excess kurtosis| < kurt_tol."""
    r = np.asarray(residuals, dtype=float).ravel()
    if r.size < 8:
        raise ValueError(f"need at least 8 residuals, got {r.size}")
    s = r.std()
    if s == 0.0:
        raise ValueError("residuals have zero variance")
    z = (r - r.mean()) / s
    skew = float(np.mean(z**3))
    kurt = float(np.mean(z**4) - 3.0)
    counts, edges = np.histogram(z, bins=bins)
    return NormalityReport(
        skewness=skew,
        excess_kurtosis=kurt,
        normal=bool(abs(skew) < skew_tol and abs(kurt) < kurt_tol),
        hist_counts=counts,
        hist_edges=edges,
    )


def collect_residuals(params: dict, cfg: DeepOnetConfig, samples) -> np.ndarray:
    """Prediction-minus-target residuals over a sample list."""
    from .train import batch_arrays

    U, Y, G = batch_arrays(samples)
    pred = forward_batch(params, cfg, U, Y).data
    return (pred - G).ravel()


@dataclass(frozen=True)
class TrajectoryReport:
    traj_id: int
    l1: float
    l2: float
    eps_ratio: float


def aggregate_reports(reports) -> dict:
    l1 = np.array([r.l1 for r in reports])
    l2 = np.array([r.l2 for r in reports])
    eps = np.array([r.eps_ratio for r in reports])
    return {
        "count": len(reports),
        "mean_L1": float(l1.mean()),
        "sd_L1": float(l1.std(ddof=1)) if len(reports) > 1 else 0.0,
        "mean_L2": float(l2.mean()),
        "sd_L2": float(l2.std(ddof=1)) if len(reports) > 1 else 0.0,
        "eps_ratio": float(eps.mean()),
    }


def write_csv(path, header, rows) -> None:
    """Deterministic CSV: fixed header order, repr-style floats, newline \\n."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])

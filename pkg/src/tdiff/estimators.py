"""Drift and volatility estimators built from the sufficient statistics.

Two drift estimators: the generalized-moment one (local time over
occupation) and the discretized-likelihood / least-squares one (signed
increments over occupation).  On any path free of exact zeros they differ
exactly by the normalized endpoint term
``dmle^+- = gme^+- +- ({X_N}^+- - {X_0}^+-) / Q^+-``.
Estimates are returned un-clamped: small samples may land outside the
ergodic sign region, and experiment code needs the raw errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .model import CovMatrix2
from .stats import SufficientStats

__all__ = [
    "DriftEstimate",
    "VolEstimate",
    "OneSidedPathError",
    "gme_drift",
    "dmle_drift",
    "gme_volatility",
    "attach_standard_errors",
    "report_items",
    "format_report",
]


class OneSidedPathError(ValueError):
    """The path never visits one side of the threshold, so the per-side
    normalization is undefined."""

    def __init__(self, side: str):
        self.side = side
        super().__init__(f"path has zero occupation on the {side} side")


@dataclass(frozen=True)
class DriftEstimate:
    b_plus_hat: float
    b_minus_hat: float
    method: str  # "GME" or "DMLE"
    stderr_plus: Optional[float] = None
    stderr_minus: Optional[float] = None


@dataclass(frozen=True)
class VolEstimate:
    sigma2_plus: float
    sigma2_minus: float


def _check_two_sided(stats: SufficientStats) -> None:
    if stats.q_plus <= 0:
        raise OneSidedPathError("plus")
    if stats.q_minus <= 0:
        raise OneSidedPathError("minus")


def gme_drift(stats: SufficientStats) -> DriftEstimate:
    """Generalized-moment drift estimator -L/(2Q+), L/(2Q-)."""
    _check_two_sided(stats)
    l = stats.local_time
    return DriftEstimate(
        b_plus_hat=-l / (2 * stats.q_plus),
        b_minus_hat=l / (2 * stats.q_minus),
        method="GME",
    )


def dmle_drift(stats: SufficientStats) -> DriftEstimate:
    """Discretized-likelihood (least squares) drift estimator M+-/Q+-."""
    _check_two_sided(stats)
    return DriftEstimate(
        b_plus_hat=stats.m_plus / stats.q_plus,
        b_minus_hat=stats.m_minus / stats.q_minus,
        method="DMLE",
    )


def gme_volatility(stats: SufficientStats) -> VolEstimate:
    """Generalized-moment squared-volatility estimator
    (sigma+-)^2 = +- L * Q^{+-,1} / (Q^+-)^2.

    The normalization is fixed by the stationary identity
    L_inf * Q1_inf^+- / (Q_inf^+-)^2 = +-sigma_+-^2, which the conventional
    extra 1/2 factor would break (it halves the small-lag limit).
    """
    _check_two_sided(stats)
    l = stats.local_time
    return VolEstimate(
        sigma2_plus=l * stats.q1_plus / stats.q_plus**2,
        sigma2_minus=-l * stats.q1_minus / stats.q_minus**2,
    )


def attach_standard_errors(
    est: DriftEstimate, cov: CovMatrix2, scalar: float
) -> DriftEstimate:
    """Standard errors from a CLT covariance and its rate denominator.

    ``scalar`` is the number of observations N in the fixed-lag regime
    (sqrt(N) rate) and the horizon T in the high-frequency regime (sqrt(T)
    rate).
    """
    if scalar <= 0:
        raise ValueError("rate denominator must be positive")
    return replace(
        est,
        stderr_plus=math.sqrt(cov.a11 / scalar),
        stderr_minus=math.sqrt(cov.a22 / scalar),
    )


def report_items(
    drift: DriftEstimate,
    vol: Optional[VolEstimate],
    n_obs: int,
    h: float,
) -> list[tuple[str, object]]:
    """Flat key-value estimate report, in stable order."""

    def fmt(v):
        return "" if v is None else v

    return [
        ("method", drift.method),
        ("b_plus", drift.b_plus_hat),
        ("b_minus", drift.b_minus_hat),
        ("sigma2_plus", fmt(vol.sigma2_plus if vol else None)),
        ("sigma2_minus", fmt(vol.sigma2_minus if vol else None)),
        ("stderr_plus", fmt(drift.stderr_plus)),
        ("stderr_minus", fmt(drift.stderr_minus)),
        ("n_obs", n_obs),
        ("h", h),
    ]


def format_report(items: list[tuple[str, object]]) -> str:
    """``key = value`` per line, full double precision for floats."""
    lines = []
    for key, value in items:
        if isinstance(value, float):
            lines.append(f"{key} = {value:.17g}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"

"""Discrete path functionals used by every estimator.

All quantities are single-pass sums over the observation skeleton shifted so
the threshold sits at zero.  Indicator convention: the plus side owns exact
zeros (``1{y >= 0}`` for plus, ``1{y < 0}`` for minus), and the crossing
indicator is strict (``y_k y_{k+1} < 0``).  Statistics of two contiguous
chunks sharing their boundary sample merge associatively, so arbitrarily
long paths can be processed in pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import ModelParams
from .simulate import PathSample

__all__ = [
    "SufficientStats",
    "sufficient_stats",
    "stats_from_values",
    "merge_stats",
    "LocalTimeEstimates",
    "local_time_estimators",
    "TanakaResiduals",
    "tanaka_residuals",
    "discrete_covariation",
]


@dataclass(frozen=True)
class SufficientStats:
    """Sums over one observation skeleton.

    ``q_plus/q_minus``: occupation times (h times indicator counts);
    ``m_plus/m_minus``: one-sided signed increment sums;
    ``q1_plus/q1_minus``: first-moment occupations;
    ``lt_sum``: sum of |end point| over strict sign changes (half the
    local-time estimator);
    ``crossings``: number of strict sign changes;
    ``cross_prod_sum``: sum of products over strict sign changes (<= 0).
    """

    q_plus: float
    q_minus: float
    m_plus: float
    m_minus: float
    q1_plus: float
    q1_minus: float
    lt_sum: float
    crossings: int
    cross_prod_sum: float
    x_first: float
    x_last: float
    n_obs: int
    h: float

    @property
    def local_time(self) -> float:
        """The increment-magnitude local time estimator, 2 * lt_sum."""
        return 2.0 * self.lt_sum


def stats_from_values(values: np.ndarray, h: float, threshold: float = 0.0) -> SufficientStats:
    """Sufficient statistics of a raw value array observed at lag ``h``."""
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        raise ValueError("need at least two observations")
    y = values - threshold
    left = y[:-1]
    right = y[1:]
    pos = left >= 0
    incr = right - left

    cross = left * right < 0
    cross_right = right[cross]
    cross_left = left[cross]

    q_plus = h * float(np.count_nonzero(pos))
    q_minus = h * float(np.count_nonzero(~pos))
    m_plus = float(incr[pos].sum())
    m_minus = float(incr[~pos].sum())
    q1_plus = h * float(left[pos].sum())
    q1_minus = h * float(left[~pos].sum())
    lt_sum = float(np.abs(cross_right).sum())
    crossings = int(np.count_nonzero(cross))
    cross_prod_sum = float((cross_left * cross_right).sum())

    return SufficientStats(
        q_plus=q_plus,
        q_minus=q_minus,
        m_plus=m_plus,
        m_minus=m_minus,
        q1_plus=q1_plus,
        q1_minus=q1_minus,
        lt_sum=lt_sum,
        crossings=crossings,
        cross_prod_sum=cross_prod_sum,
        x_first=float(y[0]),
        x_last=float(y[-1]),
        n_obs=len(values) - 1,
        h=h,
    )


def sufficient_stats(path: PathSample, threshold: float = 0.0) -> SufficientStats:
    """All discrete functionals of a sampled path in one pass."""
    return stats_from_values(path.values, path.h, threshold)


def merge_stats(a: SufficientStats, b: SufficientStats) -> SufficientStats:
    """Combine statistics of two contiguous chunks.

    The chunks must share the boundary sample (``a.x_last == b.x_first``) so
    the crossing pair spanning the junction is counted exactly once, by the
    second chunk.
    """
    if a.h != b.h:
        raise ValueError("cannot merge statistics with different lags")
    if a.x_last != b.x_first:
        raise ValueError("chunks must share their boundary sample")
    return SufficientStats(
        q_plus=a.q_plus + b.q_plus,
        q_minus=a.q_minus + b.q_minus,
        m_plus=a.m_plus + b.m_plus,
        m_minus=a.m_minus + b.m_minus,
        q1_plus=a.q1_plus + b.q1_plus,
        q1_minus=a.q1_minus + b.q1_minus,
        lt_sum=a.lt_sum + b.lt_sum,
        crossings=a.crossings + b.crossings,
        cross_prod_sum=a.cross_prod_sum + b.cross_prod_sum,
        x_first=a.x_first,
        x_last=b.x_last,
        n_obs=a.n_obs + b.n_obs,
        h=a.h,
    )


class LocalTimeEstimates(NamedTuple):
    """The three discrete local-time estimators.

    ``l``: renormalized magnitude of post-crossing end points;
    ``lbar``: renormalized crossing count (needs the volatilities);
    ``lhat``: renormalized sample covariance of positive/negative parts.
    """

    l: float
    lbar: float
    lhat: float


def local_time_estimators(
    stats: SufficientStats, params: ModelParams
) -> LocalTimeEstimates:
    sp, sm = params.sigma_plus, params.sigma_minus
    l = 2.0 * stats.lt_sum
    lbar = math.sqrt(math.pi / 2) * (sp + sm) / 2 * math.sqrt(stats.h) * stats.crossings
    lhat = (
        -(3 * math.sqrt(math.pi) / (2 * math.sqrt(2)))
        * ((sm + sp) / (sm * sp))
        / math.sqrt(stats.h)
        * stats.cross_prod_sum
    )
    return LocalTimeEstimates(l=l, lbar=lbar, lhat=lhat)


class TanakaResiduals(NamedTuple):
    res_plus: float
    res_minus: float
    has_zero_sample: bool


def tanaka_residuals(path: PathSample, threshold: float = 0.0) -> TanakaResiduals:
    """Residuals of the discrete Tanaka identities, exactly zero on any path
    without an exactly-zero shifted sample.

    ``res+- = ({X_N}^+- - {X_0}^+-) - (+-M^+- + L/2)`` where ``{x}^+`` and
    ``{x}^-`` are the positive and negative parts.  Paths touching the
    threshold exactly are flagged, not rejected.
    """
    s = sufficient_stats(path, threshold)
    y = path.values - threshold
    has_zero = bool(np.any(y == 0.0))
    pos_first, pos_last = max(s.x_first, 0.0), max(s.x_last, 0.0)
    neg_first, neg_last = max(-s.x_first, 0.0), max(-s.x_last, 0.0)
    half_l = s.lt_sum
    res_plus = (pos_last - pos_first) - (s.m_plus + half_l)
    res_minus = (neg_last - neg_first) - (-s.m_minus + half_l)
    return TanakaResiduals(
        res_plus=res_plus, res_minus=res_minus, has_zero_sample=has_zero
    )


def discrete_covariation(ys, zs) -> float:
    """Sum of products of simultaneous increments of two sequences."""
    ys = np.asarray(ys, dtype=float)
    zs = np.asarray(zs, dtype=float)
    if ys.shape != zs.shape or ys.ndim != 1 or len(ys) < 2:
        raise ValueError("need two equal-length sequences of >= 2 points")
    return float((np.diff(ys) * np.diff(zs)).sum())

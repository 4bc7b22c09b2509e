"""Error quantification: batch-means covariance from a single path,
lag-truncated stationary long-run covariance by Monte Carlo, and normality
diagnostics.

The sqrt(N)-CLT covariance of the fixed-lag estimators has no closed form,
so it is estimated by two independent routes that are cross-validated
against each other: block covariances of per-batch estimates on one long
path, and a lag-truncated autocovariance sum of the centered per-step
functional over many short stationary-start replicates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import kolmogorov
from scipy.stats import norm

from .estimators import OneSidedPathError, dmle_drift, gme_drift, gme_volatility
from .model import CovMatrix2, ModelParams, asymptotic_constants, require_ergodic, sample_stationary
from .simulate import PathSample, SamplingScheme, simulate_path, substream
from .stats import stats_from_values

__all__ = [
    "BatchSpec",
    "GammaEstimate",
    "batch_means_cov",
    "mc_gamma",
    "normality_diagnostic",
    "long_run_variance",
    "FUNCTIONALS",
]


@dataclass(frozen=True)
class BatchSpec:
    """Contiguous-block split of one time series: ``n_batches`` blocks after
    discarding an initial ``discard_fraction`` burn-in."""

    n_batches: int = 100
    discard_fraction: float = 0.0

    def __post_init__(self) -> None:
        if self.n_batches < 2:
            raise ValueError("need at least two batches")
        if not 0.0 <= self.discard_fraction < 0.5:
            raise ValueError("discard_fraction must lie in [0, 0.5)")


class OneSidedBatchError(ValueError):
    """A batch never visits one side of the threshold."""

    def __init__(self, batch_index: int, side: str):
        self.batch_index = batch_index
        self.side = side
        super().__init__(
            f"batch {batch_index} has zero occupation on the {side} side"
        )


_BLOCK_ESTIMATORS = {
    "gme": lambda s: (gme_drift(s).b_plus_hat, gme_drift(s).b_minus_hat),
    "dmle": lambda s: (dmle_drift(s).b_plus_hat, dmle_drift(s).b_minus_hat),
    "vol": lambda s: (gme_volatility(s).sigma2_plus, gme_volatility(s).sigma2_minus),
}


def batch_means_cov(
    path: PathSample,
    threshold: float,
    spec: BatchSpec,
    estimator: str = "gme",
) -> CovMatrix2:
    """Batch-means estimate of the sqrt(N)-CLT covariance.

    Splits the skeleton into contiguous blocks, computes the chosen
    estimator per block and returns (block length) times the empirical
    covariance of the block estimates.
    """
    if estimator not in _BLOCK_ESTIMATORS:
        raise ValueError(f"unknown estimator tag {estimator!r}")
    block_fn = _BLOCK_ESTIMATORS[estimator]
    n = path.n_obs
    start = int(spec.discard_fraction * n)
    block = (n - start) // spec.n_batches
    if block < 10:
        raise ValueError(
            f"batch length {block} too short; need >= 10 observations per batch"
        )
    estimates = np.empty((spec.n_batches, 2))
    for i in range(spec.n_batches):
        lo = start + i * block
        vals = path.values[lo : lo + block + 1]
        s = stats_from_values(vals, path.h, threshold)
        try:
            estimates[i] = block_fn(s)
        except OneSidedPathError as exc:
            raise OneSidedBatchError(i, exc.side) from exc
    cov = np.cov(estimates, rowvar=False, ddof=1) * block
    return CovMatrix2.from_array(cov)


@dataclass(frozen=True)
class GammaEstimate:
    """Lag-truncated long-run covariance with its estimation metadata.

    For the scalar local-time functionals the variance sits in ``a11`` and
    the second row/column is zero.  ``functional_mean`` is the uncentered
    stationary mean of the per-step functional (with its standard error
    across replicates); for the drift and volatility functionals the exact
    stationary mean is zero.
    """

    matrix: CovMatrix2
    lag_cap: int
    mc_replicates: int
    functional_mean: np.ndarray
    functional_mean_se: np.ndarray


def _q_functional(params: ModelParams, h: float):
    """Influence function of the generalized-moment drift estimator.

    Delta-method linearization of (-L/(2Q+), L/(2Q-)) around the stationary
    means; the occupation-indicator weights are the exact fixed-lag limits
    of the estimator (which differ from the nominal drifts by the O(sqrt(h))
    crossing bias), so the functional is exactly centered.
    """
    from .analytic import fixed_lag_limits

    c = asymptotic_constants(params)
    lim = fixed_lag_limits(params, h)
    bp, bm = lim.b_plus, lim.b_minus

    def q(x, y):
        cross_abs = np.where(x * y < 0, np.abs(y), 0.0)
        pos = (x >= 0).astype(float)
        q1 = (-cross_abs - bp * h * pos) / (h * c.q_inf_plus)
        q2 = (cross_abs - bm * h * (1.0 - pos)) / (h * c.q_inf_minus)
        return np.stack([q1, q2], axis=-1)

    return q


def _v_functional(params: ModelParams, h: float):
    bp, bm = params.b_plus, params.b_minus
    sp2, sm2 = params.sigma_plus**2, params.sigma_minus**2
    ab = abs(bp)
    scale = (bm + ab) / (bm * ab)

    def v(x, y):
        cross_abs = np.where(x * y < 0, np.abs(y), 0.0)
        pos = (x >= 0).astype(float)
        neg = 1.0 - pos
        v1 = 2 * scale * (
            cross_abs * sp2 / (2 * h) + np.abs(x) * bp**2 * pos - sp2 * ab * pos
        )
        v2 = 2 * scale * (
            cross_abs * sm2 / (2 * h) + np.abs(x) * bm**2 * neg - sm2 * bm * neg
        )
        return np.stack([v1, v2], axis=-1)

    return v


def _lt_functional(params: ModelParams, h: float, kind: str):
    sp, sm = params.sigma_plus, params.sigma_minus

    if kind == "lt_l":

        def f(x, y):
            g = np.where(x * y < 0, np.abs(y), 0.0)
            return (2.0 / h * g)[..., None]

    elif kind == "lt_lbar":
        coef = math.sqrt(math.pi / 2) * (sp + sm) / 2 / math.sqrt(h)

        def f(x, y):
            j = (x * y < 0).astype(float)
            return (coef * j)[..., None]

    elif kind == "lt_lhat":
        coef = -(3 * math.sqrt(math.pi) / (2 * math.sqrt(2))) * (sm + sp) / (sm * sp)
        coef /= h * math.sqrt(h)

        def f(x, y):
            prod = np.where(x * y < 0, x * y, 0.0)
            return (coef * prod)[..., None]

    else:
        raise ValueError(f"unknown functional tag {kind!r}")
    return f


def mc_gamma(
    params: ModelParams,
    h: float,
    functional: str,
    lag_cap: int,
    replicates: int,
    seed: int,
    substeps: int = 8,
) -> GammaEstimate:
    """Monte Carlo lag-truncated long-run covariance of a per-step functional.

    Simulates ``replicates`` stationary-start paths of ``lag_cap + 1``
    observation lags, centers the functional at its empirical grand mean and
    returns ``C(0) + sum_{k=1..K} (C(k) + C(k)^T)`` with ``C(k)`` the
    anchor-to-lag-k cross moment across replicates.
    """
    require_ergodic(params)
    if lag_cap < 0:
        raise ValueError("lag truncation must be non-negative")
    if replicates < 100:
        raise ValueError("need at least 100 replicates")

    if functional == "drift_q":
        f = _q_functional(params, h)
    elif functional == "vol_v":
        f = _v_functional(params, h)
    else:
        f = _lt_functional(params, h, functional)

    scheme = SamplingScheme(h=h, n_obs=lag_cap + 1, substeps=substeps)
    thr = params.threshold
    samples = None
    for rep in range(replicates):
        rng = substream(seed, rep)
        x0 = sample_stationary(params, rng)
        path = simulate_path(params, x0, scheme, seed, key=(rep, 1))
        y = path.values - thr
        vals = f(y[:-1], y[1:])  # (lag_cap + 1, d)
        if samples is None:
            samples = np.empty((replicates,) + vals.shape)
        samples[rep] = vals

    d = samples.shape[-1]
    grand_mean = samples.reshape(-1, d).mean(axis=0)
    centered = samples - grand_mean
    anchor = centered[:, 0, :]  # (R, d)
    gamma = anchor.T @ anchor / replicates
    for k in range(1, lag_cap + 1):
        ck = anchor.T @ centered[:, k, :] / replicates
        gamma += ck + ck.T

    rep_means = samples.mean(axis=1)  # (R, d)
    mean_se = rep_means.std(axis=0, ddof=1) / math.sqrt(replicates)

    if d == 1:
        matrix = CovMatrix2(float(gamma[0, 0]), 0.0, 0.0)
    else:
        matrix = CovMatrix2.from_array(gamma)
    return GammaEstimate(
        matrix=matrix,
        lag_cap=lag_cap,
        mc_replicates=replicates,
        functional_mean=grand_mean,
        functional_mean_se=mean_se,
    )


FUNCTIONALS = ("drift_q", "vol_v", "lt_l", "lt_lbar", "lt_lhat")


class NormalityDiagnostic(NamedTuple):
    ks_stat: float
    ks_p: float
    mean: float
    variance: float


def normality_diagnostic(samples) -> NormalityDiagnostic:
    """Kolmogorov-Smirnov fit of the Gaussian with matched moments.

    The p-value uses the asymptotic Kolmogorov distribution, adequate for
    the sample sizes (>= 50 enforced, >= 1e3 in practice) this is used at.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 50:
        raise ValueError("need at least 50 samples")
    mean = float(x.mean())
    var = float(x.var(ddof=1))
    sd = math.sqrt(var)
    xs = np.sort(x)
    n = x.size
    cdf = norm.cdf(xs, loc=mean, scale=sd)
    up = np.arange(1, n + 1) / n - cdf
    down = cdf - np.arange(0, n) / n
    ks = float(max(up.max(), down.max()))
    p = float(kolmogorov(math.sqrt(n) * ks))
    return NormalityDiagnostic(ks_stat=ks, ks_p=p, mean=mean, variance=var)


def long_run_variance(samples, n_batches: int) -> float:
    """Batch-means long-run variance of a scalar stationary series."""
    x = np.asarray(samples, dtype=float)
    block = x.size // n_batches
    if block < 2:
        raise ValueError("batches too short")
    means = x[: block * n_batches].reshape(n_batches, block).mean(axis=1)
    return block * float(means.var(ddof=1))

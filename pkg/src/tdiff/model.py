"""Model parameters, stationary law and closed-form asymptotic constants.

All closed forms are stated for the process shifted so the threshold sits at
zero; the public API accepts an arbitrary threshold and shifts internally.
The ergodic regime requires ``b_plus < 0 < b_minus`` (mean reversion towards
the threshold from both sides).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "ModelParams",
    "AsymptoticConstants",
    "CovMatrix2",
    "asymptotic_constants",
    "stationary_density",
    "sample_stationary",
    "hf_limit_scale",
    "require_ergodic",
]


class NotErgodicError(ValueError):
    """Raised when an operation needs the ergodic sign pattern b+ < 0 < b-."""


@dataclass(frozen=True)
class ModelParams:
    """Piecewise-constant drift/volatility with a single threshold.

    ``b_plus``/``sigma_plus`` apply on ``{x >= threshold}``,
    ``b_minus``/``sigma_minus`` on ``{x < threshold}``.  This raw constructor
    only requires positive volatilities, so estimator outputs that violate
    the ergodicity sign constraints stay representable.  Use
    :meth:`ergodic` when the sign constraints must hold.
    """

    b_plus: float
    b_minus: float
    sigma_plus: float
    sigma_minus: float
    threshold: float = 0.0

    def __post_init__(self) -> None:
        if not (self.sigma_plus > 0 and self.sigma_minus > 0):
            raise ValueError("volatilities must be strictly positive")

    @classmethod
    def ergodic(
        cls,
        b_plus: float,
        b_minus: float,
        sigma_plus: float,
        sigma_minus: float,
        threshold: float = 0.0,
    ) -> "ModelParams":
        p = cls(b_plus, b_minus, sigma_plus, sigma_minus, threshold)
        require_ergodic(p)
        return p

    @property
    def is_ergodic(self) -> bool:
        return self.b_plus < 0 < self.b_minus

    def shifted(self) -> "ModelParams":
        """Same dynamics seen from the threshold (threshold = 0)."""
        if self.threshold == 0.0:
            return self
        return replace(self, threshold=0.0)

    def drift(self, x: float) -> float:
        return self.b_plus if x >= self.threshold else self.b_minus

    def vol(self, x: float) -> float:
        return self.sigma_plus if x >= self.threshold else self.sigma_minus


def require_ergodic(params: ModelParams) -> None:
    if not params.is_ergodic:
        raise NotErgodicError(
            f"need b_plus < 0 < b_minus, got b_plus={params.b_plus}, "
            f"b_minus={params.b_minus}"
        )


@dataclass(frozen=True)
class CovMatrix2:
    """Symmetric 2x2 covariance matrix, PSD within a small tolerance."""

    a11: float
    a12: float
    a22: float

    def __post_init__(self) -> None:
        scale = max(1.0, abs(self.a11), abs(self.a12), abs(self.a22))
        # eigenvalues of [[a11, a12], [a12, a22]]
        tr = self.a11 + self.a22
        disc = math.sqrt(max((self.a11 - self.a22) ** 2 + 4 * self.a12**2, 0.0))
        lam_min = 0.5 * (tr - disc)
        if lam_min < -1e-10 * scale:
            raise ValueError(f"matrix not PSD (min eigenvalue {lam_min:g})")

    @classmethod
    def from_array(cls, a: np.ndarray) -> "CovMatrix2":
        a = np.asarray(a, dtype=float)
        if a.shape != (2, 2):
            raise ValueError("expected a 2x2 array")
        if not math.isclose(a[0, 1], a[1, 0], rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError("matrix not symmetric")
        off = 0.5 * (a[0, 1] + a[1, 0])
        return cls(float(a[0, 0]), float(off), float(a[1, 1]))

    @classmethod
    def diagonal(cls, d1: float, d2: float) -> "CovMatrix2":
        return cls(d1, 0.0, d2)

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])


@dataclass(frozen=True)
class AsymptoticConstants:
    """Closed-form limits of the discrete functionals in the ergodic regime.

    ``q_inf_plus/minus`` are the stationary occupation fractions,
    ``q1_inf_plus/minus`` the first-moment occupations, ``l_inf`` the
    small-lag limit of the local-time rate, and ``sigma_clt`` the
    high-frequency long-horizon CLT covariance of the drift estimators.

    ``lt_sqrth`` holds the sqrt(h) coefficients of the small-lag expansion
    ``rate(h) = l_inf + c sqrt(h) + O(h)`` for the three local-time
    estimators (magnitude-of-endpoint, crossing-count, sample-covariance),
    all negative in the ergodic regime: sparser sampling misses crossings.
    ``l1``/``l2`` are the conventional names for the crossing-count and
    sample-covariance coefficients: ``lt_sqrth = (c_l, -l1, l2)``.
    """

    q_inf_plus: float
    q_inf_minus: float
    q1_inf_plus: float
    q1_inf_minus: float
    l_inf: float
    l1: float
    l2: float
    lt_sqrth: tuple
    sigma_clt: CovMatrix2
    ex_plus: float
    ex_minus: float


def asymptotic_constants(params: ModelParams) -> AsymptoticConstants:
    """All closed-form asymptotic constants for an ergodic parameter set."""
    require_ergodic(params)
    bp, bm = params.b_plus, params.b_minus
    sp, sm = params.sigma_plus, params.sigma_minus
    ab = abs(bp)
    denom = bm + ab

    q_plus = bm / denom
    q_minus = ab / denom
    q1_plus = bm * sp**2 / (2 * ab * denom)
    q1_minus = -ab * sm**2 / (2 * bm * denom)
    l_inf = 2 * ab * bm / denom
    l1 = math.sqrt(math.pi / 2) * ab * bm / (sp + sm)
    l2 = (
        -(3 * math.sqrt(math.pi) / (4 * math.sqrt(2)))
        * (ab * bm / denom)
        * (ab / sp + bm / sm + denom / (sm + sp))
    )
    c_l = -(16.0 / (3.0 * math.sqrt(2 * math.pi))) * ab * bm / (sp + sm)
    scale = denom / (bm * ab)
    sigma = CovMatrix2.diagonal(scale * sp**2 * ab, scale * sm**2 * bm)
    ex_plus = sp**2 * bm / (2 * ab * denom)
    ex_minus = -(sm**2) * ab / (2 * bm * denom)

    return AsymptoticConstants(
        q_inf_plus=q_plus,
        q_inf_minus=q_minus,
        q1_inf_plus=q1_plus,
        q1_inf_minus=q1_minus,
        l_inf=l_inf,
        l1=l1,
        l2=l2,
        lt_sqrth=(c_l, -l1, l2),
        sigma_clt=sigma,
        ex_plus=ex_plus,
        ex_minus=ex_minus,
    )


def stationary_density(params: ModelParams, x):
    """Stationary density (normalized speed measure) at ``x``.

    Two one-sided exponentials glued at the threshold; the plus branch owns
    the threshold point itself.
    """
    require_ergodic(params)
    bp, bm = params.b_plus, params.b_minus
    sp, sm = params.sigma_plus, params.sigma_minus
    ab = abs(bp)
    amp = ab * bm / (bm + ab)
    y = np.asarray(x, dtype=float) - params.threshold
    on_plus = y >= 0
    expo = np.where(on_plus, -2.0 * ab * y / sp**2, 2.0 * bm * y / sm**2)
    coef = np.where(on_plus, 2.0 / sp**2, 2.0 / sm**2)
    out = coef * amp * np.exp(expo)
    return out if out.ndim else float(out)


def sample_stationary(params: ModelParams, rng: np.random.Generator, size=None):
    """Draw from the stationary law.

    Mixture of two one-sided exponentials: with probability Q_inf^+ the draw
    is ``threshold + Exp(2|b+|/sigma+^2)``, otherwise
    ``threshold - Exp(2 b-/sigma-^2)``.  Consumes exactly ``2 * n`` variates
    from ``rng``, so the output is deterministic given the generator state.
    """
    require_ergodic(params)
    c = asymptotic_constants(params)
    n = 1 if size is None else int(size)
    side_pos = rng.random(n) < c.q_inf_plus
    expo = rng.exponential(1.0, n)
    rate_pos = 2 * abs(params.b_plus) / params.sigma_plus**2
    rate_neg = 2 * params.b_minus / params.sigma_minus**2
    draws = np.where(side_pos, expo / rate_pos, -expo / rate_neg)
    draws = params.threshold + draws
    return float(draws[0]) if size is None else draws


def hf_limit_scale(params: ModelParams, horizon: float, lt: float) -> float:
    """Stochastic scale of the fixed-horizon high-frequency Gaussian limit.

    ``sqrt((4 sqrt(T) / (3 sqrt(2 pi))) (sigma-^2 + sigma+^2) / (sigma- +
    sigma+)) * sqrt(lt)`` where ``lt`` is the realized local time at the
    threshold up to the horizon.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if lt < 0:
        raise ValueError("local time must be non-negative")
    sp, sm = params.sigma_plus, params.sigma_minus
    factor = (4 * math.sqrt(horizon) / (3 * math.sqrt(2 * math.pi))) * (
        (sm**2 + sp**2) / (sm + sp)
    )
    return math.sqrt(factor) * math.sqrt(lt)

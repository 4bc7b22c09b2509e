"""Simulation and inference for ergodic threshold diffusions.

The model is a one-dimensional SDE whose drift and volatility are piecewise
constant with a single jump at a known threshold.  The package provides:

- ``model``: parameter container, stationary law, closed-form asymptotic
  constants of the ergodic regime;
- ``analytic``: scale/speed functions, minimal solutions, resolvent kernel,
  Laplace transforms of crossing functionals and a Gaver-Stehfest inverter,
  used as independent oracles;
- ``simulate``: seeded Euler-Maruyama path generation with sub-stepping and
  reproducible per-replicate substreams;
- ``stats``: discrete path functionals (occupations, signed increments,
  crossing sums) and the exact discrete Tanaka identities;
- ``estimators``: generalized-moment and discretized-likelihood drift
  estimators, and the generalized-moment volatility estimator;
- ``inference``: batch-means and lag-truncated Monte Carlo long-run
  covariance estimation, normality diagnostics;
- ``cli`` / ``experiments``: the ``tdiff`` command line front end and the
  Monte Carlo experiment suites.
"""

__version__ = "0.1.0"

from .model import (
    AsymptoticConstants,
    CovMatrix2,
    ModelParams,
    asymptotic_constants,
    hf_limit_scale,
    sample_stationary,
    stationary_density,
)
from .simulate import PathSample, SamplingScheme, simulate_path
from .stats import SufficientStats, sufficient_stats

__all__ = [
    "AsymptoticConstants",
    "CovMatrix2",
    "ModelParams",
    "PathSample",
    "SamplingScheme",
    "SufficientStats",
    "asymptotic_constants",
    "hf_limit_scale",
    "sample_stationary",
    "simulate_path",
    "stationary_density",
    "sufficient_stats",
    "__version__",
]

"""The Monte Carlo experiment suites behind the CLI.

Each suite consumes an :class:`~tdiff.config.ExperimentConfig`, runs seeded
replicates with deterministic per-replicate substreams, and returns plain
row lists that the CLI writes as CSV (with a trailing metadata comment for
reproducibility).  The analytic self-check suite exercises every closed-form
identity of the :mod:`~tdiff.analytic` oracle.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from . import analytic
from .config import ExperimentConfig
from .estimators import OneSidedPathError, dmle_drift, gme_drift
from .inference import normality_diagnostic
from .model import (
    ModelParams,
    asymptotic_constants,
    sample_stationary,
    stationary_density,
)
from .simulate import SamplingScheme, simulate_path, substream
from .stats import local_time_estimators, stats_from_values, sufficient_stats

__all__ = [
    "run_mse_sweep",
    "run_clt_check",
    "run_lt_bias",
    "run_hf_rate",
    "run_analytic_check",
    "MseResult",
    "CltResult",
    "LtBiasResult",
    "HfRateResult",
    "CheckResult",
]

# key-space tags so no two experiment stages share a substream
_TAG_MSE, _TAG_CLT, _TAG_LT, _TAG_HF = 10, 20, 30, 40


def _map_replicates(fn: Callable[[int], object], n: int, threads: int = 1):
    """Deterministic replicate map: results ordered by index regardless of
    scheduling."""
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


# ---------------------------------------------------------------------------
# MSE sweep


@dataclass
class MseResult:
    rows: list  # (N, method, side, mse, bias, variance, failures)
    header = ("N", "method", "side", "mse", "bias", "variance", "failures")


def run_mse_sweep(config: ExperimentConfig, threads: int = 1) -> MseResult:
    """Mean squared error of both drift estimators over an N grid."""
    params = config.model
    h = config.sampling.h
    substeps = config.sampling.substeps
    seed = config.seed
    reps = config.replicates
    rows = []
    for i_n, n_obs in enumerate(config.n_grid):
        scheme = SamplingScheme(h=h, n_obs=n_obs, substeps=substeps)

        def one(rep: int):
            rng = substream(seed, _TAG_MSE, i_n, rep, 1)
            x0 = sample_stationary(params, rng)
            path = simulate_path(params, x0, scheme, seed, key=(_TAG_MSE, i_n, rep))
            s = sufficient_stats(path, params.threshold)
            try:
                g = gme_drift(s)
                d = dmle_drift(s)
            except OneSidedPathError:
                return None
            return (g.b_plus_hat, g.b_minus_hat, d.b_plus_hat, d.b_minus_hat)

        results = _map_replicates(one, reps, threads)
        ok = np.array([r for r in results if r is not None])
        failures = reps - len(ok)
        truth = (params.b_plus, params.b_minus, params.b_plus, params.b_minus)
        labels = (("GME", "plus"), ("GME", "minus"), ("DMLE", "plus"), ("DMLE", "minus"))
        for col, ((method, side), b_true) in enumerate(zip(labels, truth)):
            err = ok[:, col] - b_true
            mse = float(np.mean(err**2))
            bias = float(np.mean(err))
            variance = float(np.var(err)) if len(err) > 1 else 0.0
            rows.append((n_obs, method, side, mse, bias, variance, failures))
    return MseResult(rows=rows)


# ---------------------------------------------------------------------------
# CLT check


@dataclass
class CltResult:
    rows: list  # (N, side, ks_stat, ks_p, emp_var)
    cross_z: dict  # N -> z-score of plus/minus error correlation
    errors: dict  # N -> (R, 2) rescaled errors, for downstream diagnostics
    header = ("N", "side", "ks_stat", "ks_p", "emp_var")


def run_clt_check(config: ExperimentConfig, threads: int = 1) -> CltResult:
    """Normality of the sqrt(N)-rescaled generalized-moment errors."""
    params = config.model
    h = config.sampling.h
    substeps = config.sampling.substeps
    seed = config.seed
    reps = config.replicates
    rows = []
    cross_z = {}
    errors_by_n = {}
    for i_n, n_obs in enumerate(config.n_grid):
        scheme = SamplingScheme(h=h, n_obs=n_obs, substeps=substeps)

        def one(rep: int):
            rng = substream(seed, _TAG_CLT, i_n, rep, 1)
            x0 = sample_stationary(params, rng)
            path = simulate_path(params, x0, scheme, seed, key=(_TAG_CLT, i_n, rep))
            s = sufficient_stats(path, params.threshold)
            try:
                g = gme_drift(s)
            except OneSidedPathError:
                return None
            return (g.b_plus_hat - params.b_plus, g.b_minus_hat - params.b_minus)

        results = _map_replicates(one, reps, threads)
        ok = np.array([r for r in results if r is not None])
        rescaled = math.sqrt(n_obs) * ok
        errors_by_n[n_obs] = rescaled
        for col, side in enumerate(("plus", "minus")):
            diag = normality_diagnostic(rescaled[:, col])
            rows.append((n_obs, side, diag.ks_stat, diag.ks_p, diag.variance))
        r = float(np.corrcoef(rescaled[:, 0], rescaled[:, 1])[0, 1])
        cross_z[n_obs] = r * math.sqrt(len(rescaled))
    return CltResult(rows=rows, cross_z=cross_z, errors=errors_by_n)


# ---------------------------------------------------------------------------
# Local-time bias constants


@dataclass
class LtBiasResult:
    rows: list  # (h, estimator, mean_rate, bias, fitted_sqrt_h_coeff)
    fitted: dict  # estimator -> (coeff, stderr)
    header = ("h", "estimator", "mean_rate", "bias", "fitted_sqrt_h_coeff")


def _block_rates(values, h, params, n_blocks):
    """Per-block local-time rates, for standard errors of the path mean."""
    n = len(values) - 1
    block = n // n_blocks
    rates = np.empty((n_blocks, 3))
    for i in range(n_blocks):
        vals = values[i * block : (i + 1) * block + 1]
        s = stats_from_values(vals, h, params.threshold)
        est = local_time_estimators(s, params)
        rates[i] = (est.l, est.lbar, est.lhat)
    return rates / (h * block)


def run_lt_bias(config: ExperimentConfig, n_blocks: int = 50) -> LtBiasResult:
    """Mean local-time rates over an h grid and the fitted sqrt(h) bias
    coefficients of the three estimators.

    Each grid point uses a single stationary-start path with
    ``time_per_point = h * N`` held fixed; the bias against the limit rate
    is fitted as ``c sqrt(h) + d h`` by weighted least squares, the ``d h``
    term absorbing both the next expansion order and the residual Euler
    discretization bias (which is linear in the substep).
    """
    params = config.model
    consts = asymptotic_constants(params)
    seed = config.seed
    substeps = config.sampling.substeps
    time_per_point = config.time_per_point or 1e5

    names = ("L", "Lbar", "Lhat")
    means = np.empty((len(config.h_grid), 3))
    ses = np.empty((len(config.h_grid), 3))
    for i_h, h in enumerate(config.h_grid):
        n_obs = int(round(time_per_point / h))
        scheme = SamplingScheme(h=h, n_obs=n_obs, substeps=substeps)
        rng = substream(seed, _TAG_LT, i_h, 1)
        x0 = sample_stationary(params, rng)
        path = simulate_path(params, x0, scheme, seed, key=(_TAG_LT, i_h))
        s = sufficient_stats(path, params.threshold)
        est = local_time_estimators(s, params)
        means[i_h] = np.array([est.l, est.lbar, est.lhat]) / (h * n_obs)
        rates = _block_rates(path.values, h, params, n_blocks)
        ses[i_h] = rates.std(axis=0, ddof=1) / math.sqrt(n_blocks)

    hs = np.asarray(config.h_grid)
    design = np.column_stack([np.sqrt(hs), hs])
    fitted = {}
    rows = []
    for j, name in enumerate(names):
        bias = means[:, j] - consts.l_inf
        w = 1.0 / ses[:, j] ** 2
        xtwx = design.T @ (design * w[:, None])
        xtwy = design.T @ (bias * w)
        cov = np.linalg.inv(xtwx)
        coef = cov @ xtwy
        fitted[name] = (float(coef[0]), float(math.sqrt(cov[0, 0])))
        for i_h, h in enumerate(config.h_grid):
            rows.append((h, name, means[i_h, j], bias[i_h], coef[0]))
    return LtBiasResult(rows=rows, fitted=fitted)


# ---------------------------------------------------------------------------
# High-frequency convergence rate


@dataclass
class HfRateResult:
    rows: list  # (N, side, sd_rescaled)
    raw_sd: dict  # (N, side) -> unrescaled deviation sd
    failures: int = 0
    deviations: np.ndarray = None  # (replicates_ok, len(n_grid), 2) raw devs
    header = ("N", "side", "sd_rescaled")


def run_hf_rate(config: ExperimentConfig, threads: int = 1) -> HfRateResult:
    """Rate of convergence of the discrete drift estimator to its
    fixed-horizon continuous-observation limit.

    The limit has no closed form on a path, so a ``ref_multiple`` times
    finer Euler grid serves as its proxy; deviations of the coarse-grid
    estimates from the proxy are rescaled by N^(1/4) and their spread is
    reported per grid size.
    """
    params = config.model
    horizon = config.horizon
    if horizon <= 0:
        raise ValueError("hf_rate needs a positive horizon")
    seed = config.seed
    reps = config.replicates
    n_grid = sorted(config.n_grid)
    n_fine = config.ref_multiple * n_grid[-1]
    h_fine = horizon / n_fine
    scheme = SamplingScheme(h=h_fine, n_obs=n_fine, substeps=1)

    def one(rep: int):
        rng = substream(seed, _TAG_HF, rep, 1)
        x0 = sample_stationary(params, rng)
        path = simulate_path(params, x0, scheme, seed, key=(_TAG_HF, rep))
        try:
            s_ref = stats_from_values(path.values, h_fine, params.threshold)
            ref = dmle_drift(s_ref)
            devs = np.empty((len(n_grid), 2))
            for i, n in enumerate(n_grid):
                stride = n_fine // n
                sub = path.values[::stride]
                s = stats_from_values(sub, horizon / n, params.threshold)
                d = dmle_drift(s)
                devs[i] = (d.b_plus_hat - ref.b_plus_hat, d.b_minus_hat - ref.b_minus_hat)
        except OneSidedPathError:
            return None
        return devs

    results = _map_replicates(one, reps, threads)
    ok = np.array([r for r in results if r is not None])
    failures = reps - len(ok)
    rows = []
    raw_sd = {}
    for i, n in enumerate(n_grid):
        for col, side in enumerate(("plus", "minus")):
            sd_raw = float(ok[:, i, col].std(ddof=1))
            raw_sd[(n, side)] = sd_raw
            rows.append((n, side, n**0.25 * sd_raw))
    return HfRateResult(rows=rows, raw_sd=raw_sd, failures=failures,
                        deviations=ok)


# ---------------------------------------------------------------------------
# Analytic self-check


@dataclass
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance


def integrate_two_sided(f, center: float, cut: float, breaks: Sequence[float] = ()) -> float:
    """Adaptive quadrature over the real line with an exponential tail cut at
    ``center +- cut``, split at ``center`` and any extra ``breaks`` (kink or
    peak locations the adaptive rule would otherwise miss)."""
    pts = sorted(
        {center - cut, center, center + cut}
        | {b for b in breaks if center - cut < b < center + cut}
    )
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, _ = quad(f, lo, hi, limit=200)
        total += val
    return total


def _random_ergodic(rng) -> ModelParams:
    return ModelParams.ergodic(
        b_plus=-float(rng.uniform(0.05, 1.5)),
        b_minus=float(rng.uniform(0.05, 1.5)),
        sigma_plus=float(rng.uniform(0.3, 2.0)),
        sigma_minus=float(rng.uniform(0.3, 2.0)),
    )


def _ode_residual(params: ModelParams, lam: float, x: float, step: float = 1e-4) -> float:
    """Relative residual of (A - lam)u = 0 for both minimal solutions at x,
    by central differences."""
    worst = 0.0
    for pick in (0, 1):  # psi, phi
        u = lambda z: analytic.minimal_functions(params, lam, z)[pick]
        u0 = u(x)
        up = (u(x + step) - u(x - step)) / (2 * step)
        upp = (u(x + step) - 2 * u0 + u(x - step)) / step**2
        b = params.b_plus if x >= params.threshold else params.b_minus
        sig = params.sigma_plus if x >= params.threshold else params.sigma_minus
        res = 0.5 * sig**2 * upp + b * up - lam * u0
        scale = abs(lam * u0) + abs(b * up) + 0.5 * sig**2 * abs(upp)
        worst = max(worst, abs(res) / scale)
    return worst


def run_analytic_check(params: ModelParams, seed: int = 7) -> list[CheckResult]:
    """Every closed-form identity of the analytic oracle, with residuals."""
    rng = np.random.default_rng(seed)
    checks: list[CheckResult] = []
    consts = asymptotic_constants(params)
    r0 = params.threshold

    # resolvent normalization: integral of the kernel equals 1/lam
    worst = 0.0
    for lam in (0.5, 1.0, 2.0):
        cut = 40 * max(
            params.sigma_plus**2 / (2 * abs(params.b_plus)),
            params.sigma_minus**2 / (2 * params.b_minus),
            params.sigma_plus / math.sqrt(2 * lam),
            params.sigma_minus / math.sqrt(2 * lam),
        )
        for x in (r0 - 1.0, r0, r0 + 1.0):
            total = integrate_two_sided(
                lambda y: analytic.resolvent(params, lam, x, y), r0, cut, breaks=(x,)
            )
            worst = max(worst, abs(total - 1.0 / lam) * lam)
    checks.append(CheckResult("resolvent_normalization", worst, 1e-6))

    # minimal functions solve the generator eigenproblem
    worst = 0.0
    for _ in range(10):
        p = _random_ergodic(rng)
        lam = float(rng.uniform(0.1, 5.0))
        for x in (-1.0, 1.0):
            worst = max(worst, _ode_residual(p, lam, x))
    for lam in (0.5, 2.0):
        for x in (r0 - 1.0, r0 + 1.0):
            worst = max(worst, _ode_residual(params, lam, x))
    checks.append(CheckResult("minimal_ode_residual", worst, 1e-5))

    # continuity coefficients sum to one
    worst = 0.0
    for _ in range(50):
        p = _random_ergodic(rng)
        lam = float(rng.uniform(1e-3, 10.0))
        kp, dp, km, dm = analytic.minimal_coefficients(p, lam)
        worst = max(worst, abs(kp + dp - 1.0), abs(km + dm - 1.0))
    checks.append(CheckResult("minimal_coefficients_sum", worst, 1e-12))

    # Wronskian small-lambda slope
    lam = 1e-6
    slope = analytic.wronskian(params, lam) / lam
    target = (params.b_minus + abs(params.b_plus)) / (
        params.b_minus * abs(params.b_plus)
    )
    checks.append(
        CheckResult("wronskian_small_lambda", abs(slope / target - 1.0), 1e-3)
    )

    # Wronskian positivity across a wide lambda grid
    lams = np.logspace(-6, 2, 30)
    min_w = min(analytic.wronskian(params, lam) for lam in lams)
    checks.append(CheckResult("wronskian_positive", 0.0 if min_w > 0 else 1.0, 0.5))

    # driftless transition density normalizes
    worst = 0.0
    for t in (0.5, 2.0):
        cut = 40 * max(params.sigma_plus, params.sigma_minus) * math.sqrt(max(t, 1.0))
        for x in (r0 - 1.0, r0, r0 + 1.0):
            total = integrate_two_sided(
                lambda y: analytic.driftless_transition_density(params, t, x, y),
                r0,
                cut + abs(x - r0),
                breaks=(x,),
            )
            worst = max(worst, abs(total - 1.0))
    checks.append(CheckResult("driftless_density_normalization", worst, 1e-8))

    # stationary density normalizes
    cut = 40 * max(
        params.sigma_plus**2 / (2 * abs(params.b_plus)),
        params.sigma_minus**2 / (2 * params.b_minus),
    )
    total = integrate_two_sided(lambda x: stationary_density(params, x), r0, cut)
    checks.append(CheckResult("stationary_density_normalization", abs(total - 1.0), 1e-9))

    # Laplace inverter accuracy on a known pair: amp/lam^2 -> amp t
    amp = consts.l_inf / 2
    worst = 0.0
    for t in (0.5, 1.0, 3.0):
        inv = analytic.laplace_invert(lambda lam: amp / lam**2, t)
        worst = max(worst, abs(inv - amp * t) / (amp * t))
    checks.append(CheckResult("laplace_inversion_accuracy", worst, 1e-6))

    # one-point crossing transforms equal resolvent quadrature
    worst = 0.0
    for lam in (0.5, 2.0):
        for x in (r0 - 0.6, r0 + 0.6):
            ct = analytic.laplace_crossing(params, lam, x)
            cut = 40 * max(
                params.sigma_plus**2 / (2 * abs(params.b_plus)),
                params.sigma_minus**2 / (2 * params.b_minus),
                params.sigma_plus / math.sqrt(2 * lam),
                params.sigma_minus / math.sqrt(2 * lam),
            )
            # breakpoints resolve the boundary layer of width sigma/sqrt(2 lam)
            s = min(params.sigma_plus, params.sigma_minus) / math.sqrt(2 * lam)
            offs = [u for u in (s, 10 * s, 100 * s) if u < cut] + [cut]
            side = -1.0 if x > r0 else 1.0
            pts = [r0] + [r0 + side * u for u in offs]
            g = j = 0.0
            for a, b in zip(pts[:-1], pts[1:]):
                gi, _ = quad(
                    lambda y: abs(y - r0) * analytic.resolvent(params, lam, x, y),
                    min(a, b), max(a, b), limit=200,
                )
                ji, _ = quad(
                    lambda y: analytic.resolvent(params, lam, x, y),
                    min(a, b), max(a, b), limit=200,
                )
                g += gi
                j += ji
            worst = max(worst, abs(g / ct.lg - 1.0), abs(j / ct.lj - 1.0))
    checks.append(CheckResult("crossing_transform_resolvent", worst, 1e-8))

    # stationary crossing-magnitude transform matches its small-lag expansion
    # amp t - amp (|b+| + b-) (8 / (3 sqrt(2 pi) (s+ + s-))) t^(3/2)
    sp, sm = params.sigma_plus, params.sigma_minus
    bsum = abs(params.b_plus) + params.b_minus
    t = 1e-4 * (min(sp, sm) / max(abs(params.b_plus), params.b_minus)) ** 2
    inv = analytic.laplace_invert(
        lambda lam: analytic.stationary_laplace_averages(params, lam).elg, t
    )
    expansion = amp * t - amp * bsum * (8.0 / (3 * math.sqrt(2 * math.pi) * (sp + sm))) * t**1.5
    checks.append(
        CheckResult("elg_small_lag_expansion", abs(inv - expansion) / (amp * t), 3e-4)
    )

    return checks

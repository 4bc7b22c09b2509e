import io
import math

import numpy as np
import pytest

from tdiff import analytic
from tdiff.model import ModelParams
from tdiff.simulate import (
    PathSample,
    SamplingScheme,
    read_path_csv,
    simulate_path,
    substream,
    write_path_csv,
)


class TestSamplingScheme:
    def test_horizon(self):
        assert SamplingScheme(h=0.5, n_obs=100).horizon == 50.0

    def test_validation(self):
        with pytest.raises(ValueError):
            SamplingScheme(h=0.0, n_obs=10)
        with pytest.raises(ValueError):
            SamplingScheme(h=1.0, n_obs=0)
        with pytest.raises(ValueError):
            SamplingScheme(h=1.0, n_obs=10, substeps=0)


class TestSubstream:
    def test_same_key_same_stream(self):
        a = substream(42, 1, 2).standard_normal(8)
        b = substream(42, 1, 2).standard_normal(8)
        assert np.array_equal(a, b)

    def test_different_keys_differ(self):
        a = substream(42, 1, 2).standard_normal(8)
        b = substream(42, 1, 3).standard_normal(8)
        c = substream(43, 1, 2).standard_normal(8)
        assert not np.array_equal(a, b) and not np.array_equal(a, c)


class TestSimulatePath:
    def test_deterministic(self, table1):
        scheme = SamplingScheme(h=1.0, n_obs=500, substeps=4)
        a = simulate_path(table1, 0.0, scheme, 7, key=(3,))
        b = simulate_path(table1, 0.0, scheme, 7, key=(3,))
        assert np.array_equal(a.values, b.values)

    def test_substeps_change_values_not_shape(self, table1):
        fine = simulate_path(table1, 0.0, SamplingScheme(1.0, 100, 64), 7)
        coarse = simulate_path(table1, 0.0, SamplingScheme(1.0, 100, 1), 7)
        assert len(fine.values) == len(coarse.values) == 101
        assert not np.array_equal(fine.values[1:], coarse.values[1:])

    def test_pure_brownian_increments(self):
        # zero drift, equal unit volatilities: a standard Gaussian walk
        p = ModelParams(0.0, 0.0, 1.0, 1.0)
        path = simulate_path(p, 0.0, SamplingScheme(1.0, 10_000, 1), 99)
        incr = np.diff(path.values)
        se = math.sqrt(2.0 / len(incr))  # var of sample variance of N(0,1)
        assert abs(incr.var(ddof=1) - 1.0) < 3 * se
        assert abs(incr.mean()) < 3 / math.sqrt(len(incr))

    @staticmethod
    def _one_step_draws(substeps, n, seed):
        p = ModelParams(0.0, 0.0, 2.0, 1.0)
        scheme = SamplingScheme(h=1.0, n_obs=1, substeps=substeps)
        draws = np.empty(n)
        for rep in range(n):
            draws[rep] = simulate_path(p, 0.0, scheme, seed, key=(rep,)).values[1]
        return draws

    def test_one_step_marginal_matches_skew_density(self):
        # driftless oscillating process from the threshold: the one-step law
        # has a closed-form skew density.  Euler puts an O(sqrt(dt)) weak
        # bias on the side probabilities (0.348 vs 1/3 at 64 substeps), so
        # the distributional fit is tested at a discretization fine enough
        # for the sample size, with a separate monotone-convergence check.
        n = 5_000
        draws = self._one_step_draws(1024, n, 31)
        xs = np.sort(draws)
        # CDF of the skew density from the origin: piecewise scaled normals
        from scipy.stats import norm
        beta = (1.0 - 2.0) / (1.0 + 2.0)
        u = np.where(xs >= 0, xs / 2.0, xs / 1.0)
        cdf = np.where(
            u >= 0,
            (1 - beta) / 2 + (1 + beta) * (norm.cdf(u) - 0.5),
            (1 - beta) * norm.cdf(u),
        )
        ks = np.max(np.abs(cdf - np.arange(1, n + 1) / n))
        ks = max(ks, np.max(np.abs(cdf - np.arange(0, n) / n)))
        from scipy.special import kolmogorov
        assert kolmogorov(math.sqrt(n) * ks) > 0.01

    def test_one_step_side_probability_converges(self):
        # the exact side probability is sigma-/(sigma+ + sigma-) = 1/3; the
        # Euler bias must shrink as the substep count grows
        biases = []
        for substeps in (16, 64, 256):
            draws = self._one_step_draws(substeps, 20_000, 31)
            biases.append(np.mean(draws >= 0) - 1.0 / 3.0)
        assert biases[0] > biases[1] > biases[2] > -0.005

    def test_ergodic_occupation_fraction(self, table1):
        from tdiff.model import sample_stationary
        rng = substream(17, 0)
        x0 = sample_stationary(table1, rng)
        path = simulate_path(table1, x0, SamplingScheme(1.0, 10**6, 8), 17, key=(1,))
        frac = np.mean(path.values[:-1] >= 0)
        assert abs(frac - 2.0 / 3.0) < 0.01

    def test_threshold_shift_equivariance(self):
        p0 = ModelParams(-0.5, 0.5, 1.0, 1.0, threshold=0.0)
        p2 = ModelParams(-0.5, 0.5, 1.0, 1.0, threshold=2.0)
        scheme = SamplingScheme(1.0, 200, 4)
        a = simulate_path(p0, 0.3, scheme, 55)
        b = simulate_path(p2, 2.3, scheme, 55)
        assert np.allclose(a.values + 2.0, b.values, atol=1e-12)

    def test_non_ergodic_params_simulate_fine(self):
        p = ModelParams(0.2, -0.1, 1.0, 1.0)  # repelled from the threshold
        path = simulate_path(p, 0.0, SamplingScheme(0.1, 50, 2), 1)
        assert np.all(np.isfinite(path.values))


class TestPathSample:
    def test_times(self):
        p = PathSample(t0=1.0, h=0.5, values=np.array([0.0, 1.0, 2.0]), seed=0)
        assert np.array_equal(p.times, [1.0, 1.5, 2.0])
        assert p.n_obs == 2

    def test_validation(self):
        with pytest.raises(ValueError):
            PathSample(t0=0.0, h=0.0, values=np.array([0.0, 1.0]), seed=0)
        with pytest.raises(ValueError):
            PathSample(t0=0.0, h=1.0, values=np.array([0.0]), seed=0)


class TestCsvRoundtrip:
    def test_exact_roundtrip(self, table1):
        path = simulate_path(table1, 0.0, SamplingScheme(1.0, 100, 2), 42)
        buf = io.StringIO()
        write_path_csv(path, buf)
        buf.seek(0)
        back = read_path_csv(buf)
        assert np.array_equal(back.values, path.values)  # %.17g is lossless
        assert back.h == path.h and back.t0 == path.t0

    def test_header_line_count(self, table1):
        path = simulate_path(table1, 1.0, SamplingScheme(1.0, 100, 2), 42)
        buf = io.StringIO()
        write_path_csv(path, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "t,x"
        assert len(lines) == 102  # header + N + 1 samples

    def test_rejects_bad_header(self):
        with pytest.raises(ValueError, match="header"):
            read_path_csv(io.StringIO("time,value\n0,1\n1,2\n"))

    def test_rejects_non_numeric(self):
        with pytest.raises(ValueError, match="non-numeric"):
            read_path_csv(io.StringIO("t,x\n0,1\n1,abc\n"))

    def test_rejects_uneven_grid(self):
        with pytest.raises(ValueError, match="equally spaced"):
            read_path_csv(io.StringIO("t,x\n0,1\n1,2\n3,4\n"))

    def test_skips_comments_and_blanks(self):
        back = read_path_csv(io.StringIO("t,x\n0,1\n\n# note\n1,2\n"))
        assert np.array_equal(back.values, [1.0, 2.0])

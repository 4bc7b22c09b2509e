import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from tdiff.model import ModelParams
from tdiff.simulate import PathSample, SamplingScheme, simulate_path
from tdiff.stats import (
    discrete_covariation,
    local_time_estimators,
    merge_stats,
    stats_from_values,
    sufficient_stats,
    tanaka_residuals,
)

value_arrays = hnp.arrays(
    np.float64,
    st.integers(min_value=2, max_value=60),
    elements=st.floats(min_value=-50, max_value=50, allow_nan=False, width=32),
)


class TestSufficientStats:
    def test_hand_path(self):
        s = stats_from_values(np.array([1.0, -2.0]), h=1.0)
        assert s.q_plus == 1.0 and s.q_minus == 0.0
        assert s.m_plus == -3.0 and s.m_minus == 0.0
        assert s.q1_plus == 1.0 and s.q1_minus == 0.0
        assert s.lt_sum == 2.0 and s.local_time == 4.0
        assert s.crossings == 1 and s.cross_prod_sum == -2.0
        assert s.x_first == 1.0 and s.x_last == -2.0 and s.n_obs == 1

    def test_constant_positive_path(self):
        s = stats_from_values(np.full(11, 3.0), h=0.5)
        assert s.q_plus == 0.5 * 10 and s.q_minus == 0.0
        assert s.m_plus == 0.0 and s.lt_sum == 0.0 and s.crossings == 0

    def test_zero_sample_owned_by_plus_side(self):
        s = stats_from_values(np.array([0.0, -1.0, 0.0]), h=1.0)
        # left values 0 and -1: one plus, one minus; products are 0 and 0
        assert s.q_plus == 1.0 and s.q_minus == 1.0
        assert s.crossings == 0  # strict product rule: zeros never cross

    def test_threshold_shift(self):
        vals = np.array([1.0, -2.0, 0.5, 3.0])
        a = stats_from_values(vals, h=1.0, threshold=0.0)
        b = stats_from_values(vals + 10.0, h=1.0, threshold=10.0)
        for field in ("q_plus", "q_minus", "m_plus", "m_minus", "lt_sum",
                      "crossings", "cross_prod_sum", "q1_plus", "q1_minus"):
            assert getattr(a, field) == pytest.approx(getattr(b, field), abs=1e-12)

    def test_needs_two_observations(self):
        with pytest.raises(ValueError):
            stats_from_values(np.array([1.0]), h=1.0)

    @given(value_arrays, st.sampled_from([0.25, 0.5, 1.0, 2.0]))
    @settings(max_examples=200, deadline=None)
    def test_occupation_partition_exact(self, vals, h):
        s = stats_from_values(vals, h=h)
        assert s.q_plus + s.q_minus == h * s.n_obs  # dyadic h: bitwise exact

    @given(value_arrays)
    @settings(max_examples=200, deadline=None)
    def test_merge_equals_whole(self, vals):
        if len(vals) < 4:
            return
        h = 1.0
        whole = stats_from_values(vals, h)
        cut = len(vals) // 2
        a = stats_from_values(vals[: cut + 1], h)
        b = stats_from_values(vals[cut:], h)
        merged = merge_stats(a, b)
        for field in ("q_plus", "q_minus", "m_plus", "m_minus", "q1_plus",
                      "q1_minus", "lt_sum", "crossings", "cross_prod_sum",
                      "x_first", "x_last", "n_obs"):
            got, want = getattr(merged, field), getattr(whole, field)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12), field

    def test_merge_rejects_mismatch(self):
        a = stats_from_values(np.array([1.0, 2.0]), h=1.0)
        b = stats_from_values(np.array([3.0, 4.0]), h=1.0)
        with pytest.raises(ValueError, match="boundary"):
            merge_stats(a, b)
        c = stats_from_values(np.array([2.0, 4.0]), h=0.5)
        with pytest.raises(ValueError, match="lag"):
            merge_stats(a, c)


class TestLocalTimeEstimators:
    def test_hand_path(self):
        p = ModelParams(-0.5, 0.5, 1.0, 1.0)
        s = stats_from_values(np.array([1.0, -2.0]), h=1.0)
        est = local_time_estimators(s, p)
        assert est.l == 4.0
        assert est.lbar == pytest.approx(math.sqrt(math.pi / 2), rel=1e-12)
        assert est.lhat == pytest.approx(3 * math.sqrt(math.pi) / math.sqrt(2) * 2,
                                         rel=1e-12)

    def test_no_crossings_all_zero(self):
        p = ModelParams(-0.5, 0.5, 1.0, 1.0)
        s = stats_from_values(np.array([1.0, 2.0, 0.5]), h=1.0)
        est = local_time_estimators(s, p)
        assert est == (0.0, 0.0, 0.0)

    def test_lag_scaling_of_renormalizations(self):
        p = ModelParams(-0.5, 0.5, 2.0, 1.0)
        vals = np.array([1.0, -1.0, 2.0, -0.5])
        e1 = local_time_estimators(stats_from_values(vals, h=1.0), p)
        e4 = local_time_estimators(stats_from_values(vals, h=4.0), p)
        assert e4.l == e1.l  # lag-free
        assert e4.lbar == pytest.approx(2 * e1.lbar, rel=1e-12)  # sqrt(h)
        assert e4.lhat == pytest.approx(e1.lhat / 2, rel=1e-12)  # 1/sqrt(h)


class TestTanakaResiduals:
    def test_hand_path(self):
        path = PathSample(t0=0.0, h=1.0, values=np.array([1.0, -2.0]), seed=0)
        res = tanaka_residuals(path)
        assert res.res_plus == 0.0 and res.res_minus == 0.0
        assert not res.has_zero_sample

    def test_adversarial_zero_sample(self):
        path = PathSample(t0=0.0, h=1.0, values=np.array([0.0, -1.0]), seed=0)
        res = tanaka_residuals(path)
        # the zero start is owned by the plus side but carries no crossing,
        # so the minus-side identity picks up the full jump
        assert res.has_zero_sample
        assert res.res_plus == pytest.approx(1.0)
        assert res.res_minus == pytest.approx(1.0)

    def test_simulated_paths_exact(self, table1):
        scheme = SamplingScheme(h=1.0, n_obs=2000, substeps=2)
        for rep in range(100):
            path = simulate_path(table1, 0.05, scheme, 13, key=(rep,))
            res = tanaka_residuals(path, table1.threshold)
            assert not res.has_zero_sample
            bound = 1e-12 * (1.0 + np.max(np.abs(path.values)))
            assert abs(res.res_plus) < bound and abs(res.res_minus) < bound

    @given(value_arrays)
    @settings(max_examples=200, deadline=None)
    def test_identity_on_zero_free_paths(self, vals):
        if np.any(vals == 0.0):
            return
        path = PathSample(t0=0.0, h=1.0, values=vals, seed=0)
        res = tanaka_residuals(path)
        bound = 1e-10 * (1.0 + float(np.max(np.abs(vals))))
        assert abs(res.res_plus) < bound and abs(res.res_minus) < bound


class TestDiscreteCovariation:
    def test_squared_increments_nonnegative(self):
        vals = np.array([1.0, -3.0, 2.0, 2.0])
        assert discrete_covariation(vals, vals) >= 0

    def test_constant_second_sequence(self):
        assert discrete_covariation([1.0, 2.0, -1.0], [5.0, 5.0, 5.0]) == 0.0

    @given(value_arrays)
    @settings(max_examples=200, deadline=None)
    def test_positive_negative_parts_give_cross_product_sum(self, vals):
        # per step: (X+_{k+1} - X+_k)(X-_{k+1} - X-_k) = X_k X_{k+1} 1{cross}
        # whenever no sample is exactly zero
        if np.any(vals == 0.0):
            return
        pos = np.maximum(vals, 0.0)
        neg = np.maximum(-vals, 0.0)
        cov = discrete_covariation(pos, neg)
        s = stats_from_values(vals, h=1.0)
        assert cov == pytest.approx(s.cross_prod_sum, rel=1e-12, abs=1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            discrete_covariation([1.0], [2.0])
        with pytest.raises(ValueError):
            discrete_covariation([1.0, 2.0], [1.0, 2.0, 3.0])


def test_sufficient_stats_wraps_values(table1):
    path = simulate_path(table1, 0.0, SamplingScheme(1.0, 100, 2), 3)
    a = sufficient_stats(path, table1.threshold)
    b = stats_from_values(path.values, path.h, table1.threshold)
    assert a == b

"""Tests for the dip statistic, dip test and UniDip interval search"""

import numpy as np
import pytest

from src.posterior_validation.models import dip_statistic, dip_test, null_dip_distribution, unidip_intervals


def test_two_point_dip():
    assert dip_statistic([0.0, 1.0]) == pytest.approx(0.25)


def test_constant_sample_has_floor_dip():
    assert dip_statistic(np.zeros(10)) == pytest.approx(1.0 / 20)


@pytest.mark.parametrize('seed', range(50))
def test_dip_within_bounds(seed):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.standard_normal(int(rng.integers(2, 80))))
    dip = dip_statistic(x)
    assert 1.0 / (2 * x.size) - 1e-12 <= dip <= 0.5


@pytest.mark.parametrize('seed', range(50))
def test_dip_unchanged_by_affine_map(seed):
    rng = np.random.default_rng(100 + seed)
    x = np.sort(np.concatenate([rng.normal(0.0, 1.0, 30), rng.normal(rng.uniform(0, 4), 0.5, 30)]))
    scale, shift = rng.uniform(0.1, 10.0), rng.uniform(-5.0, 5.0)
    assert dip_statistic(scale * x + shift) == pytest.approx(dip_statistic(x), abs=1e-9)


def test_unsorted_input_rejected():
    with pytest.raises(ValueError, match='sorted'):
        dip_statistic([1.0, 0.0, 2.0])


def test_too_few_samples_rejected():
    with pytest.raises(ValueError):
        dip_statistic([1.0])


def test_bimodal_sample_is_significant():
    rng = np.random.default_rng(7)
    x = np.sort(np.concatenate([rng.normal(0.0, 0.1, 100), rng.normal(5.0, 0.1, 100)]))
    result = dip_test(x, draws=200, seed=0)
    assert result['p_value'] < 0.05
    assert result['dip'] > dip_statistic(np.sort(rng.normal(0.0, 1.0, 200)))


def test_unimodal_sample_is_not_significant():
    x = np.sort(np.random.default_rng(11).normal(0.0, 1.0, 200))
    assert dip_test(x, draws=200, seed=0)['p_value'] > 0.05


def test_p_value_uses_plus_one_rule():
    result = dip_test(np.sort(np.random.default_rng(5).random(30)), draws=99, seed=3)
    assert result['p_value'] * 100 == pytest.approx(round(result['p_value'] * 100))
    assert 1.0 / 100 <= result['p_value'] <= 1.0


def test_null_distribution_is_cached_and_reproducible():
    a = null_dip_distribution(25, 50, 4)
    b = null_dip_distribution(25, 50, 4)
    assert a is b
    assert np.all(np.diff(a) >= 0)


class TestUniDip:
    def test_unimodal_data_gives_one_interval(self):
        x = np.sort(np.random.default_rng(2).normal(0.0, 1.0, 300))
        assert len(unidip_intervals(x, alpha=0.05, draws=200, seed=0)) == 1

    def test_two_separated_groups_give_two_intervals(self):
        rng = np.random.default_rng(8)
        x = np.sort(np.concatenate([rng.normal(0.0, 0.1, 150), rng.normal(5.0, 0.1, 150)]))
        intervals = unidip_intervals(x, alpha=0.05, draws=200, seed=0)
        assert len(intervals) == 2
        (a_lo, a_hi), (b_lo, b_hi) = intervals
        assert a_hi < 150 <= b_lo

    def test_tiny_input_is_one_interval(self):
        assert unidip_intervals([0.0, 1.0]) == [(0, 1)]
        assert unidip_intervals([]) == []

"""Tests for the complex roots benchmark"""

import cmath
import math
import os

import numpy as np
import pytest
from scipy.stats import kstest

from src.posterior_validation import PosteriorValidator, load_run_config
from src.posterior_validation.core import load_dataset
from src.posterior_validation.models import DbscanParams, ModeDetector
from src.posterior_validation.toybench import (
    SyntheticPosteriorConfig,
    ToyInstance,
    build_toy_cases,
    enumerate_roots,
    forward_power,
    run_toy_benchmark,
    sample_instances,
    synthesize_posterior,
    toy_run_config,
)


class TestRoots:
    def test_cube_roots_of_eight(self):
        roots = enumerate_roots(3, 8)
        expected = [2, complex(-1, math.sqrt(3)), complex(-1, -math.sqrt(3))]
        for got, want in zip(roots, expected):
            assert abs(got - want) < 1e-12

    def test_square_roots_of_one(self):
        roots = enumerate_roots(2, 1)
        assert abs(roots[0] - 1) < 1e-12
        assert abs(roots[1] + 1) < 1e-12

    def test_rejects_degenerate_inputs(self):
        with pytest.raises(ValueError):
            enumerate_roots(2, 0)
        with pytest.raises(ValueError):
            enumerate_roots(0, 1)

    def test_forward_inverts_roots(self):
        w = cmath.rect(1.1, 2.5)
        for n in (1, 2, 3):
            for root in enumerate_roots(n, w):
                assert abs(forward_power(root, n) - w) < 1e-12
        assert forward_power(1j, 2) == -1


class TestSampleInstances:
    def test_deterministic(self):
        assert sample_instances(20, 5) == sample_instances(20, 5)

    def test_instances_in_annulus(self):
        for inst in sample_instances(200, 3):
            assert inst.n in (1, 2, 3)
            assert 0.8 - 1e-12 <= abs(inst.z) <= 1.2 + 1e-12
            assert 0.8 ** inst.n - 1e-12 <= inst.R <= 1.2 ** inst.n + 1e-12
            assert abs(inst.roots[inst.reference_index] - inst.z) < 1e-9

    def test_orders_uniform_and_radius_area_uniform(self):
        instances = sample_instances(3000, 11)
        share = sum(inst.n == 1 for inst in instances) / len(instances)
        assert share == pytest.approx(1 / 3, abs=0.03)
        radii = np.array([abs(inst.z) for inst in instances])
        cdf = lambda r: np.clip((r ** 2 - 0.64) / (1.44 - 0.64), 0.0, 1.0)
        assert kstest(radii, cdf).pvalue > 0.01

    def test_count_must_be_positive(self):
        with pytest.raises(ValueError):
            sample_instances(0)


def _instance(n, w):
    roots = tuple(enumerate_roots(n, w))
    return ToyInstance(n=n, w=complex(w), roots=roots, z=roots[0], reference_index=0)


class TestSynthesizePosterior:
    def test_mean_point_sits_at_origin(self):
        samples = synthesize_posterior(_instance(2, 1), SyntheticPosteriorConfig('mean_point'), rng_seed=0)
        n = samples.points.shape[0]
        assert np.all(np.abs(samples.points.mean(axis=0)) < 3 * 0.05 / math.sqrt(n))

    def test_multimodal_has_one_cluster_per_root(self):
        inst = _instance(3, 1)
        samples = synthesize_posterior(inst, SyntheticPosteriorConfig('multimodal'), rng_seed=0)
        modes, _ = ModeDetector(dbscan_params=DbscanParams(eps=0.2, min_samples=20)).detect(samples)
        assert len(modes) == 3
        centers = sorted(m.center[1] for m in modes)
        assert centers == pytest.approx([-math.sqrt(3) / 2, 0.0, math.sqrt(3) / 2], abs=0.02)

    def test_mass_skew_favors_first_root(self):
        inst = _instance(2, 1)
        samples = synthesize_posterior(inst, SyntheticPosteriorConfig('multimodal', mode_mass_skew=3.0), rng_seed=1)
        near_first = np.sum(samples.points[:, 0] > 0)
        assert near_first > 0.7 * samples.points.shape[0]

    @pytest.mark.parametrize('kwargs', [
        {'predictor': 'mixture'},
        {'samples_per_posterior': 0},
        {'component_spread': 0.0},
        {'mode_mass_skew': -1.0},
    ])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            SyntheticPosteriorConfig(**kwargs)


def test_toy_cases_carry_generating_root():
    instances = sample_instances(5, 2)
    cases = build_toy_cases(instances, SyntheticPosteriorConfig(samples_per_posterior=64), seed=2)
    assert [c.id for c in cases] == [f'toy-{i:05d}' for i in range(5)]
    for case, inst in zip(cases, instances):
        assert len(case.reference.modes) == inst.n
        assert case.observation.params == {'n': inst.n, 'reference_index': inst.reference_index}


def test_writes_reproducible_artifacts(tmp_path):
    reports = run_toy_benchmark(num_cases=12, seed=4, out_dir=str(tmp_path))
    assert set(reports) == {'multimodal', 'mean_point'}
    for predictor in reports:
        for name in (f'cases_{predictor}.jsonl', f'config_{predictor}.json', f'report_{predictor}.json'):
            assert os.path.exists(tmp_path / name)

    config = load_run_config(str(tmp_path / 'config_multimodal.json'))
    replay = PosteriorValidator(config).evaluate(load_dataset(config.dataset))
    original = reports['multimodal']
    for name in ('recall', 'precision', 'ap'):
        assert replay.value(name) == pytest.approx(original.value(name), abs=1e-12)


def test_resimulation_keeps_true_roots():
    config = toy_run_config(resimulation=True)
    cases = build_toy_cases(sample_instances(10, 6), SyntheticPosteriorConfig(), seed=6)
    report = PosteriorValidator(config).evaluate(cases)
    assert report.value('recall') == pytest.approx(1.0)


@pytest.mark.slow
class TestToyContrast:
    @pytest.fixture(scope='class')
    def reports(self):
        return run_toy_benchmark(num_cases=2000, seed=0)

    def test_multimodal_recovers_every_root(self, reports):
        assert reports['multimodal'].value('recall') >= 0.98
        assert reports['multimodal'].value('ap') >= 0.98

    def test_mean_point_counts(self, reports):
        assert reports['mean_point'].value('recall') == pytest.approx(1 / 6, abs=0.02)
        assert reports['mean_point'].value('precision') == pytest.approx(1 / 3, abs=0.03)

    def test_conventional_error_hides_the_gap(self, reports):
        for n in (2, 3):
            mean_point = reports['mean_point'].value(f'point_estimate_error[n={n}]')
            multimodal = reports['multimodal'].value(f'point_estimate_error[n={n}]')
            assert mean_point <= multimodal + 0.05
            assert reports['multimodal'].value(f'recall[n={n}]') > reports['mean_point'].value(f'recall[n={n}]')

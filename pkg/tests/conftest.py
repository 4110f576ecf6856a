"""Shared fixtures for the posterior validation test suite"""

import numpy as np
import pytest

from src.posterior_validation.core import (
    Fingerprint,
    Mode,
    ModeSet,
    Observation,
    PosteriorSamples,
    Reference,
    ValidationCase,
)


def make_fingerprint(**overrides) -> Fingerprint:
    values = {
        'p1_reference_granularity': 'modes_exhaustive',
        'p2_resimulation': 'unavailable',
        'p3_confidence_score': 'available',
        'p4_prediction_density': 'unavailable',
        'p5_natural_discretization': 'unavailable',
        'p6_univariate': 'no',
        'p7_accurate_uncertainty': 'no',
    }
    values.update(overrides)
    return Fingerprint(**values)


def two_blob_samples(rng, centers=((0.0, 0.0), (1.0, 1.0)), per_blob=200, spread=0.03) -> PosteriorSamples:
    parts = [np.asarray(c) + spread * rng.standard_normal((per_blob, len(c))) for c in centers]
    return PosteriorSamples(np.vstack(parts))


def modes_case(case_id, samples, ref_centers, granularity='modes_exhaustive', observation=None) -> ValidationCase:
    refs = ModeSet(tuple(Mode(center=c, relative_mass=1.0 / len(ref_centers), label=f'ref-{i}')
                         for i, c in enumerate(ref_centers)))
    return ValidationCase(
        id=case_id,
        prediction=samples,
        reference=Reference(granularity=granularity, modes=refs),
        observation=observation,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fingerprint():
    return make_fingerprint()


@pytest.fixture
def two_blob_case(rng):
    samples = two_blob_samples(rng)
    return modes_case('blobs', samples, [(0.0, 0.0), (1.0, 1.0)],
                      observation=Observation(y=[0.0]))

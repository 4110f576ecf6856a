"""Tests for the core data model types"""

import numpy as np
import pytest

from src.posterior_validation.core import (
    CaseFileError,
    Fingerprint,
    FingerprintError,
    Mode,
    ModeSet,
    PosteriorSamples,
    Reference,
    ReferenceGranularity,
    ValidationCase,
    all_fingerprints,
)
from tests.conftest import make_fingerprint


class TestPosteriorSamples:
    def test_vector_becomes_column(self):
        samples = PosteriorSamples([0.1, 0.2, 0.3])
        assert samples.dim == 1
        assert len(samples) == 3

    def test_arrays_are_read_only(self):
        samples = PosteriorSamples([[0.0, 1.0], [1.0, 2.0]])
        with pytest.raises(ValueError):
            samples.points[0, 0] = 5.0

    def test_copy_on_construction(self):
        raw = np.zeros((4, 2))
        samples = PosteriorSamples(raw)
        raw[0, 0] = 9.0
        assert samples.points[0, 0] == 0.0

    @pytest.mark.parametrize('points', [[], [[np.nan, 0.0]], [[np.inf]]])
    def test_rejects_empty_or_non_finite(self, points):
        with pytest.raises(ValueError):
            PosteriorSamples(points)

    def test_weights_must_sum_to_one(self):
        PosteriorSamples([[0.0], [1.0]], weights=[0.25, 0.75])
        with pytest.raises(ValueError, match='sum'):
            PosteriorSamples([[0.0], [1.0]], weights=[0.5, 0.6])

    def test_weights_must_be_positive(self):
        with pytest.raises(ValueError, match='positive'):
            PosteriorSamples([[0.0], [1.0]], weights=[0.0, 1.0])


class TestMode:
    def test_mass_and_confidence_ranges(self):
        with pytest.raises(ValueError):
            Mode(center=[0.0], relative_mass=1.5)
        with pytest.raises(ValueError):
            Mode(center=[0.0], confidence=-0.1)

    def test_covariance_must_be_symmetric_psd(self):
        Mode(center=[0.0, 0.0], covariance=[[1.0, 0.2], [0.2, 1.0]])
        with pytest.raises(ValueError, match='symmetric'):
            Mode(center=[0.0, 0.0], covariance=[[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(ValueError, match='eigenvalue'):
            Mode(center=[0.0, 0.0], covariance=[[1.0, 0.0], [0.0, -1.0]])

    def test_covariance_shape_checked(self):
        with pytest.raises(ValueError, match='shape'):
            Mode(center=[0.0, 0.0], covariance=[[1.0]])

    def test_name_falls_back_to_center(self):
        assert Mode(center=[1.0], label='a').name == 'a'
        assert Mode(center=[1.0]).name.startswith('mode@')


class TestModeSet:
    def test_dimension_must_agree(self):
        with pytest.raises(ValueError):
            ModeSet((Mode(center=[0.0]), Mode(center=[0.0, 1.0])))

    def test_most_massive_first_wins_ties(self):
        modes = ModeSet((Mode(center=[0.0], relative_mass=0.4, label='a'),
                         Mode(center=[1.0], relative_mass=0.4, label='b'),
                         Mode(center=[2.0], relative_mass=0.2, label='c')))
        assert modes.most_massive().label == 'a'
        assert ModeSet().most_massive() is None

    def test_confidences_only_when_all_scored(self):
        scored = ModeSet((Mode(center=[0.0], confidence=0.9), Mode(center=[1.0], confidence=0.3)))
        np.testing.assert_allclose(scored.confidences(), [0.9, 0.3])
        partial = ModeSet((Mode(center=[0.0], confidence=0.9), Mode(center=[1.0])))
        assert partial.confidences() is None


class TestReference:
    def test_posterior_requires_samples(self):
        with pytest.raises(ValueError, match='requires reference samples'):
            Reference(granularity='posterior_unlabeled')

    def test_modes_granularity_requires_modes(self):
        with pytest.raises(ValueError, match='at least one mode'):
            Reference(granularity='modes_exhaustive')

    def test_samples_for_label(self):
        ref = Reference(granularity='posterior_labeled',
                        samples=PosteriorSamples([[0.0], [0.1], [5.0]]),
                        sample_labels=('a', 'a', 'b'))
        np.testing.assert_allclose(ref.samples_for_label('a').ravel(), [0.0, 0.1])
        assert ref.granularity is ReferenceGranularity.POSTERIOR_LABELED
        assert ref.granularity.is_posterior

    def test_labels_length_checked(self):
        with pytest.raises(ValueError, match='one entry per'):
            Reference(granularity='posterior_labeled', samples=PosteriorSamples([[0.0], [1.0]]),
                      sample_labels=('a',))


class TestValidationCase:
    def test_dimension_mismatch(self):
        ref = Reference(granularity='modes_exhaustive', modes=ModeSet((Mode(center=[0.0, 0.0]),)))
        with pytest.raises(CaseFileError, match='dimension'):
            ValidationCase(id='x', prediction=PosteriorSamples([[0.0]]), reference=ref)

    def test_log_density_length_matches_reference_samples(self):
        ref = Reference(granularity='posterior_unlabeled', samples=PosteriorSamples([[0.0], [1.0]]))
        with pytest.raises(CaseFileError, match='log-density'):
            ValidationCase(id='x', prediction=PosteriorSamples([[0.0]]), reference=ref,
                           prediction_log_density=[-1.0])

    def test_periodic_index_in_range(self):
        ref = Reference(granularity='modes_exhaustive', modes=ModeSet((Mode(center=[0.0]),)))
        with pytest.raises(CaseFileError, match='periodic'):
            ValidationCase(id='x', prediction=PosteriorSamples([[0.0]]), reference=ref, periodic={3: 360.0})


class TestFingerprint:
    def test_there_are_256_fingerprints(self):
        fingerprints = all_fingerprints()
        assert len(fingerprints) == 256
        assert len({tuple(fp.to_dict().items()) for fp in fingerprints}) == 256

    def test_invalid_value_names_field(self):
        with pytest.raises(FingerprintError) as info:
            make_fingerprint(p3_confidence_score='sometimes')
        assert info.value.field == 'p3_confidence_score'

    def test_from_dict_rejects_unknown_and_missing(self):
        data = make_fingerprint().to_dict()
        with pytest.raises(FingerprintError, match='unknown'):
            Fingerprint.from_dict({**data, 'p8_extra': 'yes'})
        del data['p6_univariate']
        with pytest.raises(FingerprintError) as info:
            Fingerprint.from_dict(data)
        assert info.value.field == 'p6_univariate'

    def test_boolean_views(self):
        fp = make_fingerprint(p2_resimulation='available', p6_univariate='yes')
        assert fp.resimulation and fp.univariate and fp.confidence_score
        assert not fp.prediction_density and not fp.accurate_uncertainty

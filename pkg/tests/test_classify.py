"""
Penalized emotion assignment
"""
import numpy as np
import pytest
from pydantic import ValidationError

from core.errors import AllZeroAfterPenalty, InvalidPenaltyConfig
from core.types import Interval
from tools.classify import PenaltyConfig, assign_emotion, classify_intervals, penalize, penalized_scores

ABC = ("neutral", "A", "B")
NONE = PenaltyConfig(mode="none")


def _constant_track(track_factory, row, n_frames=10):
    emo = np.tile(np.asarray(row, dtype=float), (n_frames, 1))
    return track_factory(np.zeros(n_frames), emo, labels=ABC)


def test_inverse_prior_example():
    cfg = PenaltyConfig(epsilon=0.0)
    assert penalize([0.5, 0.5], [0.8, 0.2], cfg) == pytest.approx([0.2, 0.8], abs=1e-12)


def test_uniform_priors_leave_distribution_unchanged():
    rng = np.random.default_rng(0)
    for _ in range(20):
        dist = rng.dirichlet(np.ones(5))
        out = penalize(dist, np.full(5, 0.2), PenaltyConfig())
        assert np.allclose(out, dist, atol=1e-9)


def test_mode_none_is_identity_copy():
    dist = np.array([0.3, 0.7])
    out = penalize(dist, [0.9, 0.1], NONE)
    assert out.tolist() == dist.tolist()
    assert out is not dist


def test_custom_weights():
    cfg = PenaltyConfig(mode="custom", weights=(0.0, 1.0, 3.0))
    assert penalize([0.4, 0.3, 0.3], [1, 0, 0], cfg) == pytest.approx([0.0, 0.25, 0.75])


def test_penalty_config_errors():
    with pytest.raises(InvalidPenaltyConfig):
        PenaltyConfig(mode="custom")
    with pytest.raises(InvalidPenaltyConfig):
        PenaltyConfig(mode="custom", weights=(1.0, -1.0))
    with pytest.raises(InvalidPenaltyConfig):
        penalize([0.5, 0.5], [1.0, 0.0], PenaltyConfig(epsilon=0.0))
    with pytest.raises(InvalidPenaltyConfig):
        penalize([0.5, 0.5], [0.3, 0.3, 0.4], PenaltyConfig())
    with pytest.raises(InvalidPenaltyConfig):
        penalize([0.5, 0.5], [0.5, 0.5], PenaltyConfig(mode="custom", weights=(1.0, 1.0, 1.0)))
    with pytest.raises(ValidationError):
        PenaltyConfig(epsilon=-1.0)
    with pytest.raises(ValidationError):
        PenaltyConfig(mode="softmax")


def test_all_zero_after_penalty():
    cfg = PenaltyConfig(mode="custom", weights=(1.0, 0.0))
    with pytest.raises(AllZeroAfterPenalty):
        penalize([0.0, 1.0], [0.5, 0.5], cfg)


def test_assign_emotion_examples(track_factory):
    interval = Interval(onset=2, apex=4, offset=6)

    result = assign_emotion(_constant_track(track_factory, [0.1, 0.6, 0.3]), interval, [1 / 3] * 3, NONE)
    assert result.label == "A"
    assert result.confidence == pytest.approx(0.6 / 0.9)
    assert result.interval == interval

    tie = assign_emotion(_constant_track(track_factory, [0.0, 0.5, 0.5]), interval, [1 / 3] * 3, NONE)
    assert tie.label == "A"

    minority = assign_emotion(
        _constant_track(track_factory, [0.1, 0.6, 0.3]),
        interval,
        [0.34, 0.56, 0.10],
        PenaltyConfig(epsilon=0.0),
    )
    assert minority.label == "B"
    assert minority.confidence == pytest.approx(3.0 / (3.0 + 0.6 / 0.56))


def test_neutral_never_emitted(track_factory):
    track = _constant_track(track_factory, [0.98, 0.01, 0.01])
    result = assign_emotion(track, Interval(onset=0, apex=0, offset=9), [0.9, 0.05, 0.05], NONE)
    assert result.label == "A"


def test_zero_emotion_mass_gives_first_emotion(track_factory):
    track = _constant_track(track_factory, [1.0, 0.0, 0.0])
    result = assign_emotion(track, Interval(onset=0, apex=0, offset=9), [1 / 3] * 3, PenaltyConfig())
    assert (result.label, result.confidence) == ("A", 0.0)


def test_label_is_scale_invariant_in_priors(track_factory):
    rng = np.random.default_rng(7)
    emo = rng.dirichlet(np.ones(3), size=12)
    track = track_factory(np.zeros(12), emo, labels=ABC)
    interval = Interval(onset=3, apex=5, offset=9)
    priors = np.array([0.5, 0.3, 0.2])
    cfg = PenaltyConfig(epsilon=0.0)
    base = assign_emotion(track, interval, priors, cfg)
    scaled = assign_emotion(track, interval, priors * 7.5, cfg)
    assert scaled.label == base.label
    assert scaled.confidence == pytest.approx(base.confidence)


def test_classify_intervals_and_curve_scores(track_factory):
    emo = np.tile([0.2, 0.5, 0.3], (8, 1))
    emo[5:] = [0.2, 0.1, 0.7]
    track = track_factory(np.zeros(8), emo, labels=ABC)
    intervals = [Interval(onset=0, apex=1, offset=3), Interval(onset=5, apex=6, offset=7)]
    labels = [item.label for item in classify_intervals(track, intervals, [1 / 3] * 3, NONE)]
    assert labels == ["A", "B"]

    scores = penalized_scores(track, [0.5, 0.25, 0.25], PenaltyConfig(epsilon=0.0))
    assert scores.shape == (8, 3)
    assert np.allclose(scores.sum(axis=1), 1.0)
    assert np.allclose(penalized_scores(track, [0.5, 0.25, 0.25], NONE), emo)

"""
Domain types and file formats
"""
import json

import numpy as np
import pytest
from pydantic import ValidationError

from core.errors import (
    DuplicateEvent,
    DuplicateVideoId,
    InvalidDecoderConfig,
    InvalidDocument,
    InvalidInterval,
    InvalidLabels,
    InvalidManifest,
    MalformedRow,
    MissingFile,
    NonContiguousFrames,
    ProbabilityOutOfRange,
    RowSumOutOfTolerance,
    UnknownLabel,
)
from core.io import (
    read_annotation,
    read_intervals,
    read_manifest,
    read_track,
    track_to_csv,
    write_annotation,
    write_intervals,
    write_manifest,
    write_track,
)
from core.types import (
    Annotation,
    DecoderConfig,
    GroundTruthEvent,
    Interval,
    LabeledInterval,
    Manifest,
    ManifestEntry,
)


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_read_three_frame_track(tmp_path):
    """A minimal valid CSV becomes a T=3, N=2 track"""
    path = _write(tmp_path / "t.csv", "frame,spot,p_neutral,p_happy\n0,0,1,0\n1,0.5,0.5,0.5\n2,1,0,1\n")
    track = read_track(path)
    assert track.n_frames == 3
    assert track.n_classes == 2
    assert track.spot == (0.0, 0.5, 1.0)
    assert track.labels == ("neutral", "happy")
    assert track.video_id == "t"


def test_row_within_tolerance_is_renormalized(tmp_path):
    path = _write(tmp_path / "t.csv", "frame,spot,p_neutral,p_happy\n0,0.1,0.4999997,0.4999996\n")
    track = read_track(path)
    assert abs(sum(track.emo[0]) - 1.0) < 1e-12


def test_row_sum_far_from_one_is_rejected(tmp_path):
    path = _write(tmp_path / "t.csv", "frame,spot,p_neutral,p_happy\n0,0.1,1,0\n1,0.1,0.5,0.4\n")
    with pytest.raises(RowSumOutOfTolerance) as info:
        read_track(path)
    assert info.value.line == 3
    assert info.value.total == pytest.approx(0.9)


def test_malformed_rows_report_line_numbers(tmp_path):
    path = _write(tmp_path / "t.csv", "frame,spot,p_neutral,p_happy\n0,0.1,1,0\n1,abc,1,0\n")
    with pytest.raises(MalformedRow) as info:
        read_track(path)
    assert info.value.line == 3


def test_bad_header_is_malformed(tmp_path):
    path = _write(tmp_path / "t.csv", "idx,spot,p_neutral,p_happy\n0,0.1,1,0\n")
    with pytest.raises(MalformedRow):
        read_track(path)


def test_duplicate_label_columns_are_rejected(tmp_path):
    path = _write(tmp_path / "t.csv", "frame,spot,p_neutral,p_a,p_a\n0,0.1,1,0,0\n")
    with pytest.raises(MalformedRow) as info:
        read_track(path)
    assert info.value.line == 1
    assert "p_a" in info.value.reason


def test_non_contiguous_frames(tmp_path):
    path = _write(tmp_path / "t.csv", "frame,spot,p_neutral,p_happy\n0,0.1,1,0\n2,0.1,1,0\n")
    with pytest.raises(NonContiguousFrames) as info:
        read_track(path)
    assert (info.value.expected, info.value.found) == (1, 2)


def test_spot_out_of_range(tmp_path):
    path = _write(tmp_path / "t.csv", "frame,spot,p_neutral,p_happy\n0,1.5,1,0\n")
    with pytest.raises(ProbabilityOutOfRange) as info:
        read_track(path)
    assert info.value.line == 2


def test_missing_track_file(tmp_path):
    with pytest.raises(MissingFile):
        read_track(tmp_path / "nope.csv")


def test_track_labels_must_start_with_neutral(tmp_path):
    path = _write(tmp_path / "t.csv", "frame,spot,p_happy,p_neutral\n0,0.1,0,1\n")
    with pytest.raises(InvalidLabels):
        read_track(path)


def test_track_labels_must_match_manifest(tmp_path):
    path = _write(tmp_path / "t.csv", "frame,spot,p_neutral,p_happy\n0,0.1,1,0\n")
    with pytest.raises(UnknownLabel):
        read_track(path, labels=("neutral", "sad"))


def test_track_csv_is_stable_after_one_round(tmp_path, track_factory):
    rng = np.random.default_rng(3)
    emo = rng.dirichlet(np.ones(4), size=25)
    track = track_factory(rng.uniform(size=25), emo)
    first = tmp_path / "a.csv"
    write_track(track, first)
    again = read_track(first, video_id=track.video_id)
    assert track_to_csv(again) == first.read_text(encoding="utf-8")
    assert np.allclose(again.emo_array, track.emo_array, atol=1e-12)


def test_interval_ordering_enforced():
    with pytest.raises(InvalidInterval):
        Interval(onset=5, apex=4, offset=6)
    with pytest.raises(InvalidInterval):
        Interval(onset=-1, apex=0, offset=0)
    assert Interval(onset=3, apex=3, offset=3).length == 1


def test_labeled_interval_rejects_neutral():
    with pytest.raises(UnknownLabel):
        LabeledInterval(interval=Interval(onset=0, apex=0, offset=1), label="neutral", confidence=0.5)
    with pytest.raises(ValidationError):
        LabeledInterval(interval=Interval(onset=0, apex=0, offset=1), label="happy", confidence=1.5)


def test_annotation_round_trip(tmp_path):
    event = GroundTruthEvent(interval=Interval(onset=10, apex=12, offset=20), label="surprise")
    annotation = Annotation(video_id="v1", subject_id="s1", fps=30.0, events=(event,))
    path = write_annotation(annotation, tmp_path / "a.json")
    assert read_annotation(path) == annotation

    empty = Annotation(video_id="v2")
    assert read_annotation(write_annotation(empty, tmp_path / "b.json")).events == ()


def test_annotation_rejects_duplicate_events(tmp_path):
    event = {"onset": 1, "apex": 2, "offset": 3, "label": "surprise"}
    path = _write(tmp_path / "a.json", json.dumps({"video_id": "v", "events": [event, event]}))
    with pytest.raises(DuplicateEvent):
        read_annotation(path)


def test_annotation_unknown_label(tmp_path):
    event = {"onset": 1, "apex": 2, "offset": 3, "label": "joy"}
    path = _write(tmp_path / "a.json", json.dumps({"video_id": "v", "events": [event]}))
    with pytest.raises(UnknownLabel):
        read_annotation(path, labels=("neutral", "surprise"))


def test_annotation_structural_problems(tmp_path):
    path = _write(tmp_path / "a.json", json.dumps({"events": []}))
    with pytest.raises(InvalidDocument):
        read_annotation(path)
    broken = _write(tmp_path / "b.json", "{not json")
    with pytest.raises(MalformedRow):
        read_annotation(broken)


def _manifest(**overrides):
    data = dict(
        labels=("neutral", "a", "b"),
        class_priors=(0.5, 0.3, 0.2),
        entries=(ManifestEntry(video_id="v0", track_path="t.csv", annotation_path="a.json"),),
    )
    data.update(overrides)
    return Manifest(**data)


def test_manifest_priors_round_trip_bit_exactly(tmp_path):
    manifest = _manifest()
    path = write_manifest(manifest, tmp_path / "m.json")
    again = read_manifest(path)
    assert again == manifest
    assert again.class_priors == (0.5, 0.3, 0.2)
    assert '"class_priors": [\n    0.5,\n    0.3,\n    0.2\n  ]' in path.read_text(encoding="utf-8")


def test_manifest_validation():
    entry = ManifestEntry(video_id="v0", track_path="t.csv", annotation_path="a.json")
    with pytest.raises(DuplicateVideoId):
        _manifest(entries=(entry, entry))
    with pytest.raises(InvalidManifest):
        _manifest(class_priors=(0.5, 0.5, 0.5))
    with pytest.raises(InvalidManifest):
        _manifest(class_priors=(0.5, 0.5))


def test_intervals_round_trip(tmp_path):
    items = [
        LabeledInterval(interval=Interval(onset=2, apex=4, offset=7), label="a", confidence=0.625),
        LabeledInterval(interval=Interval(onset=9, apex=9, offset=9), label="b", confidence=0.0),
    ]
    path = write_intervals(items, tmp_path / "i.json", "v0")
    assert read_intervals(path) == [("v0", item) for item in items]
    assert read_intervals(write_intervals([], tmp_path / "e.json", "v0")) == []


def test_decoder_config_thresholds():
    with pytest.raises(InvalidDecoderConfig):
        DecoderConfig(theta_low=0.6, theta_high=0.5)
    with pytest.raises(ValidationError):
        DecoderConfig(unknown=1)
    assert DecoderConfig.for_fps(30.0).k == 15
    assert DecoderConfig.for_fps(200.0).k == 100
    assert DecoderConfig.for_fps(1.0).k == 1
    assert DecoderConfig.for_fps(25.0).k == 13
    assert DecoderConfig.for_fps(5.0).k == 3
    assert DecoderConfig.for_fps(30.0, k=7).k == 7

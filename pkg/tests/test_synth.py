"""
Synthetic track generator
"""
import numpy as np
import pytest

from core.errors import InfeasibleSpec
from core.io import read_annotation, read_manifest, read_track, resolve_entry_path, track_to_csv
from core.types import DecoderConfig
from tools.decode import decode_siss
from tools.metrics import match
from tools.synth import SynthSpec, bump, frame_label_counts, generate, generate_suite


def test_no_events_no_noise():
    track, annotation = generate(SynthSpec(n_events=0, noise_level=0.0, n_frames=50))
    assert not track.spot_array.any()
    assert (track.emo_array[:, 0] == 1.0).all()
    assert not track.emo_array[:, 1:].any()
    assert annotation.events == ()


def test_same_seed_same_bytes():
    spec = SynthSpec(seed=42, distractors=1)
    first, first_ann = generate(spec)
    second, second_ann = generate(spec)
    assert track_to_csv(first) == track_to_csv(second)
    assert first_ann == second_ann
    other, _ = generate(spec.model_copy(update={"seed": 43}))
    assert track_to_csv(other) != track_to_csv(first)


def test_triangle_bump_ramps():
    values = bump("triangle", 10, 15, 20, 0.9)
    assert values.size == 11
    assert values[0] == 0.0 and values[-1] == 0.0
    assert values[5] == 0.9
    assert values[2] == pytest.approx(0.36)


def test_gaussian_bump_peaks_at_apex():
    values = bump("gaussian", 0, 4, 12, 0.8)
    assert int(np.argmax(values)) == 4
    assert values[4] == pytest.approx(0.8)


def test_events_are_valid_and_disjoint():
    spec = SynthSpec(seed=3, n_events=5, n_frames=300, duration_range=(5, 30))
    track, annotation = generate(spec)
    events = annotation.events
    assert len(events) == 5
    for before, after in zip(events, events[1:]):
        assert before.interval.offset + 2 < after.interval.onset
    for event in events:
        assert 5 <= event.interval.length <= 30
        assert event.label != "neutral"
        apex = event.interval.apex
        assert track.emo_array[apex].argmax() == track.labels.index(event.label)
    assert np.allclose(track.emo_array.sum(axis=1), 1.0)


def test_class_mix_restricts_labels():
    spec = SynthSpec(seed=1, n_events=6, class_mix=(0.0, 1.0, 0.0))
    _, annotation = generate(spec)
    assert {event.label for event in annotation.events} == {"positive"}


def test_distractors_are_not_annotated():
    spec = SynthSpec(seed=9, n_events=2, distractors=1)
    track, annotation = generate(spec)
    assert len(annotation.events) == 2
    inside = np.zeros(track.n_frames, dtype=bool)
    for event in annotation.events:
        inside[event.interval.onset:event.interval.offset + 1] = True
    assert track.spot_array[~inside].max() >= 0.5


@pytest.mark.parametrize(
    "overrides",
    [
        dict(n_frames=20, n_events=3),
        dict(amplitude_range=(0.4, 0.9)),
        dict(duration_range=(10, 5)),
        dict(class_mix=(1.0, 0.0)),
        dict(n_frames=100, n_events=1, distractors=2),
    ],
)
def test_infeasible_specs(overrides):
    with pytest.raises(InfeasibleSpec):
        SynthSpec(**overrides)


def test_frame_label_counts():
    track, annotation = generate(SynthSpec(seed=5, n_frames=120, n_events=2))
    counts = frame_label_counts(annotation, track.n_frames, track.labels)
    assert counts.sum() == 120
    assert counts[1:].sum() == sum(event.interval.length for event in annotation.events)


def test_suite_on_disk(tmp_path):
    spec = SynthSpec(n_frames=150)
    path = generate_suite(spec, n_videos=4, base_seed=100, out_dir=tmp_path / "s", n_subjects=2)
    manifest = read_manifest(path)
    assert [entry.video_id for entry in manifest.entries] == ["vid000", "vid001", "vid002", "vid003"]
    assert [entry.subject_id for entry in manifest.entries] == ["sub00", "sub01", "sub00", "sub01"]
    assert sum(manifest.class_priors) == pytest.approx(1.0)
    for entry in manifest.entries:
        track = read_track(resolve_entry_path(path, entry.track_path), video_id=entry.video_id, labels=manifest.labels)
        annotation = read_annotation(resolve_entry_path(path, entry.annotation_path), labels=manifest.labels)
        assert track.n_frames == 150
        assert annotation.subject_id == entry.subject_id


def test_single_video_suite(tmp_path):
    path = generate_suite(SynthSpec(n_frames=60, n_events=1), n_videos=1, base_seed=0, out_dir=tmp_path)
    assert len(read_manifest(path).entries) == 1
    with pytest.raises(InfeasibleSpec):
        generate_suite(SynthSpec(), n_videos=0, base_seed=0, out_dir=tmp_path / "none")


def test_suite_regeneration_is_identical(tmp_path):
    spec = SynthSpec(n_frames=100, distractors=1, duration_range=(5, 9))
    a = generate_suite(spec, n_videos=3, base_seed=8, out_dir=tmp_path / "a").parent
    b = generate_suite(spec, n_videos=3, base_seed=8, out_dir=tmp_path / "b").parent
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes()


def _recovery_rate(spec, config, seeds):
    found = total = 0
    for seed in seeds:
        track, annotation = generate(spec.model_copy(update={"seed": seed}))
        preds = decode_siss(track.spot_array, config)
        gts = [event.interval for event in annotation.events]
        found += len(match(preds, gts).pairs)
        total += len(gts)
    return found / total


def test_default_decoder_recovers_generated_events():
    spec = SynthSpec(n_frames=400, n_events=3, duration_range=(7, 15), amplitude_range=(0.6, 1.0), noise_level=0.05)
    assert _recovery_rate(spec, DecoderConfig.for_fps(30.0), range(100)) >= 0.95


def test_lower_bars_recover_weakest_events():
    # amplitude 0.6 everywhere: the default inner bar (0.25) trims too much of each ramp
    spec = SynthSpec(n_frames=400, n_events=3, duration_range=(7, 15), amplitude_range=(0.6, 0.6), noise_level=0.05)
    config = DecoderConfig.for_fps(30.0, theta_low=0.1, theta_high=0.3)
    assert _recovery_rate(spec, config, range(50)) >= 0.95

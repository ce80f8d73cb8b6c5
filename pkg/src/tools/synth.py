"""
Seeded synthetic probability tracks with ground-truth micro-expression events.

All randomness comes from numpy's PCG64 generator (``np.random.default_rng(seed)``)
drawn in a fixed order: durations, amplitudes, labels, apex positions,
distractor durations, block order, gap slack, then per-frame noise. The same
spec and seed therefore always produce the same track.
"""
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core import NEUTRAL
from core.errors import InfeasibleSpec
from core.io import write_annotation, write_manifest, write_track
from core.types import (
    Annotation,
    GroundTruthEvent,
    Interval,
    Manifest,
    ManifestEntry,
    ProbabilityTrack,
    check_labels,
)

DEFAULT_LABELS = (NEUTRAL, "negative", "positive", "surprise")
MIN_GAP = 2
# generated events must clear the default outer decoding threshold
AMPLITUDE_FLOOR = 0.5
EVENT_BASE = 0.7
NEUTRAL_SPILL_CAP = 0.2
APEX_RANGE = (0.35, 0.65)


class SynthSpec(BaseModel):
    """Recipe for one synthetic video"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(default=0, ge=0, lt=2**64)
    n_frames: int = Field(default=600, ge=1, description="Track length T")
    n_events: int = Field(default=2, ge=0)
    duration_range: Tuple[int, int] = Field(default=(7, 15), description="Inclusive event length bounds in frames")
    amplitude_range: Tuple[float, float] = Field(default=(0.7, 1.0), description="Bump height bounds")
    noise_level: float = Field(default=0.05, ge=0.0, le=1.0, description="Baseline noise drawn from U[0, noise_level]")
    shape: Literal["triangle", "gaussian"] = "triangle"
    labels: Tuple[str, ...] = DEFAULT_LABELS
    class_mix: Optional[Tuple[float, ...]] = Field(
        default=None, description="Event label probabilities over the non-neutral classes; uniform when absent"
    )
    distractors: int = Field(default=0, ge=0, description="Long bumps left out of the ground truth")
    distractor_amplitude: float = Field(default=0.5, gt=0.0, le=1.0)

    @field_validator("labels", mode="before")
    @classmethod
    def validate_labels(cls, v) -> Tuple[str, ...]:
        return check_labels(v)

    @model_validator(mode="after")
    def validate_feasible(self) -> "SynthSpec":
        d_min, d_max = self.duration_range
        if not 1 <= d_min <= d_max:
            raise InfeasibleSpec(f"duration_range must satisfy 1 <= min <= max, got {self.duration_range}")
        a_min, a_max = self.amplitude_range
        if not (AMPLITUDE_FLOOR < a_min <= a_max <= 1.0):
            raise InfeasibleSpec(
                f"amplitude_range must lie in ({AMPLITUDE_FLOOR}, 1] with min <= max, got {self.amplitude_range}"
            )
        if self.class_mix is not None:
            mix = np.asarray(self.class_mix, dtype=float)
            if mix.size != len(self.labels) - 1 or (mix < 0).any() or mix.sum() <= 0:
                raise InfeasibleSpec(
                    f"class_mix needs {len(self.labels) - 1} non-negative values with a positive sum"
                )
        blocks = self.n_events + self.distractors
        worst = self.n_events * d_max + self.distractors * self.distractor_span[1] + MIN_GAP * max(blocks - 1, 0)
        if worst > self.n_frames:
            raise InfeasibleSpec(
                f"{self.n_events} events and {self.distractors} distractors need up to {worst} frames, T={self.n_frames}"
            )
        return self

    @property
    def distractor_span(self) -> Tuple[int, int]:
        return 2 * self.duration_range[1], 4 * self.duration_range[1]


def bump(shape: str, onset: int, apex: int, offset: int, amplitude: float) -> np.ndarray:
    """Noise-free bump over [onset, offset]; zero at the ends of a triangle, amplitude at apex"""
    frames = np.arange(onset, offset + 1, dtype=float)
    if shape == "gaussian":
        sigma = (offset - onset + 1) / 6.0
        return amplitude * np.exp(-((frames - apex) ** 2) / (2.0 * sigma**2))

    values = np.full(frames.size, amplitude)
    rise = frames < apex
    fall = frames > apex
    if apex > onset:
        values[rise] = amplitude * (frames[rise] - onset) / (apex - onset)
    if offset > apex:
        values[fall] = amplitude * (offset - frames[fall]) / (offset - apex)
    return values


def _layout(spec: SynthSpec, rng: np.random.Generator, lengths: List[int]) -> List[int]:
    """Onsets for blocks of the given lengths, in block order, separated by >= MIN_GAP"""
    if not lengths:
        return []
    slack = spec.n_frames - sum(lengths) - MIN_GAP * (len(lengths) - 1)
    gaps = rng.multinomial(slack, np.full(len(lengths) + 1, 1.0 / (len(lengths) + 1)))
    onsets = []
    cursor = int(gaps[0])
    for i, length in enumerate(lengths):
        onsets.append(cursor)
        cursor += length + MIN_GAP + int(gaps[i + 1])
    return onsets


def generate(spec: SynthSpec) -> Tuple[ProbabilityTrack, Annotation]:
    """Build one track and its annotation from spec"""
    rng = np.random.default_rng(spec.seed)
    n_emotions = len(spec.labels) - 1
    mix = (
        np.full(n_emotions, 1.0 / n_emotions)
        if spec.class_mix is None
        else np.asarray(spec.class_mix, dtype=float) / float(np.sum(spec.class_mix))
    )

    durations = rng.integers(spec.duration_range[0], spec.duration_range[1] + 1, size=spec.n_events)
    amplitudes = rng.uniform(spec.amplitude_range[0], spec.amplitude_range[1], size=spec.n_events)
    classes = rng.choice(n_emotions, size=spec.n_events, p=mix) + 1
    apex_fraction = rng.uniform(APEX_RANGE[0], APEX_RANGE[1], size=spec.n_events)
    distractor_durations = rng.integers(spec.distractor_span[0], spec.distractor_span[1] + 1, size=spec.distractors)

    lengths = [int(d) for d in durations] + [int(d) for d in distractor_durations]
    order = rng.permutation(len(lengths))
    onsets = _layout(spec, rng, [lengths[i] for i in order])
    placed = {int(block): onset for block, onset in zip(order, onsets)}

    noise = rng.uniform(0.0, spec.noise_level, size=spec.n_frames)
    signal = np.zeros(spec.n_frames)
    emo = np.zeros((spec.n_frames, len(spec.labels)))
    spill = np.minimum(NEUTRAL_SPILL_CAP, noise)
    emo[:, 0] = 1.0 - spill
    emo[:, 1:] = (spill / n_emotions)[:, None]

    events = []
    for i in range(spec.n_events):
        onset = placed[i]
        offset = onset + lengths[i] - 1
        apex = onset + int(round(apex_fraction[i] * (lengths[i] - 1)))
        values = bump(spec.shape, onset, apex, offset, float(amplitudes[i]))
        signal[onset:offset + 1] += values

        label = int(classes[i])
        hot = EVENT_BASE + (1.0 - EVENT_BASE) * values
        rows = np.repeat(((1.0 - hot) / (len(spec.labels) - 1))[:, None], len(spec.labels), axis=1)
        rows[:, label] = hot
        emo[onset:offset + 1] = rows
        events.append(
            GroundTruthEvent(interval=Interval(onset=onset, apex=apex, offset=offset), label=spec.labels[label])
        )

    for j in range(spec.distractors):
        block = spec.n_events + j
        onset = placed[block]
        offset = onset + lengths[block] - 1
        apex = onset + (lengths[block] - 1) // 2
        signal[onset:offset + 1] += bump(spec.shape, onset, apex, offset, spec.distractor_amplitude)

    events.sort(key=lambda e: e.interval.onset)
    video_id = f"synth{spec.seed}"
    track = ProbabilityTrack(
        video_id=video_id,
        spot=np.clip(noise + signal, 0.0, 1.0),
        emo=emo,
        labels=spec.labels,
    )
    annotation = Annotation(video_id=video_id, events=tuple(events))
    return track, annotation


def frame_label_counts(annotation: Annotation, n_frames: int, labels: Tuple[str, ...]) -> np.ndarray:
    """Frames per class when event frames carry the event label and the rest are neutral"""
    counts = np.zeros(len(labels), dtype=np.int64)
    index = {label: i for i, label in enumerate(labels)}
    for event in annotation.events:
        counts[index[event.label]] += event.interval.length
    counts[0] = n_frames - int(counts[1:].sum())
    return counts


def generate_suite(
    template: SynthSpec,
    n_videos: int,
    base_seed: int,
    out_dir: Union[str, Path],
    fps: float = 30.0,
    n_subjects: Optional[int] = None,
) -> Path:
    """Write n_videos tracks, annotations and a manifest under out_dir; returns the manifest path"""
    if n_videos < 1:
        raise InfeasibleSpec(f"n_videos must be >= 1, got {n_videos}")
    n_subjects = n_videos if n_subjects is None else n_subjects
    if n_subjects < 1:
        raise InfeasibleSpec(f"n_subjects must be >= 1, got {n_subjects}")

    out_dir = Path(out_dir)
    logger.info(f"🔍 Generating {n_videos} synthetic videos in {out_dir} (base seed {base_seed})")
    counts = np.zeros(len(template.labels), dtype=np.int64)
    entries = []
    for i in range(n_videos):
        video_id = f"vid{i:03d}"
        subject_id = f"sub{i % n_subjects:02d}"
        track, annotation = generate(template.model_copy(update={"seed": base_seed + i}))
        track = track.model_copy(update={"video_id": video_id, "subject_id": subject_id, "fps": fps})
        annotation = annotation.model_copy(update={"video_id": video_id, "subject_id": subject_id, "fps": fps})

        track_rel = f"tracks/{video_id}.csv"
        annotation_rel = f"annotations/{video_id}.json"
        write_track(track, out_dir / track_rel)
        write_annotation(annotation, out_dir / annotation_rel)
        counts += frame_label_counts(annotation, track.n_frames, template.labels)
        entries.append(
            ManifestEntry(
                video_id=video_id,
                subject_id=subject_id,
                track_path=track_rel,
                annotation_path=annotation_rel,
                fps=fps,
            )
        )

    priors = counts / counts.sum()
    manifest = Manifest(labels=template.labels, class_priors=tuple(float(p) for p in priors), entries=tuple(entries))
    path = write_manifest(manifest, out_dir / "manifest.json")
    logger.info(f"✅ Suite ready: {path}")
    return path


__all__ = ["SynthSpec", "generate", "generate_suite", "bump", "frame_label_counts", "DEFAULT_LABELS"]

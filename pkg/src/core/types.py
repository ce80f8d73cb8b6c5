"""
Domain types for probability tracks, intervals, annotations and manifests
"""
from typing import Any, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core import NEUTRAL
from core.errors import (
    DuplicateEvent,
    DuplicateVideoId,
    EmptyTrack,
    InvalidDecoderConfig,
    InvalidInterval,
    InvalidLabels,
    InvalidManifest,
    ProbabilityOutOfRange,
    RowSumOutOfTolerance,
    UnknownLabel,
)

ROW_SUM_TOLERANCE = 1e-6
# rows closer to 1 than this are kept bit-exact
RENORMALIZE_EPSILON = 1e-12

DEFAULT_ME_SECONDS = 0.5


def check_labels(labels: Sequence[str]) -> Tuple[str, ...]:
    """Validate an ordered class list: N >= 2, unique, index 0 is neutral"""
    labels = tuple(str(label) for label in labels)
    if len(labels) < 2:
        raise InvalidLabels(f"Need at least 2 labels (neutral + one emotion), got {list(labels)}")
    if len(set(labels)) != len(labels):
        raise InvalidLabels(f"Labels must be unique, got {list(labels)}")
    if labels[0] != NEUTRAL:
        raise InvalidLabels(f"Label 0 must be {NEUTRAL!r}, got {labels[0]!r}")
    return labels


def check_probabilities(
    spot: Any, emo: Any, n_labels: int
) -> Tuple[Tuple[float, ...], Tuple[Tuple[float, ...], ...]]:
    """Validate spot/emo arrays and renormalize emo rows that are within tolerance.

    Errors carry the 0-based row index; readers translate it to a file line.
    """
    spot_arr = np.asarray(spot, dtype=float).reshape(-1)
    emo_arr = np.asarray(emo, dtype=float)
    if spot_arr.size < 1:
        raise EmptyTrack("A track needs at least one frame")
    if emo_arr.ndim != 2 or emo_arr.shape != (spot_arr.size, n_labels):
        raise InvalidLabels(
            f"emo must have shape ({spot_arr.size}, {n_labels}), got {emo_arr.shape}"
        )

    bad_spot = ~((spot_arr >= 0.0) & (spot_arr <= 1.0))
    if bad_spot.any():
        row = int(np.argmax(bad_spot))
        raise ProbabilityOutOfRange("spot", row, float(spot_arr[row]))

    bad_emo = ~((emo_arr >= 0.0) & (emo_arr <= 1.0))
    if bad_emo.any():
        row, col = (int(i) for i in np.argwhere(bad_emo)[0])
        raise ProbabilityOutOfRange(f"emo[{col}]", row, float(emo_arr[row, col]))

    rows = []
    for i, row in enumerate(emo_arr):
        total = float(row.sum())
        deviation = abs(total - 1.0)
        if deviation > ROW_SUM_TOLERANCE:
            raise RowSumOutOfTolerance(i, total)
        if deviation > RENORMALIZE_EPSILON:
            row = row / total
        rows.append(tuple(float(v) for v in row))

    return tuple(float(v) for v in spot_arr), tuple(rows)


class ProbabilityTrack(BaseModel):
    """Per-frame spotting probability and emotion distribution for one video"""
    model_config = ConfigDict(frozen=True)

    video_id: str = Field(..., min_length=1, description="Video identifier")
    subject_id: str = Field(default="", description="Subject identifier")
    fps: float = Field(default=30.0, gt=0.0, description="Frames per second (metadata only)")
    spot: Tuple[float, ...] = Field(..., description="Spotting probability per frame")
    emo: Tuple[Tuple[float, ...], ...] = Field(..., description="Emotion distribution per frame (T x N)")
    labels: Tuple[str, ...] = Field(..., description="Class names, index 0 is neutral")

    @model_validator(mode="before")
    @classmethod
    def validate_probabilities(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        labels = check_labels(data.get("labels", ()))
        spot, emo = check_probabilities(data.get("spot", ()), data.get("emo", ()), len(labels))
        data.update(labels=labels, spot=spot, emo=emo)
        return data

    @property
    def n_frames(self) -> int:
        return len(self.spot)

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    @property
    def spot_array(self) -> np.ndarray:
        return np.asarray(self.spot, dtype=float)

    @property
    def emo_array(self) -> np.ndarray:
        return np.asarray(self.emo, dtype=float)


class Interval(BaseModel):
    """Onset/apex/offset frame triple, 0-based and inclusive"""
    model_config = ConfigDict(frozen=True)

    onset: int = Field(..., description="First frame")
    apex: int = Field(..., description="Peak-intensity frame")
    offset: int = Field(..., description="Last frame (inclusive)")

    @model_validator(mode="after")
    def validate_order(self) -> "Interval":
        if not 0 <= self.onset <= self.apex <= self.offset:
            raise InvalidInterval(
                f"Interval requires 0 <= onset <= apex <= offset, "
                f"got ({self.onset}, {self.apex}, {self.offset})"
            )
        return self

    @property
    def length(self) -> int:
        return self.offset - self.onset + 1

    def contains(self, frame: int) -> bool:
        return self.onset <= frame <= self.offset

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.onset, self.apex, self.offset)


def _reject_neutral(label: str) -> str:
    if label == NEUTRAL:
        raise UnknownLabel(label, ["<any non-neutral label>"])
    return label


class LabeledInterval(BaseModel):
    """A decoded interval carrying an emotion label and its confidence"""
    model_config = ConfigDict(frozen=True)

    interval: Interval
    label: str = Field(..., min_length=1)
    confidence: float = Field(..., ge=0.0, le=1.0)

    @field_validator("label")
    @classmethod
    def validate_label(cls, v: str) -> str:
        return _reject_neutral(v)


class GroundTruthEvent(BaseModel):
    """One annotated micro-expression"""
    model_config = ConfigDict(frozen=True)

    interval: Interval
    label: str = Field(..., min_length=1)

    @field_validator("label")
    @classmethod
    def validate_label(cls, v: str) -> str:
        return _reject_neutral(v)


class Annotation(BaseModel):
    """Ground-truth events of one video"""
    model_config = ConfigDict(frozen=True)

    video_id: str = Field(..., min_length=1)
    subject_id: str = Field(default="")
    fps: float = Field(default=30.0, gt=0.0)
    events: Tuple[GroundTruthEvent, ...] = Field(default_factory=tuple)

    @model_validator(mode="after")
    def validate_events_unique(self) -> "Annotation":
        seen = set()
        for event in self.events:
            if event in seen:
                raise DuplicateEvent(
                    f"{self.video_id}: event {event.interval.as_tuple()} {event.label!r} appears twice"
                )
            seen.add(event)
        return self

    @property
    def intervals(self) -> List[Interval]:
        return [event.interval for event in self.events]

    def check_labels(self, labels: Sequence[str]) -> None:
        for event in self.events:
            if event.label not in labels:
                raise UnknownLabel(event.label, labels)


class ManifestEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    video_id: str = Field(..., min_length=1)
    subject_id: str = Field(default="")
    track_path: str = Field(..., min_length=1, description="Track CSV, relative to the manifest")
    annotation_path: str = Field(..., min_length=1, description="Annotation JSON, relative to the manifest")
    fps: float = Field(default=30.0, gt=0.0)


class Manifest(BaseModel):
    """Label set, class priors and the list of videos of a suite"""
    model_config = ConfigDict(frozen=True)

    labels: Tuple[str, ...]
    class_priors: Tuple[float, ...] = Field(..., description="Training-set class frequency, neutral included")
    entries: Tuple[ManifestEntry, ...] = Field(default_factory=tuple)

    @field_validator("labels", mode="before")
    @classmethod
    def validate_labels(cls, v: Any) -> Tuple[str, ...]:
        return check_labels(v)

    @model_validator(mode="after")
    def validate_priors_and_ids(self) -> "Manifest":
        priors = np.asarray(self.class_priors, dtype=float)
        if priors.size != len(self.labels):
            raise InvalidManifest(
                f"class_priors has {priors.size} values but there are {len(self.labels)} labels"
            )
        if not np.isfinite(priors).all() or (priors < 0).any():
            raise InvalidManifest(
                f"class_priors must be finite and non-negative, got {list(self.class_priors)}"
            )
        if abs(float(priors.sum()) - 1.0) > ROW_SUM_TOLERANCE:
            raise InvalidManifest(f"class_priors sum to {float(priors.sum())!r}, expected 1")
        seen = set()
        for entry in self.entries:
            if entry.video_id in seen:
                raise DuplicateVideoId(entry.video_id)
            seen.add(entry.video_id)
        return self

    @property
    def priors_array(self) -> np.ndarray:
        return np.asarray(self.class_priors, dtype=float)

    def subjects(self) -> List[str]:
        return sorted({entry.subject_id for entry in self.entries})


class DecoderConfig(BaseModel):
    """Prior parameters shared by the fixed-window and SISS decoders"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    k: int = Field(default=15, ge=1, description="Duration prior: expected ME length in frames")
    theta_low: float = Field(default=0.25, ge=0.0, le=1.0, description="Threshold inside the k-wide zone")
    theta_high: float = Field(default=0.5, ge=0.0, le=1.0, description="Threshold outside the k-wide zone")
    patience: int = Field(default=2, ge=1, description="Consecutive violations that stop extension")
    min_peak_height: float = Field(default=0.6, ge=0.0, le=1.0, description="Peak detection floor")
    nms_iou: float = Field(default=0.3, ge=0.0, lt=1.0, description="Suppression IoU for overlapping proposals")

    @model_validator(mode="after")
    def validate_thresholds(self) -> "DecoderConfig":
        if self.theta_low > self.theta_high:
            raise InvalidDecoderConfig(
                f"theta_low ({self.theta_low}) must not exceed theta_high ({self.theta_high})"
            )
        return self

    @staticmethod
    def k_for_fps(fps: float, seconds: float = DEFAULT_ME_SECONDS) -> int:
        # half-up, so 25 fps gives 13
        return max(1, int(np.floor(seconds * fps + 0.5)))

    @classmethod
    def for_fps(cls, fps: float, **overrides: Any) -> "DecoderConfig":
        """Config whose duration prior is 0.5 s x fps rounded half-up"""
        if overrides.get("k") is None:
            overrides["k"] = cls.k_for_fps(fps)
        return cls(**overrides)


__all__ = [
    "ProbabilityTrack", "Interval", "LabeledInterval", "GroundTruthEvent", "Annotation",
    "ManifestEntry", "Manifest", "DecoderConfig", "check_labels", "check_probabilities",
    "ROW_SUM_TOLERANCE",
]

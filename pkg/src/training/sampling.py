"""
Training segments cut from synthetic videos, and the feature corruption that
turns clean probability tracks into model inputs.
"""
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from core.errors import InsufficientNegativeSpace, TrackTooShort
from core.types import Annotation, ProbabilityTrack
from tools.synth import bump

CORRUPTION_GAIN = 1.5
CORRUPTION_COUPLING = 0.5


def corruption_matrix(n_features: int) -> np.ndarray:
    """Unit upper-triangular mixing matrix: each feature leaks into its predecessor"""
    return np.eye(n_features) + CORRUPTION_COUPLING * np.eye(n_features, k=1)


def corrupt_features(track: ProbabilityTrack) -> np.ndarray:
    """Model inputs x' = clip(1.5 * M (x - 0.5), -1, 1) with x = [spot, emo...] per frame.

    M is invertible, so the clean track is recoverable wherever clipping is
    inactive; the model still has to learn to undo the mixing.
    """
    x = np.column_stack([track.spot_array, track.emo_array])
    mixed = (x - 0.5) @ corruption_matrix(x.shape[1]).T
    return np.clip(CORRUPTION_GAIN * mixed, -1.0, 1.0)


def frame_targets(
    annotation: Annotation, n_frames: int, labels: Sequence[str], soft: bool = False
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-frame (spot target, class index); neutral (0) outside events"""
    spot = np.zeros(n_frames)
    classes = np.zeros(n_frames, dtype=int)
    index = {label: i for i, label in enumerate(labels)}
    for event in annotation.events:
        iv = event.interval
        if soft:
            spot[iv.onset:iv.offset + 1] = np.maximum(
                spot[iv.onset:iv.offset + 1], bump("triangle", iv.onset, iv.apex, iv.offset, 1.0)
            )
        else:
            spot[iv.onset:iv.offset + 1] = 1.0
        classes[iv.onset:iv.offset + 1] = index[event.label]
    return spot, classes


@dataclass
class Segment:
    video_id: str
    start: int
    positive: bool
    features: np.ndarray
    spot_target: np.ndarray
    class_target: np.ndarray

    @property
    def stop(self) -> int:
        return self.start + len(self.spot_target)


def negative_starts(annotation: Annotation, n_frames: int, length: int) -> np.ndarray:
    """Every start whose segment shares no frame with any event"""
    covered = np.zeros(n_frames, dtype=np.int64)
    for iv in annotation.intervals:
        covered[iv.onset:iv.offset + 1] = 1
    running = np.concatenate(([0], np.cumsum(covered)))
    starts = np.arange(n_frames - length + 1)
    return starts[running[starts + length] - running[starts] == 0]


def sample_segments(
    track: ProbabilityTrack,
    annotation: Annotation,
    segment_len: int,
    neg_pos_ratio: float,
    rng: np.random.Generator,
    soft_targets: bool = False,
    features: Optional[np.ndarray] = None,
) -> List[Segment]:
    """One segment centred on each event apex plus round(ratio * positives) event-free segments"""
    n = track.n_frames
    if n < segment_len:
        raise TrackTooShort(f"{track.video_id}: {n} frames, segments need {segment_len}")
    features = corrupt_features(track) if features is None else features
    spot, classes = frame_targets(annotation, n, track.labels, soft=soft_targets)

    def cut(start: int, positive: bool) -> Segment:
        stop = start + segment_len
        return Segment(
            video_id=track.video_id,
            start=start,
            positive=positive,
            features=features[start:stop],
            spot_target=spot[start:stop],
            class_target=classes[start:stop],
        )

    positives = [
        cut(min(max(event.interval.apex - segment_len // 2, 0), n - segment_len), True)
        for event in annotation.events
    ]

    wanted = int(round(neg_pos_ratio * len(positives)))
    candidates = negative_starts(annotation, n, segment_len)
    if wanted > candidates.size:
        message = f"{track.video_id}: asked for {wanted} negative segments, only {candidates.size} fit"
        logger.warning(f"⚠️ {message}")
        warnings.warn(message, InsufficientNegativeSpace, stacklevel=2)
        chosen = candidates
    else:
        chosen = np.sort(rng.choice(candidates, size=wanted, replace=False)) if wanted else candidates[:0]

    return positives + [cut(int(start), False) for start in chosen]


__all__ = [
    "corrupt_features", "corruption_matrix", "frame_targets", "Segment",
    "negative_starts", "sample_segments",
]

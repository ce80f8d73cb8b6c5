"""
Emotion assignment for decoded intervals, with majority-class penalization
"""
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import AllZeroAfterPenalty, InvalidPenaltyConfig
from core.types import Interval, LabeledInterval, ProbabilityTrack

PenaltyMode = Literal["none", "inverse_prior", "custom"]


class PenaltyConfig(BaseModel):
    """How class scores are reweighted before the emotion argmax"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: PenaltyMode = Field(default="inverse_prior", description="none | inverse_prior | custom")
    weights: Optional[Tuple[float, ...]] = Field(default=None, description="Per-class multipliers for custom mode")
    epsilon: float = Field(default=1e-6, ge=0.0, description="Added to each prior before dividing")

    @model_validator(mode="after")
    def validate_weights(self) -> "PenaltyConfig":
        if self.mode == "custom" and self.weights is None:
            raise InvalidPenaltyConfig("custom penalty mode requires weights")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if not np.isfinite(w).all() or (w < 0).any():
                raise InvalidPenaltyConfig(f"weights must be finite and non-negative, got {list(self.weights)}")
        return self

    def factors(self, priors: Sequence[float], n_classes: int) -> Optional[np.ndarray]:
        """Per-class multipliers, or None when scores pass through unchanged"""
        if self.mode == "none":
            return None
        if self.mode == "custom":
            if len(self.weights) != n_classes:
                raise InvalidPenaltyConfig(
                    f"custom weights have {len(self.weights)} values, expected {n_classes}"
                )
            return np.asarray(self.weights, dtype=float)

        denominators = np.asarray(priors, dtype=float) + self.epsilon
        if denominators.size != n_classes:
            raise InvalidPenaltyConfig(f"got {denominators.size} priors for {n_classes} classes")
        if (denominators <= 0).any():
            zero = int(np.argmax(denominators <= 0))
            raise InvalidPenaltyConfig(
                f"prior of class {zero} plus epsilon is {denominators[zero]!r}; use epsilon > 0"
            )
        return 1.0 / denominators


def penalize(dist: Sequence[float], priors: Sequence[float], cfg: PenaltyConfig) -> np.ndarray:
    """Reweight one class distribution and renormalize it to sum to 1"""
    dist = np.asarray(dist, dtype=float)
    factors = cfg.factors(priors, dist.size)
    if factors is None:
        return dist.copy()
    scores = dist * factors
    total = float(scores.sum())
    if total <= 0.0:
        raise AllZeroAfterPenalty(f"penalized scores sum to {total!r} for distribution {dist.tolist()}")
    return scores / total


def penalized_scores(track: ProbabilityTrack, priors: Sequence[float], cfg: PenaltyConfig) -> np.ndarray:
    """Per-frame penalized class scores (T x N), used for curve output"""
    emo = track.emo_array
    factors = cfg.factors(priors, track.n_classes)
    if factors is None:
        return emo
    scores = emo * factors
    totals = scores.sum(axis=1, keepdims=True)
    if (totals <= 0).any():
        row = int(np.argmax(totals.reshape(-1) <= 0))
        raise AllZeroAfterPenalty(f"{track.video_id}: penalized scores of frame {row} sum to 0")
    return scores / totals


def assign_emotion(
    track: ProbabilityTrack, interval: Interval, priors: Sequence[float], cfg: PenaltyConfig
) -> LabeledInterval:
    """Label one interval with the best non-neutral class of its mean distribution.

    Neutral never wins: an emitted interval is already a micro-expression.
    Ties go to the lowest class index. Confidence is the winner's share of the
    non-neutral penalized mass; if that mass is 0 the first emotion class is
    returned with confidence 0.
    """
    rows = track.emo_array[interval.onset:interval.offset + 1]
    scores = penalize(rows.mean(axis=0), priors, cfg)
    emotions = scores[1:]
    mass = float(emotions.sum())
    if mass <= 0.0:
        logger.debug(f"{track.video_id}: no emotion mass in {interval.as_tuple()}")
        return LabeledInterval(interval=interval, label=track.labels[1], confidence=0.0)

    best = int(np.argmax(emotions))
    confidence = min(1.0, float(emotions[best]) / mass)
    return LabeledInterval(interval=interval, label=track.labels[best + 1], confidence=confidence)


def classify_intervals(
    track: ProbabilityTrack, intervals: Sequence[Interval], priors: Sequence[float], cfg: PenaltyConfig
) -> List[LabeledInterval]:
    return [assign_emotion(track, interval, priors, cfg) for interval in intervals]


__all__ = [
    "PenaltyConfig", "PenaltyMode", "penalize", "penalized_scores",
    "assign_emotion", "classify_intervals",
]

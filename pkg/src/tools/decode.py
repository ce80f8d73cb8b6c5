"""
Interval decoding from per-frame spotting probabilities.

Two decoders share the peak detector and the duration prior k:
  - decode_fixed: a k-wide window centred on every peak
  - decode_siss: scalable interval selection, i.e. bidirectional extension
    with a low threshold inside the k-wide zone around the apex, a high
    threshold outside it, a patience counter and apex reselection
"""
from typing import List, Literal, NamedTuple, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import signal

from core.errors import InvalidDecoderConfig
from core.types import DecoderConfig, Interval
from tools.metrics import iou

DecoderName = Literal["siss", "fixed"]


class Peak(NamedTuple):
    index: int
    height: float


def find_peaks(spot: Sequence[float], min_peak_height: float) -> List[Peak]:
    """Plateau-aware local maxima at or above min_peak_height.

    A plateau (run of equal values) is a peak when it is strictly higher than
    both neighbours; sequence boundaries count as -inf. The plateau is
    represented by the floor of its midpoint. Sorted by (height desc, index asc).
    """
    values = np.asarray(spot, dtype=float)
    padded = np.concatenate(([-np.inf], values, [-np.inf]))
    idx, props = signal.find_peaks(padded, height=min_peak_height)
    heights = props["peak_heights"]
    order = np.lexsort((idx, -heights))
    return [Peak(int(idx[i]) - 1, float(heights[i])) for i in order]


def nms(intervals: Sequence[Interval], spot: Sequence[float], iou_threshold: float) -> List[Interval]:
    """Greedy suppression in apex-height order; survivors sorted by onset"""
    ordered = sorted(
        intervals,
        key=lambda iv: (-float(spot[iv.apex]), iv.apex, iv.onset, iv.offset),
    )
    kept: List[Interval] = []
    for candidate in ordered:
        if all(iou(candidate, other) <= iou_threshold for other in kept):
            kept.append(candidate)
    return sorted(kept, key=lambda iv: (iv.onset, iv.apex, iv.offset))


def decode_fixed(spot: Sequence[float], config: DecoderConfig) -> List[Interval]:
    """Baseline: a window of exactly k frames centred on each peak, clamped to the clip"""
    n = len(spot)
    intervals = []
    for peak in find_peaks(spot, config.min_peak_height):
        onset = peak.index - (config.k - 1) // 2
        offset = onset + config.k - 1
        intervals.append(
            Interval(onset=max(onset, 0), apex=peak.index, offset=min(offset, n - 1))
        )
    return nms(intervals, spot, config.nms_iou)


def _walk(
    values: List[float], apex: int, step: int, config: DecoderConfig
) -> Tuple[int, List[int]]:
    """Extend from apex in one direction; returns (boundary, visited frames)"""
    half = config.k // 2
    boundary = apex
    visited: List[int] = []
    violations = 0
    frame = apex + step
    while 0 <= frame < len(values):
        visited.append(frame)
        bar = config.theta_low if abs(frame - apex) <= half else config.theta_high
        if values[frame] < bar:
            violations += 1
            if violations >= config.patience:
                break
        else:
            violations = 0
            boundary = frame
        frame += step
    return boundary, visited


def _extend(values: List[float], apex: int, config: DecoderConfig) -> Interval:
    while True:
        onset, left_seen = _walk(values, apex, -1, config)
        offset, right_seen = _walk(values, apex, +1, config)
        best = max(left_seen + right_seen, key=lambda f: (values[f], -f), default=None)
        if best is None or values[best] <= values[apex]:
            break
        logger.trace(f"Reselecting apex {apex} -> {best}")
        apex = best

    window = values[onset:offset + 1]
    apex = onset + window.index(max(window))
    return Interval(onset=onset, apex=apex, offset=offset)


def decode_siss(spot: Sequence[float], config: DecoderConfig) -> List[Interval]:
    """Scalable interval selection around every peak not already covered"""
    values = [float(v) for v in spot]
    accepted: List[Interval] = []
    for peak in find_peaks(values, config.min_peak_height):
        if any(iv.contains(peak.index) for iv in accepted):
            continue
        accepted.append(_extend(values, peak.index, config))
    return nms(accepted, values, config.nms_iou)


def decode(spot: Sequence[float], config: DecoderConfig, method: DecoderName = "siss") -> List[Interval]:
    if method == "siss":
        return decode_siss(spot, config)
    if method == "fixed":
        return decode_fixed(spot, config)
    raise InvalidDecoderConfig(f"Unknown decoder {method!r}")


def decoded_mask(n_frames: int, intervals: Sequence[Interval]) -> np.ndarray:
    """0/1 per frame: inside any decoded interval"""
    mask = np.zeros(n_frames, dtype=int)
    for iv in intervals:
        mask[iv.onset:iv.offset + 1] = 1
    return mask


__all__ = [
    "Peak", "find_peaks", "nms", "decode_fixed", "decode_siss",
    "decode", "decoded_mask", "DecoderName",
]

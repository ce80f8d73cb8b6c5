"""
Independent SISS oracle.

Same contract as tools.decode.decode_siss, computed differently: plateaus come
from run-length encoding, each extension is a vectorised scan for the first
patience-long run of violations, and suppression uses a pairwise IoU matrix.
Used to cross-check the production decoder.
"""
from typing import List, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.types import DecoderConfig, Interval


def _reference_peaks(v: np.ndarray, floor: float) -> List[int]:
    n = v.size
    if n == 0:
        return []
    change = np.flatnonzero(np.diff(v) != 0) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change - 1, [n - 1]))
    heights = v[starts]
    left = np.where(starts > 0, v[np.maximum(starts - 1, 0)], -np.inf)
    right = np.where(ends < n - 1, v[np.minimum(ends + 1, n - 1)], -np.inf)
    keep = (left < heights) & (right < heights) & (heights >= floor)
    index = (starts + ends) // 2
    index, heights = index[keep], heights[keep]
    order = np.lexsort((index, -heights))
    return [int(i) for i in index[order]]


def _scan(v: np.ndarray, apex: int, direction: int, cfg: DecoderConfig) -> Tuple[int, np.ndarray]:
    length = apex if direction < 0 else v.size - 1 - apex
    frames = apex + direction * np.arange(1, length + 1)
    if frames.size == 0:
        return apex, frames
    bars = np.where(np.abs(frames - apex) <= cfg.k // 2, cfg.theta_low, cfg.theta_high)
    violated = v[frames] < bars
    stop = frames.size - 1
    if cfg.patience <= violated.size:
        runs = np.flatnonzero(sliding_window_view(violated, cfg.patience).all(axis=1))
        if runs.size:
            stop = int(runs[0]) + cfg.patience - 1
    seen = frames[:stop + 1]
    passing = np.flatnonzero(~violated[:stop + 1])
    boundary = int(seen[passing[-1]]) if passing.size else apex
    return boundary, seen


def _reference_interval(v: np.ndarray, apex: int, cfg: DecoderConfig) -> Tuple[int, int, int]:
    while True:
        onset, left = _scan(v, apex, -1, cfg)
        offset, right = _scan(v, apex, +1, cfg)
        seen = np.sort(np.concatenate((left, right)))
        if seen.size == 0:
            break
        candidate = int(seen[np.argmax(v[seen])])
        if not v[candidate] > v[apex]:
            break
        apex = candidate
    return onset, onset + int(np.argmax(v[onset:offset + 1])), offset


def _reference_nms(v: np.ndarray, triples: List[Tuple[int, int, int]], threshold: float) -> List[Tuple[int, int, int]]:
    if not triples:
        return []
    arr = np.asarray(triples, dtype=int)
    on, ap, off = arr[:, 0], arr[:, 1], arr[:, 2]
    inter = np.minimum(off[:, None], off[None, :]) - np.maximum(on[:, None], on[None, :]) + 1
    inter = np.clip(inter, 0, None)
    size = off - on + 1
    overlap = inter / (size[:, None] + size[None, :] - inter)
    order = np.lexsort((off, on, ap, -v[ap]))
    suppressed = np.zeros(len(triples), dtype=bool)
    kept = []
    for i in order:
        if suppressed[i]:
            continue
        kept.append(i)
        suppressed |= overlap[i] > threshold
    survivors = sorted(tuple(int(x) for x in arr[i]) for i in kept)
    return survivors


def reference_decode_siss(spot, config: DecoderConfig) -> List[Interval]:
    v = np.asarray(spot, dtype=float).reshape(-1)
    covered = np.zeros(v.size, dtype=bool)
    triples = []
    for peak in _reference_peaks(v, config.min_peak_height):
        if covered[peak]:
            continue
        onset, apex, offset = _reference_interval(v, peak, config)
        covered[onset:offset + 1] = True
        triples.append((onset, apex, offset))
    return [Interval(onset=a, apex=b, offset=c) for a, b, c in _reference_nms(v, triples, config.nms_iou)]


__all__ = ["reference_decode_siss"]

"""
Interval matching and evaluation scores for spotting, recognition and analysis.

Counts are aggregated over all videos before any score is computed (one global
F1, not a per-video mean). VideoTally is the aggregation unit; it adds like a
commutative monoid so per-video work can run in any order.
"""
from typing import Dict, Iterable, Literal, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from sklearn.metrics import confusion_matrix

from core.errors import NonSquareMatrix
from core.types import Interval

TP_IOU_THRESHOLD = 0.5
Averaging = Literal["macro", "micro"]


def iou(a: Interval, b: Interval) -> float:
    """Temporal IoU with frames counted inclusively"""
    intersection = min(a.offset, b.offset) - max(a.onset, b.onset) + 1
    if intersection <= 0:
        return 0.0
    return intersection / (a.length + b.length - intersection)


class MatchedPair(BaseModel):
    model_config = ConfigDict(frozen=True)

    pred: int = Field(..., ge=0, description="Index into the predictions")
    gt: int = Field(..., ge=0, description="Index into the ground truths")
    iou: float = Field(..., ge=0.0, le=1.0)


class MatchReport(BaseModel):
    """One-to-one greedy matching between predictions and ground truths of one video"""
    model_config = ConfigDict(frozen=True)

    pairs: Tuple[MatchedPair, ...] = ()
    fp: Tuple[int, ...] = ()
    fn: Tuple[int, ...] = ()
    threshold: float = TP_IOU_THRESHOLD


def match(preds: Sequence[Interval], gts: Sequence[Interval], threshold: float = TP_IOU_THRESHOLD) -> MatchReport:
    """Greedy matching in (iou desc, pred asc, gt asc) order, accepting iou > threshold"""
    candidates = []
    for p, pred in enumerate(preds):
        for g, gt in enumerate(gts):
            value = iou(pred, gt)
            if value > threshold:
                candidates.append((value, p, g))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))

    used_preds, used_gts = set(), set()
    pairs = []
    for value, p, g in candidates:
        if p in used_preds or g in used_gts:
            continue
        used_preds.add(p)
        used_gts.add(g)
        pairs.append(MatchedPair(pred=p, gt=g, iou=value))

    return MatchReport(
        pairs=tuple(pairs),
        fp=tuple(p for p in range(len(preds)) if p not in used_preds),
        fn=tuple(g for g in range(len(gts)) if g not in used_gts),
        threshold=threshold,
    )


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def spotting_scores(tp: int, fp: int, fn: int) -> Tuple[float, float, float]:
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return precision, recall, f1


def iou_summaries(ious: Iterable[float]) -> Tuple[float, float]:
    """(iou_tp, iou_all) from the ious of pairs matched at threshold 0"""
    values = np.asarray(list(ious), dtype=float)
    iou_all = float(values.mean()) if values.size else 0.0
    above = values[values > TP_IOU_THRESHOLD]
    iou_tp = float(above.mean()) if above.size else 0.0
    return iou_tp, iou_all


def recognition_scores(confusion, averaging: Averaging = "macro") -> Tuple[float, float, float]:
    """(f1_rec, uf1, uar) from a ground-truth-by-row confusion matrix"""
    matrix = np.asarray(confusion, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NonSquareMatrix(matrix.shape)
    if matrix.size == 0:
        return 0.0, 0.0, 0.0

    tp = np.diag(matrix)
    support = matrix.sum(axis=1)
    predicted = matrix.sum(axis=0)
    f1 = np.divide(2 * tp, support + predicted, out=np.zeros_like(tp), where=(support + predicted) > 0)
    recall = np.divide(tp, support, out=np.zeros_like(tp), where=support > 0)
    uf1 = float(f1.mean())
    uar = float(recall.mean())
    micro = _ratio(float(tp.sum()), float(matrix.sum()))
    return (uf1 if averaging == "macro" else micro), uf1, uar


def strs(f1_spot: float, f1_rec: float) -> float:
    """Spot-then-recognize score"""
    return f1_spot * f1_rec


def build_confusion(label_pairs: Sequence[Tuple[int, int]], n_classes: int) -> np.ndarray:
    """Counts of (gt, pred) emotion indices; indices are 0-based over non-neutral classes"""
    if not label_pairs:
        return np.zeros((n_classes, n_classes), dtype=int)
    y_true = [gt for gt, _ in label_pairs]
    y_pred = [pred for _, pred in label_pairs]
    return confusion_matrix(y_true, y_pred, labels=list(range(n_classes)))


class VideoTally(BaseModel):
    """Per-video evaluation counts; tallies add to an aggregate"""
    model_config = ConfigDict(frozen=True)

    tp: int = 0
    fp: int = 0
    fn: int = 0
    overlap_ious: Tuple[float, ...] = Field(default=(), description="IoUs of pairs matched at threshold 0")
    label_pairs: Tuple[Tuple[int, int], ...] = Field(default=(), description="(gt, pred) on TP intervals")

    def __add__(self, other: "VideoTally") -> "VideoTally":
        return VideoTally(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            overlap_ious=self.overlap_ious + other.overlap_ious,
            label_pairs=self.label_pairs + other.label_pairs,
        )


def evaluate_video(
    preds: Sequence[Interval],
    pred_labels: Sequence[str],
    gts: Sequence[Interval],
    gt_labels: Sequence[str],
    emotions: Sequence[str],
) -> VideoTally:
    """Match one video's predictions against its ground truth"""
    spotting = match(preds, gts, TP_IOU_THRESHOLD)
    overlap = match(preds, gts, 0.0)
    index = {label: i for i, label in enumerate(emotions)}
    label_pairs = tuple(
        (index[gt_labels[pair.gt]], index[pred_labels[pair.pred]]) for pair in spotting.pairs
    )
    return VideoTally(
        tp=len(spotting.pairs),
        fp=len(spotting.fp),
        fn=len(spotting.fn),
        overlap_ious=tuple(pair.iou for pair in overlap.pairs),
        label_pairs=label_pairs,
    )


class MetricsReport(BaseModel):
    """Every spotting, recognition and analysis score of one evaluation"""
    model_config = ConfigDict(frozen=True)

    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1_spot: float
    iou_tp: float
    iou_all: float
    emotions: Tuple[str, ...] = Field(..., description="Row/column order of the confusion matrix")
    confusion: Tuple[Tuple[int, ...], ...]
    averaging: Averaging = "macro"
    f1_rec: float
    uf1: float
    uar: float
    strs: float


def summarize(tally: VideoTally, emotions: Sequence[str], averaging: Averaging = "macro") -> MetricsReport:
    precision, recall, f1_spot = spotting_scores(tally.tp, tally.fp, tally.fn)
    iou_tp, iou_all = iou_summaries(tally.overlap_ious)
    confusion = build_confusion(list(tally.label_pairs), len(emotions))
    f1_rec, uf1, uar = recognition_scores(confusion, averaging)
    return MetricsReport(
        tp=tally.tp,
        fp=tally.fp,
        fn=tally.fn,
        precision=precision,
        recall=recall,
        f1_spot=f1_spot,
        iou_tp=iou_tp,
        iou_all=iou_all,
        emotions=tuple(emotions),
        confusion=tuple(tuple(int(c) for c in row) for row in confusion),
        averaging=averaging,
        f1_rec=f1_rec,
        uf1=uf1,
        uar=uar,
        strs=strs(f1_spot, f1_rec),
    )


class VideoReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    video_id: str
    subject_id: str = ""
    metrics: MetricsReport


SCORE_COLUMNS = [
    "tp", "fp", "fn", "precision", "recall", "f1_spot", "iou_tp", "iou_all",
    "f1_rec", "uf1", "uar", "strs",
]


class EvaluationReport(BaseModel):
    """Aggregate scores plus a per-video breakdown, ordered by video_id"""
    model_config = ConfigDict(frozen=True)

    decoder: str = "siss"
    overall: MetricsReport
    per_video: Tuple[VideoReport, ...] = ()

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for video in self.per_video:
            row = {"video_id": video.video_id, "subject_id": video.subject_id}
            row.update({column: getattr(video.metrics, column) for column in SCORE_COLUMNS})
            rows.append(row)
        total = {"video_id": "ALL", "subject_id": ""}
        total.update({column: getattr(self.overall, column) for column in SCORE_COLUMNS})
        rows.append(total)
        return pd.DataFrame(rows, columns=["video_id", "subject_id"] + SCORE_COLUMNS)


def build_report(
    tallies: Dict[str, Tuple[str, VideoTally]],
    emotions: Sequence[str],
    averaging: Averaging = "macro",
    decoder: str = "siss",
) -> EvaluationReport:
    """tallies maps video_id -> (subject_id, tally); aggregation order is sorted video_id"""
    total = VideoTally()
    per_video = []
    for video_id in sorted(tallies):
        subject_id, tally = tallies[video_id]
        total = total + tally
        per_video.append(
            VideoReport(video_id=video_id, subject_id=subject_id, metrics=summarize(tally, emotions, averaging))
        )
    return EvaluationReport(
        decoder=decoder,
        overall=summarize(total, emotions, averaging),
        per_video=tuple(per_video),
    )


__all__ = [
    "iou", "match", "MatchedPair", "MatchReport", "spotting_scores", "iou_summaries",
    "recognition_scores", "strs", "build_confusion", "VideoTally", "evaluate_video",
    "MetricsReport", "summarize", "VideoReport", "EvaluationReport", "build_report",
    "TP_IOU_THRESHOLD",
]

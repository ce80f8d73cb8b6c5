"""
Per-video decode -> classify -> evaluate pipeline over a manifest.

All inputs are loaded and validated before anything is written, so a bad
manifest never leaves a partial report behind. Videos run in a thread pool;
results are always assembled in video_id order.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict

from core.errors import InvalidDocument, InvalidInterval, MissingFile, UnknownLabel
from core.io import (
    FLOAT_FORMAT,
    atomic_write_text,
    dump_json,
    read_annotation,
    read_intervals,
    read_manifest,
    read_track,
    resolve_entry_path,
    write_intervals,
    write_report,
)
from core.types import Annotation, LabeledInterval, Manifest, ProbabilityTrack
from tools.classify import classify_intervals, penalized_scores
from tools.decode import decode, decoded_mask
from tools.metrics import EvaluationReport, VideoTally, build_report, evaluate_video
from tools.report_formatter import ReportFormatter
from utils.config import RunConfig, settings

PathLike = Union[str, Path]

PREDICTIONS_SOURCE = "predictions"


@dataclass
class VideoInput:
    track: ProbabilityTrack
    annotation: Annotation
    # intervals produced elsewhere; None means decode the track
    predictions: Optional[List[LabeledInterval]] = None

    @property
    def video_id(self) -> str:
        return self.track.video_id


@dataclass
class VideoResult:
    video_id: str
    subject_id: str
    intervals: List[LabeledInterval]
    tally: VideoTally
    curves: pd.DataFrame


def load_suite(manifest_path: PathLike) -> Tuple[Manifest, List[VideoInput]]:
    """Read and validate a manifest and every file it references"""
    manifest = read_manifest(manifest_path)
    videos = []
    for entry in manifest.entries:
        track = read_track(
            resolve_entry_path(manifest_path, entry.track_path),
            video_id=entry.video_id,
            subject_id=entry.subject_id,
            fps=entry.fps,
            labels=manifest.labels,
        )
        annotation = read_annotation(resolve_entry_path(manifest_path, entry.annotation_path), labels=manifest.labels)
        videos.append(VideoInput(track=track, annotation=annotation))
    logger.info(f"📄 Loaded {len(videos)} videos from {manifest_path}")
    return manifest, videos


def load_predictions(videos: Sequence[VideoInput], predictions_dir: PathLike, labels: Sequence[str]) -> None:
    """Attach <predictions_dir>/<video_id>.json to every video, checking ids, labels and bounds"""
    predictions_dir = Path(predictions_dir)
    if not predictions_dir.is_dir():
        raise MissingFile(predictions_dir)
    emotions = list(labels[1:])
    for video in videos:
        path = predictions_dir / f"{video.video_id}.json"
        items = []
        for video_id, item in read_intervals(path):
            if video_id != video.video_id:
                raise InvalidDocument(path, f"record for {video_id!r} in the file of {video.video_id!r}")
            if item.label not in emotions:
                raise UnknownLabel(item.label, emotions)
            if item.interval.offset >= video.track.n_frames:
                raise InvalidInterval(
                    f"{path}: offset {item.interval.offset} beyond the last frame {video.track.n_frames - 1}"
                )
            items.append(item)
        video.predictions = sorted(items, key=lambda it: (it.interval.onset, it.interval.apex, it.interval.offset))
    logger.info(f"📄 Loaded predictions for {len(videos)} videos from {predictions_dir}")


def label_track(
    track: ProbabilityTrack, priors: Sequence[float], config: RunConfig, decoder: Optional[str] = None
) -> List[LabeledInterval]:
    """Decode a track into intervals and give each one an emotion"""
    intervals = decode(track.spot_array, config.decoder_config(track.fps), decoder or config.decoder)
    return classify_intervals(track, intervals, priors, config.penalty)


def curve_frame(track: ProbabilityTrack, intervals: Sequence[LabeledInterval], scores: np.ndarray) -> pd.DataFrame:
    """Plot-ready per-frame curves: spot, decoded flag, penalized class scores"""
    frame = pd.DataFrame(scores, columns=[f"s_{label}" for label in track.labels])
    frame.insert(0, "decoded", decoded_mask(track.n_frames, [item.interval for item in intervals]))
    frame.insert(0, "spot", track.spot_array)
    frame.insert(0, "frame", np.arange(track.n_frames))
    return frame


def analyze_video(
    video: VideoInput, priors: Sequence[float], config: RunConfig, decoder: Optional[str] = None
) -> VideoResult:
    track, annotation = video.track, video.annotation
    if video.predictions is not None:
        intervals = list(video.predictions)
    else:
        intervals = label_track(track, priors, config, decoder)
    tally = evaluate_video(
        [item.interval for item in intervals],
        [item.label for item in intervals],
        annotation.intervals,
        [event.label for event in annotation.events],
        track.labels[1:],
    )
    curves = curve_frame(track, intervals, penalized_scores(track, priors, config.penalty))
    logger.debug(f"🔍 {track.video_id}: {len(intervals)} intervals, tp={tally.tp} fp={tally.fp} fn={tally.fn}")
    return VideoResult(track.video_id, track.subject_id, intervals, tally, curves)


def analyze_all(
    videos: Sequence[VideoInput], priors: Sequence[float], config: RunConfig, decoder: Optional[str] = None
) -> List[VideoResult]:
    workers = settings.worker_count(config.threads)
    if workers == 1 or len(videos) <= 1:
        results = [analyze_video(video, priors, config, decoder) for video in videos]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda v: analyze_video(v, priors, config, decoder), videos))
    return sorted(results, key=lambda r: r.video_id)


def report_from_results(
    results: Sequence[VideoResult], labels: Sequence[str], config: RunConfig, decoder: str
) -> EvaluationReport:
    tallies: Dict[str, Tuple[str, VideoTally]] = {r.video_id: (r.subject_id, r.tally) for r in results}
    return build_report(tallies, labels[1:], averaging=config.averaging, decoder=decoder)


def write_curves(results: Sequence[VideoResult], out_dir: PathLike) -> None:
    curves_dir = Path(out_dir) / "curves"
    for result in results:
        text = result.curves.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        atomic_write_text(curves_dir / f"{result.video_id}.csv", text)


def evaluate_manifest(
    manifest_path: PathLike,
    config: RunConfig,
    out_dir: Optional[PathLike] = None,
    predictions_dir: Optional[PathLike] = None,
) -> EvaluationReport:
    """Score every video of a manifest; write report files when out_dir is set.

    With predictions_dir the intervals are read from <video_id>.json files
    there (the format `decode` writes) instead of being decoded from the tracks.
    """
    manifest, videos = load_suite(manifest_path)
    source = config.decoder
    if predictions_dir is not None:
        load_predictions(videos, predictions_dir, manifest.labels)
        source = PREDICTIONS_SOURCE
    results = analyze_all(videos, manifest.priors_array, config)
    report = report_from_results(results, manifest.labels, config, source)
    logger.info(
        f"✅ {source}: f1_spot={report.overall.f1_spot:.4f} "
        f"f1_rec={report.overall.f1_rec:.4f} strs={report.overall.strs:.4f}"
    )

    out_dir = out_dir or config.out_dir
    if out_dir is not None:
        out_dir = Path(out_dir)
        write_report(report, out_dir / "report.json")
        atomic_write_text(out_dir / "report.md", ReportFormatter().format_evaluation(report))
        for result in results:
            write_intervals(result.intervals, out_dir / "intervals" / f"{result.video_id}.json", result.video_id)
        if config.write_curves:
            write_curves(results, out_dir)
    return report


class AblationReport(BaseModel):
    """The same suite scored with the fixed-window and SISS decoders at the same k"""
    model_config = ConfigDict(frozen=True)

    fixed: EvaluationReport
    siss: EvaluationReport

    @property
    def iou_all_gain(self) -> float:
        return self.siss.overall.iou_all - self.fixed.overall.iou_all

    @property
    def iou_tp_gain(self) -> float:
        return self.siss.overall.iou_tp - self.fixed.overall.iou_tp

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for name, report in (("fixed", self.fixed), ("siss", self.siss)):
            overall = report.overall
            rows.append({
                "decoder": name, "tp": overall.tp, "fp": overall.fp, "fn": overall.fn,
                "f1_spot": overall.f1_spot, "iou_tp": overall.iou_tp, "iou_all": overall.iou_all,
                "f1_rec": overall.f1_rec, "strs": overall.strs,
            })
        return pd.DataFrame(rows)


def run_ablation(manifest_path: PathLike, config: RunConfig, out_dir: Optional[PathLike] = None) -> AblationReport:
    """Score fixed-window against SISS decoding on one manifest"""
    manifest, videos = load_suite(manifest_path)
    reports = {}
    for decoder in ("fixed", "siss"):
        results = analyze_all(videos, manifest.priors_array, config, decoder)
        reports[decoder] = report_from_results(results, manifest.labels, config, decoder)
    ablation = AblationReport(**reports)
    logger.info(f"✅ Ablation: iou_all gain {ablation.iou_all_gain:+.4f}, iou_tp gain {ablation.iou_tp_gain:+.4f}")

    out_dir = out_dir or config.out_dir
    if out_dir is not None:
        out_dir = Path(out_dir)
        atomic_write_text(out_dir / "ablation.json", dump_json(ablation.model_dump(mode="json")))
        atomic_write_text(
            out_dir / "ablation.csv",
            ablation.to_frame().to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"),
        )
        atomic_write_text(out_dir / "ablation.md", ReportFormatter().format_ablation(ablation))
    return ablation


__all__ = [
    "VideoInput", "VideoResult", "load_suite", "label_track", "curve_frame", "analyze_video",
    "analyze_all", "report_from_results", "evaluate_manifest", "AblationReport", "run_ablation",
]

"""
Joint training of the two-head model on a synthetic suite, held-out
evaluation, and the leave-one-subject-out protocol.

Plain full-batch gradient descent: every epoch computes the gradient over all
training segments and takes one step of size lr.
"""
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator
from sklearn.utils.class_weight import compute_class_weight

from core.errors import DivergedLoss, InvalidLabels, InvalidManifest
from core.io import FLOAT_FORMAT, atomic_write_text, write_report
from core.types import Manifest, ProbabilityTrack
from tools.metrics import EvaluationReport
from tools.report_formatter import ReportFormatter
from training.model import (
    Batch,
    TaskWeights,
    TinyModel,
    forward,
    gradients,
    init_model,
    parameter_count,
    save_checkpoint,
    windows,
)
from training.sampling import Segment, corrupt_features, sample_segments
from utils.config import RunConfig
from workflow.pipeline import VideoInput, analyze_all, load_suite, report_from_results

PathLike = Union[str, Path]


class TrainConfig(BaseModel):
    """Training hyperparameters for the two-head model"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    lr: float = Field(default=3e-4, ge=0.0, description="Gradient descent step size")
    epochs: int = Field(default=50, ge=1)
    segment_len: int = Field(default=50, ge=1, description="Frames per training segment and inference chunk")
    neg_pos_ratio: float = Field(default=1.0, ge=0.0, description="Non-ME segments per ME segment")
    class_weights: Optional[Tuple[float, ...]] = Field(
        default=None, description="Per-class CE weights; balanced frame frequencies when absent"
    )
    seed: int = Field(default=0, ge=0)
    hidden: int = Field(default=8, ge=1)
    window: int = Field(default=5, ge=1, description="Odd context length in frames")
    shared: bool = Field(default=True, description="One trunk for both heads; False trains two single-task models")
    soft_targets: bool = Field(default=False, description="Triangular spotting targets instead of 0/1")
    spot_weight: float = Field(default=1.0, ge=0.0)
    rec_weight: float = Field(default=1.0, ge=0.0)
    holdout: int = Field(default=5, ge=0, description="Last videos (by video_id) kept out of training")

    @field_validator("window")
    @classmethod
    def validate_window(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError(f"window must be odd, got {v}")
        return v


# Larger step and more epochs so plain gradient descent converges on a desk-sized suite.
DESK_PRESET = TrainConfig(lr=0.3, epochs=3000, hidden=16, window=9)


class EpochLog(NamedTuple):
    epoch: int
    mse_term: float
    ce_term: float
    total: float


@dataclass
class TrainedModel:
    """Spotting and recognition heads; both point at one model when training was shared"""
    spot_model: TinyModel
    rec_model: TinyModel

    @property
    def shared(self) -> bool:
        return self.spot_model is self.rec_model

    def parameter_count(self) -> int:
        if self.shared:
            return parameter_count(self.spot_model)
        spot, rec = self.spot_model, self.rec_model
        return (
            spot.trunk_w.size + spot.trunk_b.size + spot.spot_w.size + spot.spot_b.size
            + rec.trunk_w.size + rec.trunk_b.size + rec.rec_w.size + rec.rec_b.size
        )

    def predict(self, features: np.ndarray, segment_len: int) -> Tuple[np.ndarray, np.ndarray]:
        """Run chunk by chunk (stride segment_len) and concatenate, as at training time"""
        spots, emos = [], []
        for start in range(0, features.shape[0], segment_len):
            chunk = features[start:start + segment_len]
            spot, emo = forward(self.spot_model, chunk)
            if not self.shared:
                _, emo = forward(self.rec_model, chunk)
            spots.append(spot)
            emos.append(emo)
        return np.concatenate(spots), np.concatenate(emos)


@dataclass
class TrainingRun:
    model: TrainedModel
    config: TrainConfig
    log: List[EpochLog]
    train_ids: List[str]
    holdout_ids: List[str] = field(default_factory=list)
    evaluation: Optional[EvaluationReport] = None


def make_batch(segments: Sequence[Segment], window: int) -> Batch:
    return Batch(
        x=np.vstack([windows(seg.features, window) for seg in segments]),
        spot_target=np.concatenate([seg.spot_target for seg in segments]),
        class_target=np.concatenate([seg.class_target for seg in segments]),
    )


def balanced_class_weights(class_target: np.ndarray, n_classes: int) -> Tuple[float, ...]:
    """Inverse frame frequency of each class present; absent classes weigh 1"""
    present = np.unique(class_target)
    weights = np.ones(n_classes)
    weights[present] = compute_class_weight("balanced", classes=present, y=class_target)
    return tuple(float(w) for w in weights)


def collect_segments(videos: Sequence[VideoInput], cfg: TrainConfig) -> List[Segment]:
    rng = np.random.default_rng(cfg.seed)
    segments = []
    for video in sorted(videos, key=lambda v: v.video_id):
        segments.extend(
            sample_segments(
                video.track, video.annotation, cfg.segment_len, cfg.neg_pos_ratio, rng, soft_targets=cfg.soft_targets
            )
        )
    return segments


def fit(model: TinyModel, batch: Batch, weights: TaskWeights, cfg: TrainConfig) -> List[EpochLog]:
    """Gradient descent in place; one log entry per epoch, measured before its step"""
    log = []
    for epoch in range(1, cfg.epochs + 1):
        grads, terms = gradients(model, batch, weights)
        if not np.isfinite(terms.total):
            raise DivergedLoss(epoch, terms.total)
        if cfg.lr > 0:
            model.apply_update(grads, cfg.lr)
        log.append(EpochLog(epoch, terms.mse, terms.ce, terms.total))
        if epoch == 1 or epoch % max(1, cfg.epochs // 10) == 0:
            logger.debug(f"epoch {epoch}: mse={terms.mse:.6f} ce={terms.ce:.6f} total={terms.total:.6f}")
    return log


def train_model(videos: Sequence[VideoInput], n_classes: int, cfg: TrainConfig) -> Tuple[TrainedModel, List[EpochLog]]:
    segments = collect_segments(videos, cfg)
    if not segments:
        raise InvalidManifest("no training segments: the training videos hold no events")
    batch = make_batch(segments, cfg.window)
    class_weights = cfg.class_weights or balanced_class_weights(batch.class_target, n_classes)
    if len(class_weights) != n_classes:
        raise InvalidLabels(f"class_weights has {len(class_weights)} values for {n_classes} classes")
    n_features = segments[0].features.shape[1]
    logger.info(
        f"🚀 Training on {len(segments)} segments ({batch.n_frames} frames), "
        f"{'shared trunk' if cfg.shared else 'two single-task models'}"
    )

    if cfg.shared:
        model = init_model(cfg.window, n_features, cfg.hidden, n_classes, seed=cfg.seed)
        weights = TaskWeights(class_weights, cfg.spot_weight, cfg.rec_weight)
        return TrainedModel(model, model), fit(model, batch, weights, cfg)

    spot_model = init_model(cfg.window, n_features, cfg.hidden, n_classes, seed=cfg.seed)
    rec_model = init_model(cfg.window, n_features, cfg.hidden, n_classes, seed=cfg.seed + 1)
    spot_log = fit(spot_model, batch, TaskWeights(class_weights, cfg.spot_weight, 0.0), cfg)
    rec_log = fit(rec_model, batch, TaskWeights(class_weights, 0.0, cfg.rec_weight), cfg)
    log = [
        EpochLog(s.epoch, s.mse_term, r.ce_term, cfg.spot_weight * s.mse_term + cfg.rec_weight * r.ce_term)
        for s, r in zip(spot_log, rec_log)
    ]
    return TrainedModel(spot_model, rec_model), log


def predict_track(model: TrainedModel, track: ProbabilityTrack, segment_len: int) -> ProbabilityTrack:
    """Model output for a whole video, from the corrupted features of its clean track"""
    spot, emo = model.predict(corrupt_features(track), segment_len)
    return ProbabilityTrack(
        video_id=track.video_id,
        subject_id=track.subject_id,
        fps=track.fps,
        spot=np.clip(spot, 0.0, 1.0),
        emo=emo,
        labels=track.labels,
    )


def evaluate_model(
    model: TrainedModel,
    videos: Sequence[VideoInput],
    manifest: Manifest,
    cfg: TrainConfig,
    run_config: Optional[RunConfig] = None,
) -> EvaluationReport:
    """Predicted tracks -> SISS decoding -> emotion assignment -> metrics"""
    run_config = (run_config or RunConfig()).with_overrides(decoder="siss")
    predicted = [
        VideoInput(track=predict_track(model, video.track, cfg.segment_len), annotation=video.annotation)
        for video in videos
    ]
    results = analyze_all(predicted, manifest.priors_array, run_config)
    return report_from_results(results, manifest.labels, run_config, "siss")


def write_training_log(log: Sequence[EpochLog], path: PathLike) -> Path:
    frame = pd.DataFrame(log, columns=list(EpochLog._fields))
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return atomic_write_text(path, buffer.getvalue())


def save_run(run: TrainingRun, out_dir: PathLike, tag: str = "model") -> None:
    out_dir = Path(out_dir)
    config = run.config.model_dump(mode="json")
    if run.model.shared:
        save_checkpoint(run.model.spot_model, out_dir / f"{tag}.json", {**config, "role": "shared"})
    else:
        save_checkpoint(run.model.spot_model, out_dir / f"{tag}_spot.json", {**config, "role": "spot"})
        save_checkpoint(run.model.rec_model, out_dir / f"{tag}_rec.json", {**config, "role": "rec"})
    write_training_log(run.log, out_dir / f"{tag}_log.csv")
    if run.evaluation is not None:
        write_report(run.evaluation, out_dir / f"{tag}_report.json")
    atomic_write_text(out_dir / f"{tag}.md", ReportFormatter().format_training(run.log, run.evaluation))
    logger.info(f"💾 Training artifacts written to {out_dir}")


def train_demo(
    manifest_path: PathLike,
    cfg: TrainConfig = TrainConfig(),
    run_config: Optional[RunConfig] = None,
    out_dir: Optional[PathLike] = None,
) -> TrainingRun:
    """Train on all but the last cfg.holdout videos and score the held-out ones"""
    manifest, videos = load_suite(manifest_path)
    videos = sorted(videos, key=lambda v: v.video_id)
    if cfg.holdout >= len(videos):
        raise InvalidManifest(f"holdout={cfg.holdout} leaves no training videos out of {len(videos)}")
    cut = len(videos) - cfg.holdout
    train_videos, holdout_videos = videos[:cut], videos[cut:]

    model, log = train_model(train_videos, len(manifest.labels), cfg)
    evaluation = evaluate_model(model, holdout_videos, manifest, cfg, run_config) if holdout_videos else None
    if evaluation is not None:
        logger.info(f"✅ Held-out spotting F1 {evaluation.overall.f1_spot:.4f}, STRS {evaluation.overall.strs:.4f}")

    run = TrainingRun(
        model=model,
        config=cfg,
        log=log,
        train_ids=[v.video_id for v in train_videos],
        holdout_ids=[v.video_id for v in holdout_videos],
        evaluation=evaluation,
    )
    if out_dir is not None:
        save_run(run, out_dir)
    return run


class Fold(NamedTuple):
    subject: str
    train_ids: List[str]
    test_ids: List[str]


def loso_folds(manifest: Manifest) -> List[Fold]:
    """One fold per subject: that subject's videos are tested, all others train"""
    subjects = manifest.subjects()
    if len(subjects) < 2:
        raise InvalidManifest(f"leave-one-subject-out needs at least 2 subjects, got {subjects}")
    folds = []
    for subject in subjects:
        test = sorted(e.video_id for e in manifest.entries if e.subject_id == subject)
        train = sorted(e.video_id for e in manifest.entries if e.subject_id != subject)
        folds.append(Fold(subject, train, test))
    return folds


@dataclass
class LosoRun:
    folds: List[Fold]
    logs: Dict[str, List[EpochLog]]
    evaluation: EvaluationReport


def train_loso(
    manifest_path: PathLike,
    cfg: TrainConfig = TrainConfig(),
    run_config: Optional[RunConfig] = None,
    out_dir: Optional[PathLike] = None,
) -> LosoRun:
    """Train one model per held-out subject; tallies of all held-out videos form one report"""
    manifest, videos = load_suite(manifest_path)
    by_id = {v.video_id: v for v in videos}
    run_config = (run_config or RunConfig()).with_overrides(decoder="siss")
    folds = loso_folds(manifest)

    logs: Dict[str, List[EpochLog]] = {}
    results = []
    for fold in folds:
        logger.info(f"🔍 Fold {fold.subject}: {len(fold.train_ids)} train / {len(fold.test_ids)} test videos")
        model, logs[fold.subject] = train_model([by_id[i] for i in fold.train_ids], len(manifest.labels), cfg)
        predicted = [
            VideoInput(track=predict_track(model, by_id[i].track, cfg.segment_len), annotation=by_id[i].annotation)
            for i in fold.test_ids
        ]
        results.extend(analyze_all(predicted, manifest.priors_array, run_config))

    evaluation = report_from_results(sorted(results, key=lambda r: r.video_id), manifest.labels, run_config, "siss")
    logger.info(f"✅ LOSO over {len(folds)} subjects: STRS {evaluation.overall.strs:.4f}")
    if out_dir is not None:
        out_dir = Path(out_dir)
        for subject, log in logs.items():
            write_training_log(log, out_dir / f"fold_{subject}_log.csv")
        write_report(evaluation, out_dir / "loso_report.json")
        atomic_write_text(out_dir / "loso.md", ReportFormatter().format_evaluation(evaluation, title="LOSO Evaluation"))
    return LosoRun(folds=folds, logs=logs, evaluation=evaluation)


__all__ = [
    "TrainConfig", "DESK_PRESET", "EpochLog", "TrainedModel", "TrainingRun", "make_batch",
    "balanced_class_weights", "collect_segments", "fit", "train_model", "predict_track",
    "evaluate_model", "write_training_log", "save_run", "train_demo", "Fold", "loso_folds",
    "LosoRun", "train_loso",
]

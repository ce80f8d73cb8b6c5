"""
Readers and writers for tracks, annotations, manifests, intervals and reports.

Every writer goes through atomic_write_text (temp file + rename); every
reader either returns a fully validated value or raises a typed error.
"""
import io
import json
import os
import re
import tempfile
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import ValidationError

from core.errors import (
    EmptyTrack,
    InvalidDocument,
    MalformedRow,
    MissingFile,
    NonContiguousFrames,
    ProbabilityOutOfRange,
    RowSumOutOfTolerance,
    UnknownLabel,
)
from core.types import (
    Annotation,
    GroundTruthEvent,
    Interval,
    LabeledInterval,
    Manifest,
    ProbabilityTrack,
)

PathLike = Union[str, Path]
T = TypeVar("T")

FLOAT_FORMAT = "%.17g"
HEADER_LINE = 1


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write text to path via a temp file in the same directory and os.replace"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def dump_json(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def load_json(path: PathLike) -> Any:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise MalformedRow(e.lineno, e.msg, path=str(path)) from e


def _build(path: PathLike, factory: Callable[[], T]) -> T:
    """Run a model constructor, reporting structural problems against the file"""
    try:
        return factory()
    except ValidationError as e:
        raise InvalidDocument(path, str(e)) from e
    except (KeyError, TypeError, AttributeError) as e:
        raise InvalidDocument(path, f"missing or mistyped field: {e}") from e


# ---------------------------------------------------------------- tracks

def _parse_header(columns: Sequence[str], path: Path) -> Tuple[str, ...]:
    columns = [str(c) for c in columns]
    if len(columns) < 4 or columns[0] != "frame" or columns[1] != "spot":
        raise MalformedRow(HEADER_LINE, "header must be frame,spot,p_<label0>,p_<label1>,...", path=str(path))
    labels = []
    for column in columns[2:]:
        if not column.startswith("p_") or len(column) <= 2:
            raise MalformedRow(HEADER_LINE, f"unexpected column {column!r}", path=str(path))
        if column[2:] in labels:
            raise MalformedRow(HEADER_LINE, f"duplicate label column {column!r}", path=str(path))
        labels.append(column[2:])
    return tuple(labels)


def _raw_header(path: Path) -> List[str]:
    # header=None keeps repeated names as written instead of mangling them to p_x.1
    first = pd.read_csv(path, header=None, nrows=1, dtype=str, keep_default_na=False, encoding="utf-8")
    return first.iloc[0].tolist()


def _to_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return np.nan


def _numeric_frame(raw: pd.DataFrame, path: Path) -> pd.DataFrame:
    # float() parses shortest-repr text exactly, so written values read back bit-identical
    numeric = raw.apply(lambda col: col.map(_to_float))
    bad = numeric.isna().to_numpy()
    if bad.any():
        row, col = (int(i) for i in np.argwhere(bad)[0])
        raise MalformedRow(
            row + HEADER_LINE + 1,
            f"non-numeric value {raw.iat[row, col]!r} in column {raw.columns[col]!r}",
            path=str(path),
        )
    return numeric


def read_track(
    path: PathLike,
    video_id: Optional[str] = None,
    subject_id: str = "",
    fps: float = 30.0,
    labels: Optional[Sequence[str]] = None,
) -> ProbabilityTrack:
    """Read a Track CSV (frame,spot,p_<label>...) into a validated ProbabilityTrack"""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)

    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise MalformedRow(HEADER_LINE, "empty file", path=str(path)) from e
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        line = int(match.group(1)) if match else HEADER_LINE
        raise MalformedRow(line, "wrong number of fields", path=str(path)) from e

    track_labels = _parse_header(_raw_header(path), path)
    if labels is not None and tuple(labels) != track_labels:
        unknown = [label for label in track_labels if label not in labels]
        raise UnknownLabel(unknown[0] if unknown else ",".join(track_labels), labels)
    if raw.empty:
        raise EmptyTrack(f"{path}: no frames")

    values = _numeric_frame(raw, path)
    frames = values["frame"].to_numpy(dtype=float)
    for row, found in enumerate(frames):
        if found != row:
            if not np.isfinite(found) or found != int(found):
                raise MalformedRow(row + 2, f"frame index {found!r} is not an integer", path=str(path))
            raise NonContiguousFrames(row + 2, row, int(found))

    spot = values["spot"].to_numpy(dtype=float)
    emo = values.iloc[:, 2:].to_numpy(dtype=float)
    try:
        track = ProbabilityTrack(
            video_id=video_id or path.stem,
            subject_id=subject_id,
            fps=fps,
            spot=spot,
            emo=emo,
            labels=track_labels,
        )
    except ProbabilityOutOfRange as e:
        raise ProbabilityOutOfRange(e.field, e.row, e.value, line=e.row + 2) from e
    except RowSumOutOfTolerance as e:
        raise RowSumOutOfTolerance(e.row, e.total, line=e.row + 2) from e

    logger.debug(f"📄 Read track {track.video_id}: T={track.n_frames}, N={track.n_classes}")
    return track


def track_to_csv(track: ProbabilityTrack) -> str:
    frame = pd.DataFrame(track.emo_array, columns=[f"p_{label}" for label in track.labels])
    frame.insert(0, "spot", track.spot_array)
    frame.insert(0, "frame", np.arange(track.n_frames))
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def write_track(track: ProbabilityTrack, path: PathLike) -> Path:
    return atomic_write_text(path, track_to_csv(track))


# ---------------------------------------------------------------- annotations

def annotation_to_dict(annotation: Annotation) -> Dict[str, Any]:
    return {
        "video_id": annotation.video_id,
        "subject_id": annotation.subject_id,
        "fps": annotation.fps,
        "events": [
            {
                "onset": event.interval.onset,
                "apex": event.interval.apex,
                "offset": event.interval.offset,
                "label": event.label,
            }
            for event in annotation.events
        ],
    }


def annotation_from_dict(data: Dict[str, Any]) -> Annotation:
    events = [
        GroundTruthEvent(
            interval=Interval(onset=e["onset"], apex=e["apex"], offset=e["offset"]),
            label=e["label"],
        )
        for e in data.get("events", [])
    ]
    return Annotation(
        video_id=data["video_id"],
        subject_id=data.get("subject_id", ""),
        fps=data.get("fps", 30.0),
        events=tuple(events),
    )


def read_annotation(path: PathLike, labels: Optional[Sequence[str]] = None) -> Annotation:
    data = load_json(path)
    annotation = _build(path, lambda: annotation_from_dict(data))
    if labels is not None:
        annotation.check_labels(labels)
    return annotation


def write_annotation(annotation: Annotation, path: PathLike) -> Path:
    return atomic_write_text(path, dump_json(annotation_to_dict(annotation)))


# ---------------------------------------------------------------- manifests

def read_manifest(path: PathLike) -> Manifest:
    data = load_json(path)
    return _build(path, lambda: Manifest.model_validate(data))


def write_manifest(manifest: Manifest, path: PathLike) -> Path:
    return atomic_write_text(path, dump_json(manifest.model_dump(mode="json")))


def resolve_entry_path(manifest_path: PathLike, relative: str) -> Path:
    """Manifest paths are relative to the manifest file's directory"""
    candidate = Path(relative)
    if candidate.is_absolute():
        return candidate
    return Path(manifest_path).parent / candidate


# ---------------------------------------------------------------- intervals

def write_intervals(
    intervals: Sequence[LabeledInterval], path: PathLike, video_id: str
) -> Path:
    records = [
        {
            "video_id": video_id,
            "onset": item.interval.onset,
            "apex": item.interval.apex,
            "offset": item.interval.offset,
            "label": item.label,
            "confidence": item.confidence,
        }
        for item in intervals
    ]
    return atomic_write_text(path, dump_json(records))


def read_intervals(path: PathLike) -> List[Tuple[str, LabeledInterval]]:
    data = load_json(path)
    if not isinstance(data, list):
        raise InvalidDocument(path, "intervals file must hold a JSON list")
    return _build(
        path,
        lambda: [
            (
                str(record["video_id"]),
                LabeledInterval(
                    interval=Interval(onset=record["onset"], apex=record["apex"], offset=record["offset"]),
                    label=record["label"],
                    confidence=record["confidence"],
                ),
            )
            for record in data
        ],
    )


# ---------------------------------------------------------------- reports

def write_report(report, path: PathLike) -> Tuple[Path, Path]:
    """Write an EvaluationReport as JSON plus its per-video CSV twin"""
    path = Path(path)
    json_path = atomic_write_text(path, dump_json(report.model_dump(mode="json")))
    buffer = io.StringIO()
    report.to_frame().to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    csv_path = atomic_write_text(path.with_suffix(".csv"), buffer.getvalue())
    logger.info(f"💾 Report written: {json_path} (+ {csv_path.name})")
    return json_path, csv_path


def read_report(path: PathLike):
    from tools.metrics import EvaluationReport

    data = load_json(path)
    return _build(path, lambda: EvaluationReport.model_validate(data))


__all__ = [
    "atomic_write_text", "dump_json", "load_json", "read_track", "write_track", "track_to_csv",
    "read_annotation", "write_annotation", "annotation_to_dict", "annotation_from_dict",
    "read_manifest", "write_manifest", "resolve_entry_path",
    "write_intervals", "read_intervals", "write_report", "read_report",
]

"""
Manifest evaluation, decoder ablation, run configuration and markdown reports
"""
import json

import pandas as pd
import pytest
from pydantic import ValidationError

from core.errors import InvalidDecoderConfig, InvalidDocument, InvalidInterval, MissingFile, UnknownLabel
from core.io import read_intervals, read_report
from tools.metrics import VideoTally, build_report
from tools.report_formatter import ReportFormatter
from training.trainer import EpochLog
from utils.config import RunConfig, Settings, load_run_config, read_config_file
from workflow.pipeline import evaluate_manifest, label_track, load_suite, run_ablation


def test_evaluate_writes_every_artifact(small_suite, tmp_path, labels):
    out = tmp_path / "eval"
    report = evaluate_manifest(small_suite, RunConfig(), out)

    assert read_report(out / "report.json") == report
    frame = pd.read_csv(out / "report.csv")
    assert frame["video_id"].tolist()[-1] == "ALL"
    assert len(frame) == 7
    assert "STRS" in (out / "report.md").read_text(encoding="utf-8")

    for i in range(6):
        video_id = f"vid{i:03d}"
        records = read_intervals(out / "intervals" / f"{video_id}.json")
        assert all(vid == video_id for vid, _ in records)
        curves = pd.read_csv(out / "curves" / f"{video_id}.csv")
        assert list(curves.columns) == ["frame", "spot", "decoded"] + [f"s_{label}" for label in labels]
        assert len(curves) == 200

    assert report.overall.strs == report.overall.f1_spot * report.overall.f1_rec
    assert report.overall.tp + report.overall.fn == 12


def test_curves_can_be_disabled(small_suite, tmp_path):
    evaluate_manifest(small_suite, RunConfig(write_curves=False), tmp_path)
    assert not (tmp_path / "curves").exists()


def test_missing_file_leaves_no_report(small_suite, tmp_path):
    (small_suite.parent / "tracks" / "vid003.csv").unlink()
    out = tmp_path / "eval"
    with pytest.raises(MissingFile):
        evaluate_manifest(small_suite, RunConfig(), out)
    assert not out.exists()


def test_thread_count_does_not_change_the_report(small_suite):
    single = evaluate_manifest(small_suite, RunConfig(threads=1))
    many = evaluate_manifest(small_suite, RunConfig(threads=4))
    assert single == many


def test_label_track_uses_fps_derived_k(track_factory):
    spot = [0.0] * 40
    spot[20] = 0.9
    track = track_factory(spot, fps=10.0)
    config = RunConfig(decoder="fixed")
    (item,) = label_track(track, [0.25] * 4, config)
    assert item.interval.length == 5
    (wide,) = label_track(track, [0.25] * 4, config.with_overrides(k=9))
    assert wide.interval.length == 9


def _write_predictions(directory, records_by_video):
    directory.mkdir(exist_ok=True)
    for video_id, records in records_by_video.items():
        (directory / f"{video_id}.json").write_text(json.dumps(records), encoding="utf-8")
    return directory


def _record(video_id, onset, apex, offset, label="negative"):
    return {"video_id": video_id, "onset": onset, "apex": apex, "offset": offset, "label": label, "confidence": 0.5}


def test_evaluate_external_predictions(small_suite, tmp_path):
    _, videos = load_suite(small_suite)
    records = {
        v.video_id: [
            _record(v.video_id, e.interval.onset, e.interval.apex, e.interval.offset, e.label)
            for e in v.annotation.events
        ]
        for v in videos
    }
    report = evaluate_manifest(small_suite, RunConfig(), predictions_dir=_write_predictions(tmp_path / "p", records))
    assert report.decoder == "predictions"
    assert (report.overall.tp, report.overall.fp, report.overall.fn) == (12, 0, 0)
    assert report.overall.iou_all == pytest.approx(1.0)
    assert report.overall.f1_rec == pytest.approx(1.0)


@pytest.mark.parametrize(
    "record, error",
    [
        (_record("vid000", 3, 4, 5, label="joy"), UnknownLabel),
        (_record("vid001", 3, 4, 5), InvalidDocument),
        (_record("vid000", 190, 195, 200), InvalidInterval),
    ],
)
def test_external_predictions_are_validated(small_suite, tmp_path, record, error):
    _, videos = load_suite(small_suite)
    records = {v.video_id: [] for v in videos}
    records["vid000"] = [record]
    out = tmp_path / "eval"
    with pytest.raises(error):
        evaluate_manifest(small_suite, RunConfig(), out, predictions_dir=_write_predictions(tmp_path / "p", records))
    assert not out.exists()


def test_ablation_scores_both_decoders(small_suite, tmp_path):
    ablation = run_ablation(small_suite, RunConfig(k=15), tmp_path)
    assert ablation.fixed.decoder == "fixed"
    assert ablation.siss.decoder == "siss"
    assert ablation.iou_all_gain == pytest.approx(ablation.siss.overall.iou_all - ablation.fixed.overall.iou_all)
    data = json.loads((tmp_path / "ablation.json").read_text(encoding="utf-8"))
    assert set(data) == {"fixed", "siss"}
    assert pd.read_csv(tmp_path / "ablation.csv")["decoder"].tolist() == ["fixed", "siss"]
    assert "Decoder Ablation" in (tmp_path / "ablation.md").read_text(encoding="utf-8")


def test_load_suite_orders_and_validates(small_suite):
    manifest, videos = load_suite(small_suite)
    assert [v.video_id for v in videos] == [e.video_id for e in manifest.entries]
    assert videos[1].track.subject_id == "sub01"


# ---------------------------------------------------------------- configuration

def test_run_config_overrides():
    base = RunConfig()
    assert base.with_overrides(k=None).k is None
    tuned = base.with_overrides(theta_low=0.1, theta_high=0.3, k=7)
    assert (tuned.theta_low, tuned.theta_high, tuned.k) == (0.1, 0.3, 7)
    assert tuned.decoder_config(30.0).k == 7
    assert base.decoder_config(60.0).k == 30
    with pytest.raises(InvalidDecoderConfig):
        base.with_overrides(theta_low=0.9)
    with pytest.raises(ValidationError):
        RunConfig(bogus=True)


def test_config_files(tmp_path):
    yaml_path = tmp_path / "run.yaml"
    yaml_path.write_text("decoder: fixed\nk: 11\npenalty:\n  mode: none\n", encoding="utf-8")
    config = load_run_config(yaml_path)
    assert (config.decoder, config.k, config.penalty.mode) == ("fixed", 11, "none")

    json_path = tmp_path / "run.json"
    json_path.write_text('{"averaging": "micro"}', encoding="utf-8")
    assert load_run_config(json_path).averaging == "micro"

    bad = tmp_path / "bad.json"
    bad.write_text('{"theta_low": 2}', encoding="utf-8")
    with pytest.raises(InvalidDocument):
        load_run_config(bad)
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(InvalidDocument):
        read_config_file(listing)
    with pytest.raises(MissingFile):
        read_config_file(tmp_path / "absent.yaml")
    assert load_run_config(None) == RunConfig()


def test_thread_setting_from_environment(monkeypatch):
    monkeypatch.setenv("ME_KIT_THREADS", "3")
    settings = Settings()
    assert settings.threads == 3
    assert settings.worker_count(8) == 3
    assert settings.worker_count(2) == 2
    monkeypatch.setenv("ME_KIT_THREADS", "many")
    assert Settings().threads >= 1


# ---------------------------------------------------------------- markdown

def _report():
    tallies = {
        "v0": ("s0", VideoTally(tp=2, fp=0, fn=0, overlap_ious=(0.9, 0.7), label_pairs=((0, 0), (1, 1)))),
        "v1": ("s1", VideoTally(tp=1, fp=1, fn=1, overlap_ious=(0.6,), label_pairs=((1, 0),))),
    }
    return build_report(tallies, ("negative", "positive"))


def test_evaluation_markdown_is_deterministic():
    formatter = ReportFormatter()
    text = formatter.format_evaluation(_report())
    assert text == formatter.format_evaluation(_report())
    assert "| negative | 1 | 0 |" in text
    assert "| v1 | s1 | 1 | 1 | 1 |" in text
    assert "**Spotting quality:** Moderate" in text


def test_per_video_table_is_capped():
    text = ReportFormatter(max_videos=1).format_evaluation(_report())
    assert "| v1 |" not in text
    assert "1 more videos" in text


def test_training_markdown():
    log = [EpochLog(1, 0.3, 1.2, 1.5), EpochLog(2, 0.2, 1.0, 1.2)]
    text = ReportFormatter().format_training(log)
    assert "**Epochs:** 2" in text
    assert "decreasing" in text
    assert "Held-out Evaluation" in ReportFormatter().format_training(log, _report())

"""
Markdown summaries of evaluation, ablation and training results
"""
from typing import List, Optional, Sequence

from tools.metrics import EvaluationReport, MetricsReport


class ReportFormatter:
    """Turns report models into readable markdown; output depends only on the report"""

    def __init__(self, max_videos: int = 50):
        self.max_videos = max_videos

    def format_evaluation(self, report: EvaluationReport, title: str = "Evaluation Report") -> str:
        overall = report.overall
        parts = [
            f"# 🔬 {title}",
            "",
            f"**Decoder:** {report.decoder}",
            f"**Videos:** {len(report.per_video)}",
            f"**Spotting quality:** {self._assess_spotting(overall)}",
            "",
            "---",
            "",
            "## 🎯 Analysis at a Glance",
            "",
            f"📊 **STRS:** {overall.strs:.4f} (spotting F1 {overall.f1_spot:.4f} x recognition F1 {overall.f1_rec:.4f})",
            "",
            "## 🔍 Spotting",
            "",
            "| TP | FP | FN | Precision | Recall | F1 | IoU_tp | IoU_all |",
            "|---:|---:|---:|---:|---:|---:|---:|---:|",
            f"| {overall.tp} | {overall.fp} | {overall.fn} | {overall.precision:.4f} | {overall.recall:.4f} "
            f"| {overall.f1_spot:.4f} | {overall.iou_tp:.4f} | {overall.iou_all:.4f} |",
            "",
            "## 🧪 Recognition",
            "",
            f"**{overall.averaging.capitalize()} F1:** {overall.f1_rec:.4f}  ",
            f"**UF1:** {overall.uf1:.4f}  ",
            f"**UAR:** {overall.uar:.4f}",
            "",
        ]
        parts.extend(self._confusion_table(overall))
        parts.extend(self._per_video_table(report))
        return "\n".join(parts) + "\n"

    def format_ablation(self, ablation) -> str:
        parts = [
            "# ⚖️ Decoder Ablation",
            "",
            "| Decoder | TP | FP | FN | F1 | IoU_tp | IoU_all | STRS |",
            "|---|---:|---:|---:|---:|---:|---:|---:|",
        ]
        for name, report in (("fixed", ablation.fixed), ("siss", ablation.siss)):
            o = report.overall
            parts.append(
                f"| {name} | {o.tp} | {o.fp} | {o.fn} | {o.f1_spot:.4f} | {o.iou_tp:.4f} | {o.iou_all:.4f} | {o.strs:.4f} |"
            )
        parts.extend([
            "",
            f"**IoU_all gain (siss - fixed):** {ablation.iou_all_gain:+.4f}  ",
            f"**IoU_tp gain (siss - fixed):** {ablation.iou_tp_gain:+.4f}",
            "",
        ])
        return "\n".join(parts)

    def format_training(self, epochs: Sequence, report: Optional[EvaluationReport] = None, title: str = "Training Run") -> str:
        parts = [f"# 🚀 {title}", ""]
        if epochs:
            first, last = epochs[0], epochs[-1]
            parts.extend([
                f"**Epochs:** {len(epochs)}",
                f"**Loss:** {first.total:.6f} -> {last.total:.6f} ({self._assess_trend(first.total, last.total)})",
                "",
            ])
        if report is not None:
            parts.append(self.format_evaluation(report, title="Held-out Evaluation"))
        return "\n".join(parts) + "\n"

    # Helper methods
    def _assess_spotting(self, overall: MetricsReport) -> str:
        if overall.tp + overall.fn == 0:
            return "No ground truth"
        if overall.f1_spot >= 0.8:
            return "Strong"
        elif overall.f1_spot >= 0.5:
            return "Moderate"
        return "Weak"

    def _assess_trend(self, first: float, last: float) -> str:
        if last < first:
            return "decreasing"
        elif last == first:
            return "flat"
        return "increasing"

    def _confusion_table(self, overall: MetricsReport) -> List[str]:
        if not overall.emotions:
            return []
        header = "| GT \\ Pred | " + " | ".join(overall.emotions) + " |"
        rule = "|---|" + "---:|" * len(overall.emotions)
        rows = [
            f"| {label} | " + " | ".join(str(c) for c in row) + " |"
            for label, row in zip(overall.emotions, overall.confusion)
        ]
        return ["### Confusion matrix (TP intervals)", "", header, rule, *rows, ""]

    def _per_video_table(self, report: EvaluationReport) -> List[str]:
        if not report.per_video:
            return []
        parts = [
            "## 📋 Per-video Breakdown",
            "",
            "| Video | Subject | TP | FP | FN | F1 | IoU_all |",
            "|---|---|---:|---:|---:|---:|---:|",
        ]
        for video in report.per_video[:self.max_videos]:
            m = video.metrics
            parts.append(
                f"| {video.video_id} | {video.subject_id} | {m.tp} | {m.fp} | {m.fn} | {m.f1_spot:.4f} | {m.iou_all:.4f} |"
            )
        hidden = len(report.per_video) - self.max_videos
        if hidden > 0:
            parts.append(f"\n*{hidden} more videos in the CSV report.*")
        parts.append("")
        return parts


__all__ = ["ReportFormatter"]

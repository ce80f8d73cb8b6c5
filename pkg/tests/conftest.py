"""
Shared fixtures for the me-kit test suite
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root / "src"))

from core.types import ProbabilityTrack  # noqa: E402
from tools.synth import SynthSpec, generate_suite  # noqa: E402
from utils.config import configure_logging  # noqa: E402

LABELS = ("neutral", "negative", "positive", "surprise")

configure_logging("WARNING")


def neutral_rows(n_frames: int, n_labels: int = len(LABELS)) -> np.ndarray:
    rows = np.zeros((n_frames, n_labels))
    rows[:, 0] = 1.0
    return rows


def make_track(spot, emo=None, labels=LABELS, video_id="v0", fps=30.0) -> ProbabilityTrack:
    spot = np.asarray(spot, dtype=float)
    emo = neutral_rows(spot.size, len(labels)) if emo is None else emo
    return ProbabilityTrack(video_id=video_id, fps=fps, spot=spot, emo=emo, labels=labels)


@pytest.fixture
def labels():
    return LABELS


@pytest.fixture
def track_factory():
    return make_track


@pytest.fixture
def small_suite(tmp_path):
    """Six short videos over three subjects"""
    spec = SynthSpec(n_frames=200, n_events=2, duration_range=(7, 15), noise_level=0.02)
    return generate_suite(spec, n_videos=6, base_seed=11, out_dir=tmp_path / "suite", n_subjects=3)

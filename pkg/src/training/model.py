"""
Minimal two-head model: a windowed tanh trunk shared by a logistic spotting
head and a softmax recognition head, with hand-derived gradients.

Inputs are per-frame feature rows (T x F). Each frame sees a window of W
frames centred on it, zero-padded at the edges, flattened to W*F values.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, NamedTuple, Optional, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core import FORMAT_VERSIONS
from core.errors import FeatureShapeMismatch, InvalidDocument, NonFiniteInput
from core.io import dump_json, load_json, atomic_write_text

PARAM_NAMES = ("trunk_w", "trunk_b", "spot_w", "spot_b", "rec_w", "rec_b")


@dataclass
class TinyModel:
    window: int
    trunk_w: np.ndarray  # (H, W*F)
    trunk_b: np.ndarray  # (H,)
    spot_w: np.ndarray  # (H,)
    spot_b: np.ndarray  # (1,)
    rec_w: np.ndarray  # (N, H)
    rec_b: np.ndarray  # (N,)

    @property
    def hidden(self) -> int:
        return self.trunk_w.shape[0]

    @property
    def n_features(self) -> int:
        return self.trunk_w.shape[1] // self.window

    @property
    def n_classes(self) -> int:
        return self.rec_w.shape[0]

    def params(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "TinyModel":
        return TinyModel(window=self.window, **{k: v.copy() for k, v in self.params().items()})

    def apply_update(self, grads: Dict[str, np.ndarray], lr: float) -> None:
        for name in PARAM_NAMES:
            getattr(self, name)[...] -= lr * grads[name]


def init_model(
    window: int, n_features: int, hidden: int, n_classes: int, seed: int = 0, zero: bool = False
) -> TinyModel:
    """Weights ~ N(0, 1/fan_in), biases 0; zero=True gives the all-zero model"""
    if window < 1 or window % 2 == 0:
        raise FeatureShapeMismatch(f"window must be a positive odd number, got {window}")
    fan_in = window * n_features
    rng = np.random.default_rng(seed)
    scale = 0.0 if zero else 1.0
    return TinyModel(
        window=window,
        trunk_w=scale * rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(hidden, fan_in)),
        trunk_b=np.zeros(hidden),
        spot_w=scale * rng.normal(0.0, 1.0 / np.sqrt(hidden), size=hidden),
        spot_b=np.zeros(1),
        rec_w=scale * rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(n_classes, hidden)),
        rec_b=np.zeros(n_classes),
    )


def parameter_count(model: TinyModel) -> int:
    return int(sum(p.size for p in model.params().values()))


def single_task_parameter_count(window: int, n_features: int, hidden: int, n_classes: int) -> int:
    """Spot-only model plus recognition-only model of the same sizes"""
    trunk = hidden * window * n_features + hidden
    return (trunk + hidden + 1) + (trunk + n_classes * hidden + n_classes)


def windows(features: np.ndarray, window: int) -> np.ndarray:
    """(T, F) -> (T, window*F) with zero-padded context"""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[0] < 1:
        raise FeatureShapeMismatch(f"features must be a non-empty (T, F) array, got shape {features.shape}")
    if not np.isfinite(features).all():
        raise NonFiniteInput("features contain NaN or infinite values")
    half = window // 2
    padded = np.pad(features, ((half, half), (0, 0)))
    view = sliding_window_view(padded, (window, features.shape[1]))
    return view.reshape(features.shape[0], window * features.shape[1])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class Activations(NamedTuple):
    hidden: np.ndarray
    spot: np.ndarray
    emo: np.ndarray


def forward_windows(model: TinyModel, x: np.ndarray) -> Activations:
    if x.shape[1] != model.trunk_w.shape[1]:
        raise FeatureShapeMismatch(f"model expects {model.trunk_w.shape[1]} inputs per frame, got {x.shape[1]}")
    h = np.tanh(x @ model.trunk_w.T + model.trunk_b)
    spot = _sigmoid(h @ model.spot_w + model.spot_b[0])
    emo = _softmax(h @ model.rec_w.T + model.rec_b)
    return Activations(h, spot, emo)


def forward(model: TinyModel, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-frame spotting probability (T,) and emotion distribution (T, N)"""
    out = forward_windows(model, windows(features, model.window))
    return out.spot, out.emo


@dataclass
class Batch:
    """Windowed inputs with per-frame targets, stacked over segments of equal length"""
    x: np.ndarray
    spot_target: np.ndarray
    class_target: np.ndarray

    @property
    def n_frames(self) -> int:
        return self.x.shape[0]


class LossBreakdown(NamedTuple):
    mse: float
    ce: float
    total: float


@dataclass(frozen=True)
class TaskWeights:
    class_weights: Tuple[float, ...]
    spot_weight: float = 1.0
    rec_weight: float = 1.0

    @property
    def class_array(self) -> np.ndarray:
        return np.asarray(self.class_weights, dtype=float)


def loss_terms(
    spot: np.ndarray, emo: np.ndarray, spot_target: np.ndarray, class_target: np.ndarray, weights: TaskWeights
) -> LossBreakdown:
    """Mean squared spotting error plus mean class-weighted cross-entropy"""
    n = spot.shape[0]
    mse = float(np.mean((spot - spot_target) ** 2))
    picked = emo[np.arange(n), class_target]
    ce = float(np.mean(weights.class_array[class_target] * -np.log(np.maximum(picked, np.finfo(float).tiny))))
    return LossBreakdown(mse, ce, weights.spot_weight * mse + weights.rec_weight * ce)


def loss(model: TinyModel, batch: Batch, weights: TaskWeights) -> LossBreakdown:
    out = forward_windows(model, batch.x)
    return loss_terms(out.spot, out.emo, batch.spot_target, batch.class_target, weights)


def gradients(model: TinyModel, batch: Batch, weights: TaskWeights) -> Tuple[Dict[str, np.ndarray], LossBreakdown]:
    """Analytic gradients of loss() with respect to every parameter"""
    out = forward_windows(model, batch.x)
    n = batch.n_frames
    terms = loss_terms(out.spot, out.emo, batch.spot_target, batch.class_target, weights)

    g_spot = weights.spot_weight * 2.0 * (out.spot - batch.spot_target) * out.spot * (1.0 - out.spot) / n
    onehot = np.zeros_like(out.emo)
    onehot[np.arange(n), batch.class_target] = 1.0
    g_rec = weights.rec_weight * weights.class_array[batch.class_target][:, None] * (out.emo - onehot) / n

    g_hidden = np.outer(g_spot, model.spot_w) + g_rec @ model.rec_w
    g_pre = g_hidden * (1.0 - out.hidden**2)

    grads = {
        "trunk_w": g_pre.T @ batch.x,
        "trunk_b": g_pre.sum(axis=0),
        "spot_w": out.hidden.T @ g_spot,
        "spot_b": np.array([g_spot.sum()]),
        "rec_w": g_rec.T @ out.hidden,
        "rec_b": g_rec.sum(axis=0),
    }
    return grads, terms


def finite_difference_gradients(
    model: TinyModel, objective: Callable[[TinyModel], float], step: float = 1e-5
) -> Dict[str, np.ndarray]:
    """Central differences of objective around model, one parameter at a time"""
    shifted = model.copy()
    numeric = {}
    for name, values in shifted.params().items():
        grad = np.zeros_like(values)
        flat, gflat = values.reshape(-1), grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            up = objective(shifted)
            flat[i] = original - step
            down = objective(shifted)
            flat[i] = original
            gflat[i] = (up - down) / (2.0 * step)
        numeric[name] = grad
    return numeric


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """Largest element-wise |a - b| / max(|a|, |b|, 1e-8)"""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.size == 0:
        return 0.0
    denominator = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)
    return float(np.max(np.abs(a - b) / denominator))


# ---------------------------------------------------------------- checkpoints

def save_checkpoint(model: TinyModel, path: Union[str, Path], config: Optional[Dict[str, Any]] = None) -> Path:
    document = {
        "format_version": FORMAT_VERSIONS["checkpoint_json"],
        "window": model.window,
        "config": config or {},
        "params": {name: values.tolist() for name, values in model.params().items()},
    }
    return atomic_write_text(path, dump_json(document))


def load_checkpoint(path: Union[str, Path]) -> Tuple[TinyModel, Dict[str, Any]]:
    document = load_json(path)
    try:
        params = {name: np.asarray(document["params"][name], dtype=float) for name in PARAM_NAMES}
        model = TinyModel(window=int(document["window"]), **params)
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidDocument(path, f"not a model checkpoint: {e}") from e
    if not all(np.isfinite(v).all() for v in params.values()):
        raise InvalidDocument(path, "checkpoint holds non-finite parameters")
    return model, dict(document.get("config", {}))


__all__ = [
    "TinyModel", "init_model", "parameter_count", "single_task_parameter_count",
    "windows", "forward", "forward_windows", "Batch", "TaskWeights", "LossBreakdown",
    "loss", "loss_terms", "gradients", "finite_difference_gradients", "relative_error",
    "save_checkpoint", "load_checkpoint", "PARAM_NAMES",
]

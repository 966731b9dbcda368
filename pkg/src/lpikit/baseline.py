"""One-vs-rest linear SVM over assembled feature vectors.

Solver: deterministic full-batch primal descent. Each epoch takes one exact
line search along the negative subgradient of

    P(w, b) = 0.5 ||w||^2 + C * sum_i max(0, 1 - y_i (w . x_i + b))

(the objective along a ray is convex piecewise-quadratic, so the step is an
exact breakpoint-scan argmin), then minimizes over the bias exactly (P is
convex piecewise-linear in b; the argmin is a breakpoint). Both steps are
exact minimizations over sets containing the current point, so the objective
is non-increasing per epoch by construction. Training stops when the max
parameter update in an epoch falls below tol, or at max_epochs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from lpikit.corpus import OrdinalClass
from lpikit.features import FeatureVector


class BaselineError(ValueError):
    pass


class SingleClass(BaselineError):
    pass


class DimMismatch(BaselineError):
    pass


class EmptyInput(BaselineError):
    pass


class ModelFileError(BaselineError):
    pass


class BadMagic(ModelFileError):
    pass


class VersionTooNew(ModelFileError):
    pass


class Truncated(ModelFileError):
    pass


@dataclass(frozen=True)
class SvmConfig:
    c: float = 1.0
    max_epochs: int = 1000
    tol: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise BaselineError(f"c must be positive, got {self.c}")
        if self.tol <= 0:
            raise BaselineError(f"tol must be positive, got {self.tol}")
        if self.max_epochs < 1:
            raise BaselineError(f"max_epochs must be >= 1, got {self.max_epochs}")


@dataclass(frozen=True)
class SvmModel:
    classes: tuple[OrdinalClass, ...]
    weights: np.ndarray  # (n_classes, feature_dim)
    biases: np.ndarray  # (n_classes,)
    config: SvmConfig
    feature_dim: int
    objective_histories: tuple[tuple[float, ...], ...] = field(default=(), compare=False)


def primal_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, c: float) -> float:
    margins = y * (X @ w + b)
    return 0.5 * float(w @ w) + c * float(np.maximum(0.0, 1.0 - margins).sum())


def primal_subgradient(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, c: float
) -> tuple[np.ndarray, float]:
    """Subgradient of the primal; hinge terms at margin exactly 1 contribute 0."""
    margins = y * (X @ w + b)
    active = margins < 1.0
    g_w = w - c * (y[active] @ X[active])
    g_b = -c * float(y[active].sum())
    return g_w, g_b


def _exact_line_search(
    w: np.ndarray,
    b: float,
    d_w: np.ndarray,
    d_b: float,
    X: np.ndarray,
    y: np.ndarray,
    c: float,
) -> float:
    """argmin over t >= 0 of P(w + t*d_w, b + t*d_b) via breakpoint scan."""
    m = y * (X @ w + b)
    u = y * (X @ d_w + d_b)
    alpha = 0.5 * float(d_w @ d_w)

    # Hinge terms that are active just after t = 0.
    active0 = (m < 1.0) | ((m == 1.0) & (u < 0.0))
    beta = float(w @ d_w) - c * float(u[active0].sum())

    # Event times where a hinge term toggles; every crossing raises the slope
    # by c*|u_i| (convexity).
    leaving = (u > 0.0) & (m < 1.0)
    entering = (u < 0.0) & (m > 1.0)
    toggles = leaving | entering
    times = (1.0 - m[toggles]) / u[toggles]
    bumps = c * np.abs(u[toggles])
    order = np.argsort(times, kind="stable")
    times = times[order]
    bumps = bumps[order]

    t_lo = 0.0
    for t_next, bump in zip(times, bumps):
        if 2.0 * alpha * t_lo + beta >= 0.0:
            return t_lo
        if alpha > 0.0:
            t_star = -beta / (2.0 * alpha)
            if t_star < t_next:
                return max(t_star, t_lo)
        beta += bump
        t_lo = float(t_next)
    if 2.0 * alpha * t_lo + beta >= 0.0:
        return t_lo
    if alpha > 0.0:
        return max(-beta / (2.0 * alpha), t_lo)
    return t_lo  # direction has no remaining descent


def _exact_bias(w: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Global minimizer over b of the hinge sum at fixed w (breakpoint argmin)."""
    breakpoints = y - X @ w  # b where margin_i crosses 1 (uses 1/y_i = y_i)
    n_pos = int((y > 0).sum())
    return float(np.sort(breakpoints)[n_pos - 1])


def _fit_binary(X: np.ndarray, y: np.ndarray, cfg: SvmConfig) -> tuple[np.ndarray, float, list[float]]:
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    history: list[float] = []
    for _ in range(cfg.max_epochs):
        w_prev, b_prev = w, b
        g_w, g_b = primal_subgradient(w, b, X, y, cfg.c)
        if g_w.any() or g_b != 0.0:
            t = _exact_line_search(w, b, -g_w, -g_b, X, y, cfg.c)
            w = w - t * g_w
            b = b - t * g_b
        b = _exact_bias(w, X, y)
        history.append(primal_objective(w, b, X, y, cfg.c))
        delta = max(float(np.max(np.abs(w - w_prev))), abs(b - b_prev))
        if delta < cfg.tol:
            break
    return w, b, history


def _to_matrix(features: Sequence[FeatureVector] | np.ndarray) -> np.ndarray:
    if isinstance(features, np.ndarray):
        X = np.asarray(features, dtype=np.float64)
        if X.ndim != 2:
            raise DimMismatch(f"feature array must be 2-D, got shape {X.shape}")
        return X
    if len(features) == 0:
        raise EmptyInput("no feature vectors")
    dims = {len(f.values) for f in features}
    if len(dims) != 1:
        raise DimMismatch(f"mixed feature dimensions {sorted(dims)}")
    return np.stack([np.asarray(f.values, dtype=np.float64) for f in features])


def train_ovr_svm(
    features: Sequence[FeatureVector] | np.ndarray,
    labels: Sequence[OrdinalClass],
    cfg: SvmConfig = SvmConfig(),
) -> SvmModel:
    """Fit one binary hinge-loss SVM per class present in the labels."""
    X = _to_matrix(features)
    if X.shape[0] == 0:
        raise EmptyInput("no training examples")
    if X.shape[0] != len(labels):
        raise DimMismatch(f"{X.shape[0]} feature rows vs {len(labels)} labels")
    classes = tuple(sorted({OrdinalClass(l) for l in labels}, key=lambda c: c.rank))
    if len(classes) < 2:
        raise SingleClass("training needs at least two distinct classes")

    label_ranks = np.array([OrdinalClass(l).rank for l in labels])
    weights = []
    biases = []
    histories = []
    for cls in classes:
        y = np.where(label_ranks == cls.rank, 1.0, -1.0)
        w, b, history = _fit_binary(X, y, cfg)
        weights.append(w)
        biases.append(b)
        histories.append(tuple(history))
    return SvmModel(
        classes=classes,
        weights=np.stack(weights),
        biases=np.array(biases),
        config=cfg,
        feature_dim=X.shape[1],
        objective_histories=tuple(histories),
    )


def decision_scores(model: SvmModel, x: FeatureVector | np.ndarray) -> np.ndarray:
    vec = x.values if isinstance(x, FeatureVector) else np.asarray(x, dtype=np.float64)
    if vec.shape != (model.feature_dim,):
        raise DimMismatch(f"feature length {vec.shape} != model dim {model.feature_dim}")
    return model.weights @ vec + model.biases


def predict(model: SvmModel, x: FeatureVector | np.ndarray) -> tuple[OrdinalClass, dict[OrdinalClass, float]]:
    """Argmax of per-class scores; ties go to the lowest rank (most potent)."""
    scores = decision_scores(model, x)
    winner = model.classes[int(np.argmax(scores))]  # first max = lowest rank
    return winner, {cls: float(s) for cls, s in zip(model.classes, scores)}


_MAGIC = "LPISVM"
_VERSION = 1


def save_model(model: SvmModel, sink: str | IO[str]) -> None:
    lines = [
        f"{_MAGIC}\t{_VERSION}",
        f"feature_dim\t{model.feature_dim}",
        f"config\t{model.config.c:.17g}\t{model.config.max_epochs}\t{model.config.tol:.17g}\t{model.config.seed}",
        "classes\t" + "\t".join(c.label for c in model.classes),
    ]
    for i, cls in enumerate(model.classes):
        lines.append(f"class\t{cls.label}")
        lines.append(f"bias\t{model.biases[i]:.17g}")
        lines.append("weights\t" + "\t".join(f"{v:.17g}" for v in model.weights[i]))
    lines.append("end")
    text = "\n".join(lines) + "\n"
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(text)


def load_model(source: str | IO[str]) -> SvmModel:
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    if not lines:
        raise Truncated("empty model file")
    head = lines[0].split("\t")
    if head[0] != _MAGIC:
        raise BadMagic(f"bad magic {head[0]!r}")
    if len(head) != 2 or not head[1].isdigit():
        raise ModelFileError("malformed version line")
    if int(head[1]) > _VERSION:
        raise VersionTooNew(f"file version {head[1]} > supported {_VERSION}")

    def expect(idx: int, tag: str) -> list[str]:
        if idx >= len(lines):
            raise Truncated(f"file ends before {tag!r} line")
        parts = lines[idx].split("\t")
        if parts[0] != tag:
            raise ModelFileError(f"expected {tag!r} line, got {parts[0]!r}")
        return parts

    dim = int(expect(1, "feature_dim")[1])
    cfg_parts = expect(2, "config")
    cfg = SvmConfig(
        c=float(cfg_parts[1]), max_epochs=int(cfg_parts[2]), tol=float(cfg_parts[3]), seed=int(cfg_parts[4])
    )
    class_parts = expect(3, "classes")
    classes = tuple(OrdinalClass[label] for label in class_parts[1:])
    if len(classes) < 2:
        raise ModelFileError("model must carry at least two classes")

    weights = []
    biases = []
    idx = 4
    for cls in classes:
        parts = expect(idx, "class")
        if parts[1] != cls.label:
            raise ModelFileError(f"class block order mismatch: {parts[1]} != {cls.label}")
        bias_parts = expect(idx + 1, "bias")
        weight_parts = expect(idx + 2, "weights")
        w = np.array([float(v) for v in weight_parts[1:]], dtype=np.float64)
        if w.size != dim:
            raise ModelFileError(f"class {cls.label}: {w.size} weights, expected {dim}")
        biases.append(float(bias_parts[1]))
        weights.append(w)
        idx += 3
    if idx >= len(lines) or lines[idx] != "end":
        raise Truncated("missing end marker")
    return SvmModel(
        classes=classes,
        weights=np.stack(weights),
        biases=np.array(biases),
        config=cfg,
        feature_dim=dim,
    )

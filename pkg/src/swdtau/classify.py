"""Classification of ``[tau, p]`` feature points and detection-quality metrics.

Three two-class models are fitted from scratch with numpy: linear and
quadratic Gaussian discriminants and a linear SVM trained by full-batch
subgradient descent. Label ``True`` is SWD; every score is oriented so that
larger means "more SWD", and a score of exactly 0 predicts non-SWD.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Literal, Sequence

import numpy as np

from .errors import DegenerateClass, SingleClass, UndefinedMetric
from .signal_model import FeaturePoint

Kind = Literal["lda", "qda", "linear_svm"]
KINDS: tuple[str, ...] = ("lda", "qda", "linear_svm")

COND_LIMIT = 1e12
SVM_LAMBDA = 0.01
SVM_ITERATIONS = 10_000


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def add(self, predicted: bool, actual: bool) -> "ConfusionMatrix":
        if actual:
            return ConfusionMatrix(self.tp + predicted, self.fp, self.tn, self.fn + (not predicted))
        return ConfusionMatrix(self.tp, self.fp + predicted, self.tn + (not predicted), self.fn)

    @property
    def sensitivity(self) -> float:
        if self.tp + self.fn == 0:
            raise UndefinedMetric("sensitivity undefined: no positive ground-truth cases")
        return self.tp / (self.tp + self.fn)

    @property
    def specificity(self) -> float:
        if self.tn + self.fp == 0:
            raise UndefinedMetric("specificity undefined: no negative ground-truth cases")
        return self.tn / (self.tn + self.fp)


def metrics(cm: ConfusionMatrix) -> tuple[float, float]:
    """``(sensitivity, specificity)`` = ``(tp/(tp+fn), tn/(tn+fp))``."""
    return cm.sensitivity, cm.specificity


def proportion_ci(p_hat: float, n: int, level: float = 0.95, method: str = "normal") -> tuple[float, float]:
    """Confidence interval for a binomial proportion, clamped to [0, 1].

    ``method="normal"`` is the Wald interval ``p +/- z sqrt(p(1-p)/n)``;
    ``method="wilson"`` is the Wilson score interval.
    """
    if not 0.0 <= p_hat <= 1.0:
        raise ValueError(f"p_hat must lie in [0, 1], got {p_hat}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    if method == "normal":
        half = z * np.sqrt(p_hat * (1.0 - p_hat) / n)
        lo, hi = p_hat - half, p_hat + half
    elif method == "wilson":
        denom = 1.0 + z * z / n
        centre = (p_hat + z * z / (2 * n)) / denom
        half = z * np.sqrt(p_hat * (1 - p_hat) / n + z * z / (4 * n * n)) / denom
        lo, hi = centre - half, centre + half
    else:
        raise ValueError(f"unknown CI method {method!r}")
    return max(0.0, float(lo)), min(1.0, float(hi))


@dataclass(frozen=True)
class RocCurve:
    points: list[tuple[float, float, float]]  # (fpr, tpr, threshold), threshold descending
    auc: float


def roc(scores: Sequence[float], truth: Sequence[bool]) -> RocCurve:
    """ROC sweep over every distinct score, highest threshold first.

    A sample is called positive when ``score >= threshold``. The first point
    is ``(0, 0, inf)``; AUC is the trapezoid area, so tied scores earn half
    credit.

    Raises
    ------
    SingleClass
        If `truth` lacks positives or negatives.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth, dtype=bool)
    if scores.shape != truth.shape:
        raise ValueError("scores and truth must have the same length")
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs both positive and negative ground truth")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    t = truth[order]
    tp = np.cumsum(t)
    fp = np.cumsum(~t)
    last_of_run = np.r_[s[1:] != s[:-1], True]
    tpr = np.r_[0.0, tp[last_of_run] / n_pos]
    fpr = np.r_[0.0, fp[last_of_run] / n_neg]
    thresholds = np.r_[np.inf, s[last_of_run]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    points = [(float(f), float(r), float(th)) for f, r, th in zip(fpr, tpr, thresholds)]
    return RocCurve(points, auc)


def _regularize(cov: np.ndarray) -> np.ndarray:
    cov = 0.5 * (cov + cov.T)
    if np.linalg.cond(cov) > COND_LIMIT:
        ridge = 1e-9 * np.trace(cov) / 2.0
        # identical points give a zero trace; fall back to a tiny absolute floor
        cov = cov + max(ridge, 1e-12) * np.eye(cov.shape[0])
    return cov


@dataclass
class ClassifierModel:
    kind: str
    means: np.ndarray = field(default=None)  # rows: [non-SWD, SWD]
    covariances: np.ndarray = field(default=None)  # (1, 2, 2) pooled or (2, 2, 2)
    log_priors: np.ndarray = field(default=None)
    weights: np.ndarray = field(default=None)
    bias: float = 0.0

    def decision(self, X) -> np.ndarray:
        """Real-valued score per row; > 0 means SWD."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.kind == "linear_svm":
            return X @ self.weights + self.bias
        if self.kind == "lda":
            inv = np.linalg.inv(self.covariances[0])
            lin = self.means @ inv  # (2, d)
            const = -0.5 * np.einsum("kd,kd->k", lin, self.means) + self.log_priors
            g = X @ lin.T + const
            return g[:, 1] - g[:, 0]
        if self.kind == "qda":
            g = np.empty((X.shape[0], 2))
            for k in range(2):
                cov = self.covariances[k]
                inv = np.linalg.inv(cov)
                _, logdet = np.linalg.slogdet(cov)
                d = X - self.means[k]
                g[:, k] = -0.5 * logdet - 0.5 * np.einsum("nd,de,ne->n", d, inv, d) + self.log_priors[k]
            return g[:, 1] - g[:, 0]
        raise ValueError(f"unknown classifier kind {self.kind!r}")


def _arrays(data: Sequence[FeaturePoint]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([[pt.tau, pt.p] for pt in data], dtype=np.float64).reshape(-1, 2)
    y = np.array([bool(pt.label) for pt in data], dtype=bool)
    return X, y


def _fit_svm(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimise ``lambda/2 |w|^2 + mean(hinge)`` on ``[x, 1]`` (bias regularised too).

    Deterministic full-batch subgradient descent, step ``1/(lambda t)``.
    """
    signs = np.where(y, 1.0, -1.0)
    Xa = np.hstack([X, np.ones((X.shape[0], 1))])
    M = signs[:, None] * Xa  # margin of sample i is M[i] @ w
    MT = np.ascontiguousarray(M.T) / M.shape[0]
    w = np.zeros(Xa.shape[1])
    for t in range(1, SVM_ITERATIONS + 1):
        active = (M @ w < 1.0).astype(np.float64)
        grad = SVM_LAMBDA * w - MT @ active
        w = w - grad / (SVM_LAMBDA * t)
    return w[:-1], float(w[-1])


def fit(kind: Kind, data: Sequence[FeaturePoint]) -> ClassifierModel:
    """Fit an LDA, QDA or linear SVM model on labelled feature points.

    Raises
    ------
    DegenerateClass
        If either class has fewer than two points.
    """
    X, y = _arrays(data)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos < 2 or n_neg < 2:
        raise DegenerateClass(f"need >= 2 points per class, got {n_pos} SWD / {n_neg} non-SWD")
    if kind == "linear_svm":
        w, b = _fit_svm(X, y)
        return ClassifierModel(kind, weights=w, bias=b)
    if kind not in ("lda", "qda"):
        raise ValueError(f"unknown classifier kind {kind!r}")
    groups = [X[~y], X[y]]
    means = np.array([g.mean(axis=0) for g in groups])
    log_priors = np.log(np.array([n_neg, n_pos], dtype=np.float64) / y.size)
    if kind == "lda":
        scatter = sum((g - m).T @ (g - m) for g, m in zip(groups, means))
        covs = _regularize(scatter / (y.size - 2))[None]
    else:
        covs = np.array([_regularize(np.cov(g, rowvar=False)) for g in groups])
    if not np.all(np.isfinite(covs)):
        raise DegenerateClass("covariance is not finite")
    return ClassifierModel(kind, means=means, covariances=covs, log_priors=log_priors)


def predict(model: ClassifierModel, point) -> tuple[bool, float]:
    """``(is_swd, score)`` for one point (FeaturePoint or ``[tau, p]``)."""
    vec = point.as_vector() if isinstance(point, FeaturePoint) else np.asarray(point, dtype=float)
    score = float(model.decision(vec)[0])
    return score > 0.0, score


def training_accuracy(model: ClassifierModel, data: Sequence[FeaturePoint]) -> float:
    X, y = _arrays(data)
    return float(np.mean((model.decision(X) > 0) == y))


def per_class_subsample(data: Sequence[FeaturePoint], per_class: int) -> list[FeaturePoint]:
    """Up to `per_class` evenly spaced points of each class, original order kept."""
    data = list(data)
    keep = set()
    for cls in (True, False):
        idx = [i for i, pt in enumerate(data) if bool(pt.label) == cls]
        if len(idx) > per_class:
            idx = [idx[j] for j in np.linspace(0, len(idx) - 1, per_class).round().astype(int)]
        keep.update(idx)
    return [data[i] for i in sorted(keep)]


@dataclass(frozen=True)
class LoocvResult:
    kind: str
    confusion: ConfusionMatrix
    scores: tuple[float, ...]  # held-out score per point; NaN for abstentions
    abstentions: tuple[int, ...]  # indices whose fold could not be fitted


def leave_one_out(kind: Kind, data: Sequence[FeaturePoint]) -> LoocvResult:
    """Leave-one-out cross-validation.

    A fold whose training set is degenerate abstains; the abstention counts
    against the held-out point (SWD becomes a false negative, non-SWD a false
    positive) and its index is listed in ``abstentions``.

    Raises
    ------
    DegenerateClass
        With fewer than 4 points or fewer than 2 points in a class.
    """
    data = list(data)
    _, y = _arrays(data)
    if len(data) < 4:
        raise DegenerateClass(f"leave-one-out needs >= 4 points, got {len(data)}")
    if y.sum() < 2 or (~y).sum() < 2:
        raise DegenerateClass("leave-one-out needs >= 2 points in each class")
    cm = ConfusionMatrix()
    scores = []
    abstained = []
    for i, held in enumerate(data):
        try:
            model = fit(kind, data[:i] + data[i + 1:])
        except DegenerateClass:
            abstained.append(i)
            scores.append(float("nan"))
            cm = cm.add(predicted=not held.label, actual=bool(held.label))
            continue
        is_swd, score = predict(model, held)
        scores.append(score)
        cm = cm.add(predicted=is_swd, actual=bool(held.label))
    return LoocvResult(kind, cm, tuple(scores), tuple(abstained))

"""Solution-bearing comment classification.

Lexical tf-idf + structural thread features feed an L2-regularized
logistic regression trained by full-batch gradient descent (deterministic,
no external solver). Embedding-fed variants consume precomputed vectors
from the shared `.emb` format; majority-vote ensembles may also include
opaque external prediction tables.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import Comment, IssueReport
from .errors import (
    CommentNotInThreadError,
    DimensionMismatchError,
    EmptySplitError,
    InvalidConfigError,
    IoFailureError,
    MalformedFileError,
    SameProjectError,
    SingleClassDatasetError,
)
from .textproc import tokenize

MODEL_VERSION = 1

STRUCTURAL_DIM = 6

_FENCE_RE = re.compile(r"```")
_INDENT_RE = re.compile(r"^ {4,}\S", re.MULTILINE)
_PATCH_URL_RE = re.compile(r"https?://\S*(commit|revision|attachment|pull|diff)\S*", re.IGNORECASE)


class ModelKind(str, Enum):
    LINEAR_TFIDF = "LINEAR_TFIDF"
    LINEAR_EMBEDDING = "LINEAR_EMBEDDING"
    NEAREST_CENTROID_EMBEDDING = "NEAREST_CENTROID_EMBEDDING"


@dataclass
class Vocabulary:
    terms: dict[str, int]          # term -> column
    idf: np.ndarray                # aligned with columns

    @property
    def size(self) -> int:
        return len(self.terms)


@dataclass
class CommentFeatures:
    tfidf: dict[str, float]
    structural: list[float]  # [rel_pos, log_tokens, code_block, patch_link, is_reporter, prior_comments]


@dataclass
class LabeledItem:
    issue_id: str
    comment_id: str
    features: CommentFeatures
    label: int
    embedding: np.ndarray | None = None


@dataclass
class LabeledDataset:
    items: list[LabeledItem]
    project_id: str


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 1e-4
    learning_rate: float = 0.5
    epochs: int = 500
    seed: int = 0
    balance: bool = True


@dataclass
class ClassifierModel:
    kind: ModelKind
    weights: np.ndarray
    bias: float
    vocabulary: Vocabulary | None = None
    scaling_min: list[float] = field(default_factory=lambda: [0.0] * STRUCTURAL_DIM)
    scaling_max: list[float] = field(default_factory=lambda: [1.0] * STRUCTURAL_DIM)
    threshold: float = 0.5
    training_meta: dict = field(default_factory=dict)
    centroid_neg: np.ndarray | None = None
    centroid_pos: np.ndarray | None = None


# ---------------------------------------------------------------------------
# features

def build_vocabulary(texts: Sequence[str]) -> Vocabulary:
    """Term -> column map with smoothed idf over the training texts."""
    df: dict[str, int] = {}
    for text in texts:
        for term in set(tokenize(text)):
            df[term] = df.get(term, 0) + 1
    terms = {term: i for i, term in enumerate(sorted(df))}
    n = len(texts)
    idf = np.array([math.log((n + 1) / (df[t] + 1)) + 1.0 for t in sorted(df)], dtype=np.float64)
    return Vocabulary(terms=terms, idf=idf)


def featurize(comment: Comment, thread: IssueReport, vocabulary: Vocabulary) -> CommentFeatures:
    """tf-idf (sublinear tf, l2-normalized, OOV dropped) + thread features."""
    try:
        position = [c.id for c in thread.comments].index(comment.id)
    except ValueError:
        raise CommentNotInThreadError(
            f"comment {comment.id!r} not in issue {thread.id!r}") from None

    counts: dict[str, int] = {}
    for term in tokenize(comment.text):
        if term in vocabulary.terms:
            counts[term] = counts.get(term, 0) + 1
    weights = {t: (1.0 + math.log(tf)) * vocabulary.idf[vocabulary.terms[t]]
               for t, tf in counts.items()}
    norm = math.sqrt(sum(w * w for w in weights.values()))
    if norm > 0:
        weights = {t: w / norm for t, w in weights.items()}

    n = len(thread.comments)
    rel_pos = position / (n - 1) if n > 1 else 0.0
    log_tokens = math.log(1 + len(comment.text.split()))
    has_code = 1.0 if (_FENCE_RE.search(comment.text) or _INDENT_RE.search(comment.text)) else 0.0
    has_patch = 1.0 if _PATCH_URL_RE.search(comment.text) else 0.0
    is_reporter = 1.0 if (thread.reporter is not None and comment.author == thread.reporter) else 0.0
    prior = 1.0 if any(c.author == comment.author for c in thread.comments[:position]) else 0.0
    return CommentFeatures(
        tfidf=weights,
        structural=[rel_pos, log_tokens, has_code, has_patch, is_reporter, prior],
    )


def build_dataset(issues: Sequence[IssueReport], project_id: str,
                  vocabulary: Vocabulary | None = None) -> tuple[LabeledDataset, Vocabulary]:
    """Featurize every gold-labeled comment in the given issues."""
    if vocabulary is None:
        texts = [c.text for issue in issues for c in issue.comments]
        vocabulary = build_vocabulary(texts)
    items = []
    for issue in issues:
        for comment in issue.comments:
            if comment.is_solution is None:
                continue
            items.append(LabeledItem(
                issue_id=issue.id,
                comment_id=comment.id,
                features=featurize(comment, issue, vocabulary),
                label=1 if comment.is_solution else 0,
            ))
    return LabeledDataset(items=items, project_id=project_id), vocabulary


# ---------------------------------------------------------------------------
# vector assembly

def _scale_structural(model: ClassifierModel, structural: Sequence[float]) -> np.ndarray:
    out = np.zeros(STRUCTURAL_DIM)
    for i, v in enumerate(structural):
        lo, hi = model.scaling_min[i], model.scaling_max[i]
        out[i] = (v - lo) / (hi - lo) if hi > lo else 0.0
    return out


def assemble_vector(model: ClassifierModel, features: CommentFeatures,
                    embedding: np.ndarray | None = None) -> np.ndarray:
    """Build the feature vector the model expects from raw features."""
    structural = _scale_structural(model, features.structural)
    if model.kind is ModelKind.LINEAR_TFIDF:
        if model.vocabulary is None:
            raise InvalidConfigError("LINEAR_TFIDF model has no vocabulary")
        dense = np.zeros(model.vocabulary.size)
        for term, w in features.tfidf.items():
            col = model.vocabulary.terms.get(term)
            if col is not None:
                dense[col] = w
        return np.concatenate([dense, structural])
    if embedding is None:
        raise DimensionMismatchError(f"{model.kind.value} model needs an embedding vector")
    return np.concatenate([np.asarray(embedding, dtype=np.float64), structural])


def _item_vector(model: ClassifierModel, item: LabeledItem) -> np.ndarray:
    return assemble_vector(model, item.features, item.embedding)


# ---------------------------------------------------------------------------
# training

def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_grad(params: np.ndarray, X: np.ndarray, y: np.ndarray,
                  lam: float, sample_weights: np.ndarray) -> tuple[float, np.ndarray]:
    """Weighted mean BCE + (lam/2)||w||^2 and its gradient.

    ``params`` is [w..., bias]; the bias is not regularized.
    """
    w, b = params[:-1], params[-1]
    z = X @ w + b
    p = _sigmoid(z)
    eps = 1e-12
    n = len(y)
    bce = -(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
    loss = float(np.sum(sample_weights * bce) / n + 0.5 * lam * np.dot(w, w))
    residual = sample_weights * (p - y) / n
    grad_w = X.T @ residual + lam * w
    grad_b = float(np.sum(residual))
    return loss, np.concatenate([grad_w, [grad_b]])


def _class_weights(y: np.ndarray, balance: bool) -> np.ndarray:
    n = len(y)
    n_pos = int(np.sum(y == 1))
    n_neg = n - n_pos
    if not balance or n_pos == 0 or n_neg == 0:
        return np.ones(n)
    per_class = {1: n / (2.0 * n_pos), 0: n / (2.0 * n_neg)}
    return np.array([per_class[int(v)] for v in y])


def fit_logistic(X: np.ndarray, y: np.ndarray, config: TrainConfig,
                 init: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Full-batch gradient descent with learning-rate halving on loss
    increase; accepted steps never increase the training loss."""
    n, d = X.shape
    params = np.zeros(d + 1) if init is None else np.asarray(init, dtype=np.float64).copy()
    sw = _class_weights(y, config.balance)
    lr = config.learning_rate
    loss, grad = loss_and_grad(params, X, y, config.lam, sw)
    for _ in range(config.epochs):
        while True:
            candidate = params - lr * grad
            new_loss, new_grad = loss_and_grad(candidate, X, y, config.lam, sw)
            if new_loss <= loss:
                params, loss, grad = candidate, new_loss, new_grad
                break
            lr *= 0.5
            if lr < 1e-15:
                return params[:-1], float(params[-1])
    return params[:-1], float(params[-1])


def train(dataset: LabeledDataset, config: TrainConfig,
          vocabulary: Vocabulary | None = None,
          kind: ModelKind = ModelKind.LINEAR_TFIDF) -> ClassifierModel:
    """Train a classifier over the dataset's feature view.

    LINEAR_TFIDF requires ``vocabulary``; embedding kinds require every
    item to carry an embedding vector.
    """
    labels = {item.label for item in dataset.items}
    if labels != {0, 1}:
        raise SingleClassDatasetError(
            f"training requires both classes, got labels {sorted(labels)}")
    if kind is ModelKind.LINEAR_TFIDF and vocabulary is None:
        raise InvalidConfigError("LINEAR_TFIDF training requires a vocabulary")

    structural = np.array([item.features.structural for item in dataset.items])
    scaling_min = structural.min(axis=0).tolist()
    scaling_max = structural.max(axis=0).tolist()

    model = ClassifierModel(
        kind=kind,
        weights=np.zeros(0),
        bias=0.0,
        vocabulary=vocabulary if kind is ModelKind.LINEAR_TFIDF else None,
        scaling_min=scaling_min,
        scaling_max=scaling_max,
        training_meta={
            "seed": config.seed,
            "epochs": config.epochs,
            "lambda": config.lam,
            "learning_rate": config.learning_rate,
        },
    )
    X = np.array([_item_vector(model, item) for item in dataset.items])
    y = np.array([item.label for item in dataset.items], dtype=np.float64)

    if kind is ModelKind.NEAREST_CENTROID_EMBEDDING:
        model.centroid_neg = X[y == 0].mean(axis=0)
        model.centroid_pos = X[y == 1].mean(axis=0)
        model.weights = np.zeros(X.shape[1])
        return model

    w, b = fit_logistic(X, y, config)
    model.weights = w
    model.bias = b
    return model


def continue_training(model: ClassifierModel, dataset: LabeledDataset,
                      config: TrainConfig) -> ClassifierModel:
    """Warm-start adaptation: continue gradient descent on new data,
    keeping the original vocabulary and scaling constants."""
    X = np.array([_item_vector(model, item) for item in dataset.items])
    y = np.array([item.label for item in dataset.items], dtype=np.float64)
    init = np.concatenate([model.weights, [model.bias]])
    w, b = fit_logistic(X, y, config, init=init)
    adapted = ClassifierModel(
        kind=model.kind,
        weights=w,
        bias=b,
        vocabulary=model.vocabulary,
        scaling_min=list(model.scaling_min),
        scaling_max=list(model.scaling_max),
        threshold=model.threshold,
        training_meta=dict(model.training_meta, adapted=True),
    )
    return adapted


# ---------------------------------------------------------------------------
# prediction

def predict(model: ClassifierModel, features) -> tuple[int, float]:
    """(label, probability) for a feature vector or CommentFeatures."""
    if isinstance(features, CommentFeatures):
        x = assemble_vector(model, features)
    else:
        x = np.asarray(features, dtype=np.float64)

    if model.kind is ModelKind.NEAREST_CENTROID_EMBEDDING:
        if x.shape != model.centroid_pos.shape:
            raise DimensionMismatchError(
                f"feature dim {x.shape[0]} != centroid dim {model.centroid_pos.shape[0]}")
        d_neg = float(np.linalg.norm(x - model.centroid_neg))
        d_pos = float(np.linalg.norm(x - model.centroid_pos))
        total = d_neg + d_pos
        prob = d_neg / total if total > 0 else 0.5
    else:
        if x.shape != model.weights.shape:
            raise DimensionMismatchError(
                f"feature dim {x.shape[0]} != model dim {model.weights.shape[0]}")
        prob = float(_sigmoid(np.array([float(np.dot(model.weights, x)) + model.bias]))[0])
    return (1 if prob >= model.threshold else 0), prob


@dataclass
class ExternalPredictions:
    """Opaque ensemble member backed by a TSV of precomputed predictions."""
    table: dict[tuple[str, str], tuple[int, float]]

    def lookup(self, issue_id: str, comment_id: str) -> tuple[int, float]:
        try:
            return self.table[(issue_id, comment_id)]
        except KeyError:
            raise MalformedFileError(
                f"no external prediction for ({issue_id}, {comment_id})") from None


def load_external_predictions(path: str | Path) -> ExternalPredictions:
    """TSV rows: issue-id <tab> comment-id <tab> label <tab> probability."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailureError(f"{path}: {exc}") from exc
    table = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise MalformedFileError(f"{path}:{lineno}: expected 4 tab-separated fields")
        table[(parts[0], parts[1])] = (int(parts[2]), float(parts[3]))
    return ExternalPredictions(table=table)


def _vote(votes: list[tuple[int, float]]) -> int:
    ones = sum(v for v, _ in votes)
    zeros = len(votes) - ones
    if ones > zeros:
        return 1
    if zeros > ones:
        return 0
    mean_prob = sum(p for _, p in votes) / len(votes)
    return 1 if mean_prob > 0.5 else 0


def ensemble_predict(models: Sequence[ClassifierModel], features) -> int:
    """Majority vote; ties go to the higher mean probability, then 0."""
    votes = [predict(m, features) for m in models]
    return _vote(votes)


def ensemble_predict_item(members: Sequence, item: LabeledItem) -> int:
    """Like ensemble_predict but supports external-prediction members,
    which are keyed by (issue, comment) ids."""
    votes = []
    for member in members:
        if isinstance(member, ExternalPredictions):
            votes.append(member.lookup(item.issue_id, item.comment_id))
        else:
            votes.append(predict(member, _item_vector(member, item)))
    return _vote(votes)


# ---------------------------------------------------------------------------
# evaluation

def evaluate(model_or_members, dataset: LabeledDataset) -> dict:
    """Binary P/R/F1 on the positive class plus confusion counts."""
    if not dataset.items:
        raise EmptySplitError("cannot evaluate on an empty dataset")
    members = model_or_members if isinstance(model_or_members, (list, tuple)) \
        else [model_or_members]
    tp = fp = fn = tn = 0
    for item in dataset.items:
        label = ensemble_predict_item(members, item)
        if label == 1 and item.label == 1:
            tp += 1
        elif label == 1:
            fp += 1
        elif item.label == 1:
            fn += 1
        else:
            tn += 1
    return metrics_from_confusion(tp, fp, fn, tn)


def metrics_from_confusion(tp: int, fp: int, fn: int, tn: int) -> dict:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1,
            "tp": tp, "fp": fp, "fn": fn, "tn": tn}


def transfer_evaluate(train_set: LabeledDataset, test_set: LabeledDataset,
                      adapt_fraction: float, config: TrainConfig,
                      vocabulary: Vocabulary | None = None,
                      kind: ModelKind = ModelKind.LINEAR_TFIDF) -> tuple[dict, dict]:
    """(zero-shot, adapted) metrics on the held-out tail of the test
    project; the first ceil(fraction * issues) issues (by id) adapt."""
    if train_set.project_id == test_set.project_id:
        raise SameProjectError(f"both datasets come from {train_set.project_id!r}")

    issue_ids = sorted({item.issue_id for item in test_set.items})
    n_adapt = math.ceil(adapt_fraction * len(issue_ids))
    adapt_ids = set(issue_ids[:n_adapt])
    adapt_items = [i for i in test_set.items if i.issue_id in adapt_ids]
    holdout_items = [i for i in test_set.items if i.issue_id not in adapt_ids]
    if not holdout_items:
        raise EmptySplitError("no held-out issues remain after the adaptation split")
    holdout = LabeledDataset(items=holdout_items, project_id=test_set.project_id)

    model = train(train_set, config, vocabulary=vocabulary, kind=kind)
    zero_shot = evaluate(model, holdout)
    if adapt_items:
        adapted_model = continue_training(
            model, LabeledDataset(items=adapt_items, project_id=test_set.project_id), config)
        adapted = evaluate(adapted_model, holdout)
    else:
        adapted = dict(zero_shot)
    return zero_shot, adapted


# ---------------------------------------------------------------------------
# serialization

def save_model(model: ClassifierModel, path: str | Path) -> None:
    data = {
        "model_version": MODEL_VERSION,
        "kind": model.kind.value,
        "weights": [float(v) for v in model.weights],
        "bias": model.bias,
        "scaling_min": model.scaling_min,
        "scaling_max": model.scaling_max,
        "threshold": model.threshold,
        "training_meta": model.training_meta,
    }
    if model.vocabulary is not None:
        data["vocabulary"] = model.vocabulary.terms
        data["idf"] = [float(v) for v in model.vocabulary.idf]
    if model.centroid_neg is not None:
        data["centroid_neg"] = [float(v) for v in model.centroid_neg]
        data["centroid_pos"] = [float(v) for v in model.centroid_pos]
    try:
        Path(path).write_text(
            json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8")
    except OSError as exc:
        raise IoFailureError(f"{path}: {exc}") from exc


def load_model(path: str | Path) -> ClassifierModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailureError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedFileError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if data.get("model_version") != MODEL_VERSION:
        raise MalformedFileError(f"{path}: unsupported model_version {data.get('model_version')!r}")
    vocabulary = None
    if "vocabulary" in data:
        vocabulary = Vocabulary(terms=data["vocabulary"],
                                idf=np.array(data["idf"], dtype=np.float64))
    return ClassifierModel(
        kind=ModelKind(data["kind"]),
        weights=np.array(data["weights"], dtype=np.float64),
        bias=float(data["bias"]),
        vocabulary=vocabulary,
        scaling_min=list(data["scaling_min"]),
        scaling_max=list(data["scaling_max"]),
        threshold=float(data["threshold"]),
        training_meta=dict(data["training_meta"]),
        centroid_neg=np.array(data["centroid_neg"]) if "centroid_neg" in data else None,
        centroid_pos=np.array(data["centroid_pos"]) if "centroid_pos" in data else None,
    )

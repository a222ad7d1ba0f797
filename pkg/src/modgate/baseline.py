"""Self-trained bag-of-words multinomial naive Bayes student.

Exists so the whole pipeline (distillation, metrics, gate service) runs
offline and deterministically; it makes no attempt to match hosted-model
accuracy.  Laplace smoothing with alpha 1.  Training deduplicates exact
(message_id, text, label) repeats, so re-feeding the same curated example
never shifts the model.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .domain import LabeledExample, TaxonomySpec
from .errors import EmptyCorpus
from .textutil import tokenize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BaselineModel:
    labels: tuple[str, ...]
    vocabulary: dict[str, int]
    token_counts: dict[str, dict[str, int]]   # label -> token -> count
    class_examples: dict[str, int]            # label -> training example count
    priors: dict[str, float]
    alpha: float = 1.0

    def total_tokens(self, label: str) -> int:
        return sum(self.token_counts[label].values())

    def to_dict(self) -> dict:
        return {
            "format": "modgate-baseline/1",
            "labels": list(self.labels),
            "vocabulary": self.vocabulary,
            "token_counts": self.token_counts,
            "class_examples": self.class_examples,
            "priors": self.priors,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "BaselineModel":
        return cls(
            labels=tuple(data["labels"]),
            vocabulary=dict(data["vocabulary"]),
            token_counts={l: dict(c) for l, c in data["token_counts"].items()},
            class_examples=dict(data["class_examples"]),
            priors=dict(data["priors"]),
            alpha=float(data.get("alpha", 1.0)),
        )


def train(
    examples: Iterable[LabeledExample],
    tax: TaxonomySpec | None = None,
    alpha: float = 1.0,
) -> BaselineModel:
    """Count-based training; order-insensitive and duplicate-insensitive.

    Declared classes (taxonomy labels) with no examples are dropped with a
    warning rather than failing the run.
    """
    if alpha <= 0:
        raise ValueError("smoothing constant must be positive")
    unique = {(ex.message_id, ex.text, ex.label) for ex in examples}
    if not unique:
        raise EmptyCorpus("no training examples")

    token_counts: dict[str, dict[str, int]] = {}
    class_examples: dict[str, int] = {}
    for _mid, text, label in unique:
        class_examples[label] = class_examples.get(label, 0) + 1
        counts = token_counts.setdefault(label, {})
        for token in tokenize(text):
            counts[token] = counts.get(token, 0) + 1

    if tax is not None:
        missing = [l for l in tax.labels if l not in class_examples]
        if missing:
            log.warning("dropping classes with no training examples: %s", missing)
        labels = tuple(l for l in tax.labels if l in class_examples)
    else:
        labels = tuple(sorted(class_examples))

    vocabulary = {
        token: i
        for i, token in enumerate(
            sorted({t for label in labels for t in token_counts[label]})
        )
    }
    total = sum(class_examples[l] for l in labels)
    priors = {l: class_examples[l] / total for l in labels}
    return BaselineModel(
        labels=labels,
        vocabulary=vocabulary,
        token_counts={l: dict(sorted(token_counts[l].items())) for l in labels},
        class_examples={l: class_examples[l] for l in labels},
        priors=priors,
        alpha=alpha,
    )


def predict(model: BaselineModel, text: str) -> tuple[str, dict[str, float]]:
    """Argmax label plus normalized posteriors.

    Unknown tokens are ignored; an all-unknown text falls back to the class
    priors.  Exact ties break toward the lexically smaller label.
    """
    tokens = [t for t in tokenize(text) if t in model.vocabulary]
    vocab_size = len(model.vocabulary)
    log_scores = {}
    for label in model.labels:
        score = math.log(model.priors[label])
        denom = model.total_tokens(label) + model.alpha * vocab_size
        counts = model.token_counts[label]
        for token in tokens:
            score += math.log((counts.get(token, 0) + model.alpha) / denom)
        log_scores[label] = score

    peak = max(log_scores.values())
    weights = {l: math.exp(s - peak) for l, s in log_scores.items()}
    norm = sum(weights.values())
    scores = {l: w / norm for l, w in weights.items()}
    best = max(sorted(scores), key=lambda l: scores[l])
    return best, scores


def save_model(model: BaselineModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, ensure_ascii=False, sort_keys=True)
        fh.write("\n")


def load_model(path: str) -> BaselineModel:
    with open(path, encoding="utf-8") as fh:
        return BaselineModel.from_dict(json.load(fh))

"""Flagging policy and threshold calibration.

The gate minimizes Type II errors (toxic passing as clean): hard labels
always flag, an uncertain not_toxic_not_spam score flags, and a scorer
outage flags everything (fail-closed).  Type I noise is the accepted cost
and is reported, never suppressed.
"""

from __future__ import annotations

import math
import threading
from collections import deque
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from ..domain import Message
from ..errors import EmptyInput
from .store import FlagRecord, FlagStore

NOT_TOXIC_NOT_SPAM = "not_toxic_not_spam"
MODEL_UNAVAILABLE_REASON = "model unavailable"


@dataclass(frozen=True)
class GatePolicy:
    tau: float = 0.7                                   # flag when ntns score < tau
    hard_flag_labels: tuple[str, ...] = ("toxic", "spam")

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must be in [0, 1]")


@dataclass(frozen=True)
class GateVerdict:
    flagged: bool
    label: str | None
    scores: Mapping[str, float]
    reason: str | None = None
    flag: FlagRecord | None = None


Scorer = Callable[[str], tuple[str, Mapping[str, float]]]


class ModerationGate:
    """Scores messages, persists flags before answering, and keeps a rolling
    per-channel buffer so each flag carries its k preceding messages."""

    def __init__(
        self,
        store: FlagStore,
        scorer: Scorer | None,
        policy: GatePolicy = GatePolicy(),
        context_size: int = 5,
    ):
        self.store = store
        self.scorer = scorer
        self.policy = policy
        self.context_size = context_size
        self._recent: dict[str, deque[str]] = {}
        self._lock = threading.Lock()

    def score_message(self, msg: Message) -> GateVerdict:
        with self._lock:
            buffer = self._recent.setdefault(
                msg.channel_id, deque(maxlen=self.context_size)
            )
            context = tuple(buffer)
            buffer.append(msg.text)

        if self.scorer is None:
            return self._fail_closed(msg, context, "no scorer configured")
        try:
            label, scores = self.scorer(msg.text)
        except Exception as exc:   # any scorer failure flags, never passes
            return self._fail_closed(msg, context, str(exc))

        reason = None
        if label in self.policy.hard_flag_labels:
            reason = f"predicted {label}"
        elif scores.get(NOT_TOXIC_NOT_SPAM, 0.0) < self.policy.tau:
            reason = (
                f"{NOT_TOXIC_NOT_SPAM} score "
                f"{scores.get(NOT_TOXIC_NOT_SPAM, 0.0):.3f} below tau {self.policy.tau}"
            )
        if reason is None:
            return GateVerdict(flagged=False, label=label, scores=scores)
        flag = self.store.create_flag(msg, label, scores, reason, context)
        return GateVerdict(flagged=True, label=label, scores=scores,
                           reason=reason, flag=flag)

    def _fail_closed(self, msg: Message, context: tuple[str, ...], detail: str) -> GateVerdict:
        flag = self.store.create_flag(
            msg, None, {}, f"{MODEL_UNAVAILABLE_REASON}: {detail}", context
        )
        return GateVerdict(flagged=True, label=None, scores={},
                           reason=MODEL_UNAVAILABLE_REASON, flag=flag)


@dataclass(frozen=True)
class CalibrationResult:
    tau: float
    achieved_recall: float
    target_recall: float
    toxic_total: int
    type_one_flags: int            # benign messages flagged at the chosen tau
    evaluated: int

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "achieved_recall": self.achieved_recall,
            "target_recall": self.target_recall,
            "toxic_total": self.toxic_total,
            "type_one_flags": self.type_one_flags,
            "evaluated": self.evaluated,
        }


def calibrate_tau(
    scored: Sequence[tuple[str, str, Mapping[str, float]]],
    policy: GatePolicy = GatePolicy(),
    target_recall: float = 1.0,
) -> CalibrationResult:
    """Smallest tau reaching the target toxic recall on a validation set.

    `scored` holds (gold_label, predicted_label, scores) per message.  Toxic
    recall is monotone in tau, so the candidates are just past each toxic
    message's ntns score; if even tau = 1 misses the target, 1 is returned
    with the achieved recall.
    """
    if not scored:
        raise EmptyInput("nothing to calibrate on")

    def flagged(pred: str, scores: Mapping[str, float], tau: float) -> bool:
        return pred in policy.hard_flag_labels or scores.get(
            NOT_TOXIC_NOT_SPAM, 0.0
        ) < tau

    toxic = [(p, s) for g, p, s in scored if g == "toxic"]
    candidates = {0.0}
    for pred, scores in toxic:
        if pred not in policy.hard_flag_labels:
            candidates.add(
                min(1.0, math.nextafter(scores.get(NOT_TOXIC_NOT_SPAM, 0.0), math.inf))
            )

    def recall(tau: float) -> float:
        if not toxic:
            return 1.0
        return sum(1 for p, s in toxic if flagged(p, s, tau)) / len(toxic)

    chosen = None
    for tau in sorted(candidates):
        if recall(tau) >= target_recall:
            chosen = tau
            break
    if chosen is None:
        chosen = 1.0
    type_one = sum(
        1
        for g, p, s in scored
        if g == NOT_TOXIC_NOT_SPAM and flagged(p, s, chosen)
    )
    return CalibrationResult(
        tau=chosen,
        achieved_recall=recall(chosen),
        target_recall=target_recall,
        toxic_total=len(toxic),
        type_one_flags=type_one,
        evaluated=len(scored),
    )

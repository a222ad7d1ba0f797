"""Shared data model: messages, taxonomies, labeled examples, annotation panels.

All values are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Mapping

from .errors import MissingAnnotator, UnknownLabel


class Task(str, Enum):
    INTENT = "intent"
    MODERATION = "moderation"
    CONTRIBUTION = "contribution"


class Source(str, Enum):
    TEACHER_ZERO_SHOT = "teacher_zero_shot"
    HUMAN = "human"
    STUDENT_MODEL = "student_model"


def canonical_label(label: str) -> str:
    """Canonical label form: trimmed, lowercase (snake_case labels pass through)."""
    return label.strip().lower()


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 instant ('Z' or offset form) to a UTC datetime at
    millisecond precision."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    ts = ts.astimezone(timezone.utc)
    return ts.replace(microsecond=(ts.microsecond // 1000) * 1000)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat(timespec="milliseconds").replace("+00:00", "Z")


@dataclass(frozen=True)
class Message:
    """One chat utterance."""

    id: str
    channel_id: str
    author_id: str
    timestamp: datetime
    text: str
    is_bot: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "channel_id": self.channel_id,
            "author_id": self.author_id,
            "timestamp": format_timestamp(self.timestamp),
            "content": self.text,
            "is_bot": self.is_bot,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Message":
        return cls(
            id=str(data["id"]),
            channel_id=str(data["channel_id"]),
            author_id=str(data["author_id"]),
            timestamp=parse_timestamp(str(data["timestamp"])),
            text=str(data["content"]),
            is_bot=bool(data.get("is_bot", False)),
        )


@dataclass(frozen=True)
class TaxonomySpec:
    """A classification task's label set plus the prose used in prompts."""

    task: Task
    labels: tuple[str, ...]
    definitions: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.labels:
            raise ValueError("taxonomy needs at least one label")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("taxonomy labels must be unique")
        for label in self.labels:
            if label != canonical_label(label):
                raise ValueError(f"label {label!r} is not in canonical form")

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def definition(self, label: str) -> str:
        return self.definitions.get(label, "")


# Definition prose deliberately never uses a sibling label as a standalone
# word, so a rendered prompt can name each label exactly once.
TAXONOMIES: dict[Task, TaxonomySpec] = {
    Task.INTENT: TaxonomySpec(
        task=Task.INTENT,
        labels=("crypto", "fan", "casual"),
        definitions={
            "crypto": "talk about coins, tokens, wallets, prices, trading, or drops",
            "fan": "talk about the show itself: characters, episodes, lore, or collectibles",
            "casual": "everyday chatter with no particular topic: greetings, small talk, jokes",
        },
    ),
    Task.MODERATION: TaxonomySpec(
        task=Task.MODERATION,
        labels=("toxic", "spam", "not_toxic_not_spam"),
        definitions={
            "toxic": "insults, harassment, hate, or threats directed at people",
            "spam": "unsolicited promotion, scams, repeated junk, or suspicious links",
            "not_toxic_not_spam": "an ordinary message that needs no moderator action",
        },
    ),
    Task.CONTRIBUTION: TaxonomySpec(
        task=Task.CONTRIBUTION,
        labels=(
            "na",
            "onboarding",
            "knowledge_tcg",
            "knowledge_fan",
            "knowledge_crypto",
            "content",
            "moderation",
            "suggestion",
        ),
        definitions={
            "na": "not a community-building message",
            "onboarding": "welcoming or guiding a newcomer into the community",
            "knowledge_tcg": "explains trading-card game mechanics or rules",
            "knowledge_fan": "shares lore or facts about the show and its universe",
            "knowledge_crypto": "explains wallets, tokens, or blockchain mechanics",
            "content": "original creative work: art, clips, guides, or stories",
            "moderation": "helps keep the space civil: de-escalates or reports problems",
            "suggestion": "proposes an improvement to the game or the community",
        },
    ),
}


def taxonomy_for(task: Task | str) -> TaxonomySpec:
    return TAXONOMIES[Task(task)]


@dataclass(frozen=True)
class LabeledExample:
    """A message (plus optional context) with a label and its provenance."""

    message_id: str
    text: str
    label: str
    source: Source
    context: tuple[str, ...] = ()
    annotator_id: str | None = None
    iteration: int = 0

    def to_dict(self) -> dict:
        return {
            "message_id": self.message_id,
            "text": self.text,
            "label": self.label,
            "source": self.source.value,
            "context": list(self.context),
            "annotator_id": self.annotator_id,
            "iteration": self.iteration,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "LabeledExample":
        return cls(
            message_id=str(data["message_id"]),
            text=str(data["text"]),
            label=str(data["label"]),
            source=Source(data.get("source", "human")),
            context=tuple(data.get("context") or ()),
            annotator_id=data.get("annotator_id"),
            iteration=int(data.get("iteration", 0)),
        )


def validate_example(ex: LabeledExample, tax: TaxonomySpec) -> LabeledExample:
    """Canonicalize the label and enforce the example invariants.

    The label is trimmed and lowercased, then checked against the taxonomy.
    Human examples must carry an annotator_id; for machine sources a stray
    annotator_id is dropped so the source/annotator invariant holds after
    validation.  Idempotent.
    """
    label = canonical_label(ex.label)
    if label not in tax:
        raise UnknownLabel(ex.label, tax.task.value)
    if ex.source is Source.HUMAN and not ex.annotator_id:
        raise MissingAnnotator(f"human-labeled example {ex.message_id} has no annotator_id")
    annotator = ex.annotator_id if ex.source is Source.HUMAN else None
    if label == ex.label and annotator == ex.annotator_id:
        return ex
    return replace(ex, label=label, annotator_id=annotator)


@dataclass(frozen=True)
class AnnotationMatrix:
    """Sparse (unit, annotator) -> label table from a grading panel."""

    units: tuple[str, ...]
    annotators: tuple[str, ...]
    values: Mapping[tuple[str, str], str]

    @classmethod
    def from_records(
        cls,
        records: list[tuple[str, str, str]],
        tax: TaxonomySpec | None = None,
    ) -> "AnnotationMatrix":
        """Build from (unit, annotator, label) triples; labels canonicalized
        and, when a taxonomy is given, checked against it."""
        units: list[str] = []
        annotators: list[str] = []
        values: dict[tuple[str, str], str] = {}
        for unit, annotator, label in records:
            label = canonical_label(label)
            if tax is not None and label not in tax:
                raise UnknownLabel(label, tax.task.value)
            if unit not in units:
                units.append(unit)
            if annotator not in annotators:
                annotators.append(annotator)
            values[(unit, annotator)] = label
        return cls(units=tuple(units), annotators=tuple(annotators), values=values)

    def unit_values(self, unit: str) -> list[str]:
        return [
            self.values[(unit, a)] for a in self.annotators if (unit, a) in self.values
        ]

"""Seeded synthetic chat corpora for offline runs, demos, and tests.

Messages are built from per-label signature tokens (aligned with the mock
provider's lexicon) mixed with shared filler words, so a noiseless mock
teacher recovers the generating label and the baseline student has real
signal to learn.
"""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

from .domain import LabeledExample, Message, Source, Task

_POOLS = {
    Task.INTENT: {
        "crypto": ["token", "wallet", "mint", "wen", "lambo", "airdrop", "gas",
                   "floor", "price", "moon"],
        "fan": ["doctor", "tardis", "dalek", "episode", "season", "lore",
                "regeneration", "screwdriver", "companion"],
        "casual": ["gm", "lol", "haha", "hey", "hello", "thanks", "nice",
                   "cool", "morning", "stream"],
    },
    Task.MODERATION: {
        "toxic": ["idiot", "moron", "stupid", "trash", "loser", "pathetic",
                  "garbage", "worthless"],
        "spam": ["giveaway", "promo", "click", "winner", "claim", "subscribe",
                 "discount", "selling"],
        "not_toxic_not_spam": ["gm", "hello", "thanks", "nice", "today",
                               "playing", "match", "later"],
    },
}

_WEIGHTS = {
    Task.INTENT: {"crypto": 0.25, "fan": 0.25, "casual": 0.5},
    Task.MODERATION: {"toxic": 0.2, "spam": 0.1, "not_toxic_not_spam": 0.7},
}

_FILLER = [
    "the", "and", "you", "this", "that", "with", "just", "what", "have",
    "really", "going", "about", "there", "think", "right", "some", "when",
    "been", "from", "into",
]

_EPOCH = datetime(2023, 4, 1, tzinfo=timezone.utc)


def make_messages(
    n: int,
    task: Task = Task.INTENT,
    seed: int = 7,
    channels: int = 3,
    authors: int = 40,
    prefix: str = "m",
) -> tuple[list[Message], dict[str, str]]:
    """Generate n messages plus the gold label of each, keyed by message id.

    Deterministic for a given seed; ids are prefix + running index.
    """
    rng = random.Random(seed)
    pools = _POOLS[task]
    labels = list(pools)
    weights = [_WEIGHTS[task][label] for label in labels]
    messages: list[Message] = []
    gold: dict[str, str] = {}
    for i in range(n):
        label = rng.choices(labels, weights=weights)[0]
        words = rng.sample(pools[label], rng.randint(1, 3))
        words += rng.sample(_FILLER, rng.randint(2, 4))
        rng.shuffle(words)
        mid = f"{prefix}{i:05d}"
        messages.append(
            Message(
                id=mid,
                channel_id=f"chan{i % channels}",
                author_id=f"user{rng.randrange(authors):03d}",
                timestamp=_EPOCH + timedelta(seconds=17 * i),
                text=" ".join(words),
            )
        )
        gold[mid] = label
    return messages, gold


def gold_examples(
    messages: list[Message],
    gold: dict[str, str],
    annotator_id: str = "oracle",
) -> list[LabeledExample]:
    """Human-source labeled examples for every message (holdout material)."""
    return [
        LabeledExample(
            message_id=m.id,
            text=m.text,
            label=gold[m.id],
            source=Source.HUMAN,
            annotator_id=annotator_id,
        )
        for m in messages
    ]

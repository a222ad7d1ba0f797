"""Persona assignment and community-level distribution statistics.

Personas are independent flags: a user is a crypto enthusiast with >= 3
crypto-labeled messages, a fan with >= 3 fan-labeled messages (both can
hold at once), and casual exactly when neither holds.  Label shares keep
an explicit unclassified remainder instead of renormalizing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .domain import Task, taxonomy_for
from .errors import EmptyInput

PERSONA_CRYPTO = "crypto_enthusiast"
PERSONA_FAN = "fan"
PERSONA_CASUAL = "casual"
PERSONA_THRESHOLD = 3
UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class PersonaProfile:
    author_id: str
    counts: Mapping[str, int]
    personas: frozenset[str]

    def to_dict(self) -> dict:
        return {
            "author_id": self.author_id,
            "counts": dict(self.counts),
            "personas": sorted(self.personas),
        }


@dataclass(frozen=True)
class CommunityStats:
    total_messages: int
    label_shares: Mapping[str, float]      # includes the unclassified remainder
    active_users: int
    persona_counts: Mapping[str, int]
    persona_shares: Mapping[str, float]

    def to_dict(self) -> dict:
        return {
            "total_messages": self.total_messages,
            "label_shares": dict(self.label_shares),
            "active_users": self.active_users,
            "persona_counts": dict(self.persona_counts),
            "persona_shares": dict(self.persona_shares),
        }


def assign_personas(counts: Mapping[str, int]) -> frozenset[str]:
    """Persona flags from one user's per-intent-label message counts.

    Depends only on the crypto and fan counts; never returns an empty set.
    """
    personas = set()
    if counts.get("crypto", 0) >= PERSONA_THRESHOLD:
        personas.add(PERSONA_CRYPTO)
    if counts.get("fan", 0) >= PERSONA_THRESHOLD:
        personas.add(PERSONA_FAN)
    if not personas:
        personas.add(PERSONA_CASUAL)
    return frozenset(personas)


def build_profiles(
    labeled: Iterable[tuple[str, str | None]],
) -> dict[str, PersonaProfile]:
    """Profiles from (author_id, intent label or None) pairs; every author
    of at least one message counts as active."""
    counts: dict[str, dict[str, int]] = {}
    for author_id, label in labeled:
        per_user = counts.setdefault(author_id, {})
        if label is not None:
            per_user[label] = per_user.get(label, 0) + 1
    return {
        author: PersonaProfile(author, per_user, assign_personas(per_user))
        for author, per_user in counts.items()
    }


def community_stats(
    labeled: list[tuple[str, str | None]],
    profiles: Mapping[str, PersonaProfile] | None = None,
) -> CommunityStats:
    """Message-level label shares and user-level persona distribution."""
    if not labeled:
        raise EmptyInput("no labeled messages")
    if profiles is None:
        profiles = build_profiles(labeled)
    total = len(labeled)
    tax = taxonomy_for(Task.INTENT)
    label_counts = {label: 0 for label in tax.labels}
    unclassified = 0
    for _author, label in labeled:
        if label in label_counts:
            label_counts[label] += 1
        else:
            unclassified += 1
    label_shares = {label: label_counts[label] / total for label in tax.labels}
    label_shares[UNCLASSIFIED] = unclassified / total

    persona_counts = {PERSONA_CRYPTO: 0, PERSONA_FAN: 0, PERSONA_CASUAL: 0}
    for profile in profiles.values():
        for persona in profile.personas:
            persona_counts[persona] += 1
    active = len(profiles)
    persona_shares = {p: c / active for p, c in persona_counts.items()}
    return CommunityStats(
        total_messages=total,
        label_shares=label_shares,
        active_users=active,
        persona_counts=persona_counts,
        persona_shares=persona_shares,
    )


def render_stats(stats: CommunityStats) -> str:
    """Text summary in the conversation-then-personas order."""
    def pct(x: float) -> str:
        return f"{100 * x:.0f}%"

    lines = [
        f"{stats.total_messages} messages across {stats.active_users} active users",
        f"conversation: {pct(stats.label_shares['casual'])} casual chatter, "
        f"{pct(stats.label_shares['fan'])} about the gaming universe, "
        f"{pct(stats.label_shares['crypto'])} about crypto"
        + (
            f", {pct(stats.label_shares[UNCLASSIFIED])} unclassified"
            if stats.label_shares.get(UNCLASSIFIED) else ""
        ),
        f"personas: {stats.persona_counts[PERSONA_CRYPTO]} crypto enthusiasts "
        f"({pct(stats.persona_shares[PERSONA_CRYPTO])}), "
        f"{stats.persona_counts[PERSONA_FAN]} fans "
        f"({pct(stats.persona_shares[PERSONA_FAN])}), "
        f"{stats.persona_counts[PERSONA_CASUAL]} casuals "
        f"({pct(stats.persona_shares[PERSONA_CASUAL])})",
    ]
    return "\n".join(lines)

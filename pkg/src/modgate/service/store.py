"""Durable flag queue backed by an append-only JSONL event log.

Every state change is one event line; opening the store replays the log,
so pending flags, verdicts, and the retraining examples survive restarts
byte-for-byte.  Moderation wants an audit trail anyway, so the log is the
database.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping

from ..domain import LabeledExample, Message, Source, Task, taxonomy_for
from ..errors import AlreadyResolved, UnknownFlag, UnknownLabel

PENDING = "pending"
RESOLVED = "resolved"


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds").replace(
        "+00:00", "Z"
    )


@dataclass(frozen=True)
class FlagRecord:
    flag_id: str
    message: Message
    predicted_label: str | None
    scores: Mapping[str, float]
    reason: str
    context: tuple[str, ...]
    status: str
    created_at: str
    verdict: str | None = None
    moderator_id: str | None = None
    resolved_at: str | None = None

    def to_dict(self) -> dict:
        return {
            "flag_id": self.flag_id,
            "message": self.message.to_dict(),
            "predicted_label": self.predicted_label,
            "scores": dict(self.scores),
            "reason": self.reason,
            "context": list(self.context),
            "status": self.status,
            "created_at": self.created_at,
            "verdict": self.verdict,
            "moderator_id": self.moderator_id,
            "resolved_at": self.resolved_at,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "FlagRecord":
        return cls(
            flag_id=data["flag_id"],
            message=Message.from_dict(data["message"]),
            predicted_label=data.get("predicted_label"),
            scores=dict(data.get("scores") or {}),
            reason=data.get("reason", ""),
            context=tuple(data.get("context") or ()),
            status=data["status"],
            created_at=data["created_at"],
            verdict=data.get("verdict"),
            moderator_id=data.get("moderator_id"),
            resolved_at=data.get("resolved_at"),
        )


class FlagStore:
    """Single-writer event log with snapshot-consistent reads."""

    def __init__(self, log_path: str | Path, clock: Callable[[], str] = _utc_now):
        self.log_path = Path(log_path)
        self.clock = clock
        self._lock = threading.Lock()
        self._flags: dict[str, FlagRecord] = {}
        self._seq = 0
        self._replay()

    def _replay(self) -> None:
        if not self.log_path.exists():
            return
        with self.log_path.open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                event = json.loads(line)
                self._apply(event)

    def _apply(self, event: dict) -> None:
        if event["type"] == "flag_created":
            record = FlagRecord.from_dict(event["flag"])
            self._flags[record.flag_id] = record
            seq = int(record.flag_id.lstrip("f") or 0)
            self._seq = max(self._seq, seq)
        elif event["type"] == "flag_resolved":
            record = self._flags[event["flag_id"]]
            self._flags[event["flag_id"]] = replace(
                record,
                status=RESOLVED,
                verdict=event["verdict"],
                moderator_id=event["moderator_id"],
                resolved_at=event["resolved_at"],
            )
        else:
            raise ValueError(f"unknown event type {event['type']!r}")

    def _append(self, event: dict) -> None:
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        line = json.dumps(event, ensure_ascii=False, sort_keys=True)
        with self.log_path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()

    # -- writes -------------------------------------------------------------

    def create_flag(
        self,
        message: Message,
        predicted_label: str | None,
        scores: Mapping[str, float],
        reason: str,
        context: tuple[str, ...] = (),
    ) -> FlagRecord:
        """Persist a new flag (write-ahead: the event hits disk before the
        record is returned).  Re-flagging a message that is already pending
        returns the existing flag instead of duplicating it."""
        with self._lock:
            for record in self._flags.values():
                if record.message.id == message.id and record.status == PENDING:
                    return record
            self._seq += 1
            record = FlagRecord(
                flag_id=f"f{self._seq:06d}",
                message=message,
                predicted_label=predicted_label,
                scores=dict(scores),
                reason=reason,
                context=context,
                status=PENDING,
                created_at=self.clock(),
            )
            self._append({"type": "flag_created", "flag": record.to_dict()})
            self._flags[record.flag_id] = record
            return record

    def resolve(self, flag_id: str, verdict: str, moderator_id: str) -> FlagRecord:
        """Record a moderator verdict; the status change and the retraining
        example are one event, hence atomic.  Double resolution is a client
        error, not an idempotent no-op."""
        tax = taxonomy_for(Task.MODERATION)
        if verdict not in tax:
            raise UnknownLabel(verdict, tax.task.value)
        with self._lock:
            record = self._flags.get(flag_id)
            if record is None:
                raise UnknownFlag(f"no flag with id {flag_id!r}")
            if record.status == RESOLVED:
                raise AlreadyResolved(f"flag {flag_id} was already resolved")
            resolved = replace(
                record,
                status=RESOLVED,
                verdict=verdict,
                moderator_id=moderator_id,
                resolved_at=self.clock(),
            )
            self._append(
                {
                    "type": "flag_resolved",
                    "flag_id": flag_id,
                    "verdict": verdict,
                    "moderator_id": moderator_id,
                    "resolved_at": resolved.resolved_at,
                }
            )
            self._flags[flag_id] = resolved
            return resolved

    # -- reads --------------------------------------------------------------

    def get(self, flag_id: str) -> FlagRecord:
        record = self._flags.get(flag_id)
        if record is None:
            raise UnknownFlag(f"no flag with id {flag_id!r}")
        return record

    def list_flags(
        self,
        status: str | None = None,
        page: int = 1,
        page_size: int = 50,
    ) -> tuple[list[FlagRecord], int]:
        """Stable (created_at, flag_id) ordering; returns (page, total)."""
        if page < 1 or page_size < 1:
            raise ValueError("page and page_size must be >= 1")
        with self._lock:
            records = [
                r for r in self._flags.values() if status is None or r.status == status
            ]
        records.sort(key=lambda r: (r.created_at, r.flag_id))
        start = (page - 1) * page_size
        return records[start : start + page_size], len(records)

    def counts(self) -> dict[str, int]:
        with self._lock:
            records = list(self._flags.values())
        return {
            "pending": sum(1 for r in records if r.status == PENDING),
            "resolved": sum(1 for r in records if r.status == RESOLVED),
        }

    def retraining_examples(self, since: str | None = None) -> list[LabeledExample]:
        """Human-source examples from resolved verdicts after `since`
        (ISO-8601); the verdict wins over the model's prediction."""
        with self._lock:
            records = [r for r in self._flags.values() if r.status == RESOLVED]
        records.sort(key=lambda r: (r.resolved_at, r.flag_id))
        out = []
        for r in records:
            if since is not None and r.resolved_at <= since:
                continue
            out.append(
                LabeledExample(
                    message_id=r.message.id,
                    text=r.message.text,
                    label=r.verdict,
                    source=Source.HUMAN,
                    context=r.context,
                    annotator_id=r.moderator_id,
                )
            )
        return out


def export_retraining_corpus(store: FlagStore, since: str | None = None) -> tuple[bytes, int]:
    """Resolved verdicts after `since` in the fine-tune wire format.

    The moderator's verdict, not the model's prediction, is what gets
    serialized.  No resolved flags yields an empty corpus with count 0.
    """
    from ..gateway import build_finetune_corpus

    examples = store.retraining_examples(since)
    if not examples:
        return b"", 0
    corpus, manifest = build_finetune_corpus(examples, taxonomy_for(Task.MODERATION))
    return corpus, manifest.total

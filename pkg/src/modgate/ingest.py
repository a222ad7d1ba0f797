"""Chat-export parsing, noise filtering, and context-window assembly.

Input formats (see README): JSONL with keys id, channel_id, author_id,
timestamp (ISO-8601), content, is_bot (optional); CSV with the same columns
and a header row.  Malformed lines are collected, never fatal.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Iterator

from .domain import Message
from .errors import UnknownFormat, UnreadableSource, UnsortedInput

FORMATS = ("jsonl", "csv")
_REQUIRED = ("id", "channel_id", "author_id", "timestamp", "content")


@dataclass(frozen=True)
class ExportRecord:
    """Outcome of parsing one input line."""

    line_no: int
    message: Message | None
    error: str | None = None


def parse_export(
    lines: Iterable[str], fmt: str = "jsonl"
) -> tuple[list[Message], list[ExportRecord]]:
    """Parse an export into messages plus a list of rejected lines.

    Every well-formed line yields one Message; malformed lines (bad syntax,
    missing fields, bad timestamps, duplicate ids) become ExportRecords with
    a reason.  Blank lines are skipped.
    """
    if fmt not in FORMATS:
        raise UnknownFormat(f"unknown export format {fmt!r}; expected one of {FORMATS}")
    parser = _parse_jsonl if fmt == "jsonl" else _parse_csv
    messages: list[Message] = []
    rejects: list[ExportRecord] = []
    seen_ids: set[str] = set()
    try:
        for line_no, payload, error in parser(lines):
            if error is not None:
                rejects.append(ExportRecord(line_no, None, error))
                continue
            try:
                msg = Message.from_dict(payload)
            except (KeyError, ValueError, TypeError) as exc:
                rejects.append(ExportRecord(line_no, None, f"bad field: {exc}"))
                continue
            if msg.id in seen_ids:
                rejects.append(ExportRecord(line_no, None, f"duplicate id {msg.id!r}"))
                continue
            seen_ids.add(msg.id)
            messages.append(msg)
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableSource(f"cannot read export: {exc}") from exc
    return messages, rejects


def _parse_jsonl(lines: Iterable[str]) -> Iterator[tuple[int, dict | None, str | None]]:
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            yield line_no, None, f"invalid JSON: {exc.msg}"
            continue
        if not isinstance(payload, dict):
            yield line_no, None, "line is not a JSON object"
            continue
        missing = [key for key in _REQUIRED if key not in payload]
        if missing:
            yield line_no, None, f"missing fields: {', '.join(missing)}"
            continue
        yield line_no, payload, None


def _parse_csv(lines: Iterable[str]) -> Iterator[tuple[int, dict | None, str | None]]:
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        return
    header = [h.strip() for h in header]
    missing = [key for key in _REQUIRED if key not in header]
    if missing:
        raise UnreadableSource(f"CSV header missing columns: {', '.join(missing)}")
    for row in reader:
        line_no = reader.line_num
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            yield line_no, None, f"expected {len(header)} columns, got {len(row)}"
            continue
        payload = dict(zip(header, row))
        if "is_bot" in payload:
            payload["is_bot"] = payload["is_bot"].strip().lower() in ("1", "true", "yes")
        yield line_no, payload, None


def load_export(path: str, fmt: str = "jsonl") -> tuple[list[Message], list[ExportRecord]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return parse_export(fh, fmt)
    except OSError as exc:
        raise UnreadableSource(f"cannot open {path}: {exc}") from exc


def serialize_messages(msgs: Iterable[Message]) -> list[str]:
    """JSONL lines for parse_export; parse(serialize(msgs)) round-trips."""
    return [json.dumps(m.to_dict(), ensure_ascii=False, sort_keys=True) for m in msgs]


def write_messages(path: str, msgs: Iterable[Message]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in serialize_messages(msgs):
            fh.write(line + "\n")


def load_bot_ids(path: str) -> set[str]:
    """Bot list file: one author_id per line, '#' starts a comment."""
    bots: set[str] = set()
    try:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                entry = line.split("#", 1)[0].strip()
                if entry:
                    bots.add(entry)
    except OSError as exc:
        raise UnreadableSource(f"cannot open bot list {path}: {exc}") from exc
    return bots


def filter_messages(msgs: list[Message], bot_ids: set[str] = frozenset()) -> list[Message]:
    """Drop whitespace-only messages and messages from known bot accounts.

    Order preserved; idempotent.
    """
    return [m for m in msgs if m.text.strip() and m.author_id not in bot_ids]


def _sort_key(msg: Message):
    # Timestamp ties break by message id for a deterministic order.
    return (msg.channel_id, msg.timestamp, msg.id)


def sort_messages(msgs: list[Message]) -> list[Message]:
    """Canonical (channel, timestamp, id) order expected by build_context."""
    return sorted(msgs, key=_sort_key)


def build_context(
    msgs: list[Message], k: int
) -> list[tuple[tuple[Message, ...], Message]]:
    """Attach up to k immediately preceding same-channel messages (oldest
    first) to each message.  Input must already be in canonical sort order."""
    if k < 0:
        raise ValueError("context window k must be non-negative")
    for prev, cur in zip(msgs, msgs[1:]):
        if _sort_key(prev) > _sort_key(cur):
            raise UnsortedInput(
                f"messages not sorted by (channel, timestamp, id) near id {cur.id!r}"
            )
    out: list[tuple[tuple[Message, ...], Message]] = []
    window: list[Message] = []
    channel: str | None = None
    for msg in msgs:
        if msg.channel_id != channel:
            channel = msg.channel_id
            window = []
        out.append((tuple(window[-k:]) if k else (), msg))
        window.append(msg)
    return out


def context_texts(window: tuple[Message, ...]) -> tuple[str, ...]:
    return tuple(m.text for m in window)

import datetime

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_message
from modgate.domain import Message, parse_timestamp
from modgate.errors import UnknownFormat, UnreadableSource, UnsortedInput
from modgate.ingest import (
    build_context,
    context_texts,
    filter_messages,
    load_bot_ids,
    parse_export,
    serialize_messages,
    sort_messages,
)

JSONL_FIXTURE = [
    '{"id": "a1", "channel_id": "c1", "author_id": "u1", '
    '"timestamp": "2023-04-01T10:00:00.000Z", "content": "gm frens"}',
    '{"id": "a2", "channel_id": "c1", "author_id": "u2", '
    '"timestamp": "2023-04-01T10:00:05.000Z", "content": "wen mint", "is_bot": false}',
    '{"id": "a3", "channel_id": "c2", "author_id": "bot9", '
    '"timestamp": "2023-04-01T10:00:07.500Z", "content": "welcome!", "is_bot": true}',
]


def test_parse_empty_file():
    assert parse_export([], "jsonl") == ([], [])


def test_parse_jsonl_fixture_matches_hand_parse():
    messages, rejects = parse_export(JSONL_FIXTURE, "jsonl")
    assert rejects == []
    assert [m.id for m in messages] == ["a1", "a2", "a3"]
    # hand-parsed oracle for line 2
    m = messages[1]
    assert m.channel_id == "c1"
    assert m.author_id == "u2"
    assert m.timestamp == parse_timestamp("2023-04-01T10:00:05Z")
    assert m.text == "wen mint"
    assert m.is_bot is False
    assert messages[2].is_bot is True


def test_parse_collects_truncated_line_without_aborting():
    lines = [JSONL_FIXTURE[0], JSONL_FIXTURE[1][:40], JSONL_FIXTURE[2]]
    messages, rejects = parse_export(lines, "jsonl")
    assert [m.id for m in messages] == ["a1", "a3"]
    assert len(rejects) == 1
    assert rejects[0].line_no == 2
    assert "JSON" in rejects[0].error


def test_parse_rejects_missing_fields_and_bad_timestamp_and_duplicates():
    lines = [
        '{"id": "x1", "channel_id": "c", "author_id": "u", "content": "no ts"}',
        '{"id": "x2", "channel_id": "c", "author_id": "u", '
        '"timestamp": "not-a-time", "content": "hm"}',
        JSONL_FIXTURE[0],
        JSONL_FIXTURE[0],
        "[1, 2]",
    ]
    messages, rejects = parse_export(lines, "jsonl")
    assert [m.id for m in messages] == ["a1"]
    assert [r.line_no for r in rejects] == [1, 2, 4, 5]
    assert "missing fields: timestamp" in rejects[0].error
    assert "duplicate id" in rejects[2].error


def test_parse_csv_with_header():
    lines = [
        "id,channel_id,author_id,timestamp,content,is_bot",
        'b1,c1,u1,2023-04-01T10:00:00Z,hello there,false',
        'b2,c1,u2,2023-04-01T10:00:01Z,"a, quoted message",true',
    ]
    messages, rejects = parse_export(lines, "csv")
    assert rejects == []
    assert messages[1].text == "a, quoted message"
    assert messages[1].is_bot is True


def test_parse_csv_requires_header():
    with pytest.raises(UnreadableSource):
        parse_export(["b1,c1,u1,2023-04-01T10:00:00Z,hi"], "csv")


def test_unknown_format():
    with pytest.raises(UnknownFormat):
        parse_export([], "parquet")


def test_serialize_parse_round_trip():
    messages, _ = parse_export(JSONL_FIXTURE, "jsonl")
    again, rejects = parse_export(serialize_messages(messages), "jsonl")
    assert rejects == []
    assert again == messages


@given(
    st.lists(
        st.builds(
            Message,
            id=st.uuids().map(str),
            channel_id=st.sampled_from(["c1", "c2"]),
            author_id=st.text(
                alphabet="abcdefghijklmnopqrstuvwxyz0123456789",
                min_size=1, max_size=6,
            ),
            timestamp=st.datetimes(
                min_value=datetime.datetime(2020, 1, 1),
                max_value=datetime.datetime(2024, 1, 1),
            ).map(lambda d: d.replace(
                tzinfo=datetime.timezone.utc,
                microsecond=(d.microsecond // 1000) * 1000)),
            text=st.text(max_size=40),
            is_bot=st.booleans(),
        ),
        max_size=8,
        unique_by=lambda m: m.id,
    )
)
def test_round_trip_property(messages):
    again, rejects = parse_export(serialize_messages(messages), "jsonl")
    assert rejects == []
    assert again == messages


def test_filter_drops_empty_and_bot_messages():
    msgs = [
        make_message("m1", text="hello"),
        make_message("m2", text="   "),
        make_message("m3", text=""),
        make_message("m4", author="bot1", text="automated"),
        make_message("m5", text="wen moon"),
    ]
    kept = filter_messages(msgs, {"bot1"})
    assert [m.id for m in kept] == ["m1", "m5"]


def test_filter_identity_when_clean():
    msgs = [make_message("m1"), make_message("m2", text="yo")]
    assert filter_messages(msgs, set()) == msgs


@given(
    st.lists(
        st.tuples(st.text(max_size=10), st.sampled_from(["u1", "u2", "bot"])),
        max_size=20,
    )
)
def test_filter_idempotent_and_never_grows(rows):
    msgs = [
        make_message(f"m{i}", author=author, text=text)
        for i, (text, author) in enumerate(rows)
    ]
    once = filter_messages(msgs, {"bot"})
    assert len(once) <= len(msgs)
    assert filter_messages(once, {"bot"}) == once


def test_bot_list_file(tmp_path):
    path = tmp_path / "bots.txt"
    path.write_text("# known bots\nbot1\nbot2  # trailing comment\n\n", encoding="utf-8")
    assert load_bot_ids(str(path)) == {"bot1", "bot2"}


def test_build_context_window_of_two():
    msgs = [
        make_message("m1", second=0),
        make_message("m2", second=1),
        make_message("m3", second=2),
    ]
    windows = build_context(msgs, 2)
    assert context_texts(windows[2][0]) == ("hello there", "hello there")
    assert [m.id for m in windows[2][0]] == ["m1", "m2"]


def test_build_context_zero_window_and_channel_boundary():
    msgs = sort_messages(
        [
            make_message("m1", channel="c1", second=0),
            make_message("m2", channel="c1", second=1),
            make_message("m3", channel="c2", second=2),
        ]
    )
    assert all(ctx == () for ctx, _ in build_context(msgs, 0))
    windows = build_context(msgs, 3)
    by_id = {focus.id: ctx for ctx, focus in windows}
    assert by_id["m1"] == ()          # first message of a channel
    assert by_id["m3"] == ()          # channel change resets the window
    assert [m.id for m in by_id["m2"]] == ["m1"]


def test_build_context_rejects_unsorted():
    msgs = [make_message("m2", second=5), make_message("m1", second=0)]
    with pytest.raises(UnsortedInput):
        build_context(msgs, 2)


def test_sort_breaks_timestamp_ties_by_id():
    msgs = [make_message("mB", second=1), make_message("mA", second=1)]
    assert [m.id for m in sort_messages(msgs)] == ["mA", "mB"]


@given(st.integers(min_value=0, max_value=4), st.integers(min_value=1, max_value=12))
def test_context_bounds_property(k, n):
    msgs = sort_messages(
        [make_message(f"m{i:02d}", channel=f"c{i % 2}", second=i) for i in range(n)]
    )
    for ctx, focus in build_context(msgs, k):
        assert len(ctx) <= k
        for prior in ctx:
            assert prior.channel_id == focus.channel_id
            assert (prior.timestamp, prior.id) < (focus.timestamp, focus.id)

import pytest
from hypothesis import given
from hypothesis import strategies as st

from modgate.domain import (
    LabeledExample,
    Source,
    Task,
    canonical_label,
    parse_timestamp,
    taxonomy_for,
    validate_example,
)
from modgate.errors import MissingAnnotator, UnknownLabel


def ex(label, source=Source.TEACHER_ZERO_SHOT, annotator=None):
    return LabeledExample(
        message_id="m1", text="hi", label=label, source=source, annotator_id=annotator
    )


def test_validate_canonicalizes_label(intent_tax):
    out = validate_example(ex(" Crypto "), intent_tax)
    assert out.label == "crypto"


def test_validate_accepts_table_row_label_unchanged(intent_tax):
    # "Fan" is a published intent row; its canonical form passes untouched.
    original = ex("fan")
    assert validate_example(original, intent_tax) is original


def test_validate_rejects_label_from_other_task(moderation_tax):
    # "violence" is the hosted moderation model's category, not a row of the
    # moderation taxonomy here.
    with pytest.raises(UnknownLabel):
        validate_example(ex("violence"), moderation_tax)


def test_validate_requires_annotator_for_human_source(intent_tax):
    with pytest.raises(MissingAnnotator):
        validate_example(ex("fan", source=Source.HUMAN), intent_tax)
    ok = validate_example(ex("fan", source=Source.HUMAN, annotator="a1"), intent_tax)
    assert ok.annotator_id == "a1"


def test_validate_drops_annotator_for_machine_source(intent_tax):
    out = validate_example(ex("fan", annotator="stray"), intent_tax)
    assert out.annotator_id is None


def test_validate_is_idempotent(intent_tax):
    once = validate_example(ex("  FAN"), intent_tax)
    assert validate_example(once, intent_tax) == once


@given(st.sampled_from(["crypto", "fan", "casual"]),
       st.text(alphabet=" \t", max_size=3), st.text(alphabet=" \t", max_size=3))
def test_validate_idempotent_under_whitespace_and_case(label, pre, post):
    tax = taxonomy_for(Task.INTENT)
    messy = ex(pre + label.upper() + post)
    once = validate_example(messy, tax)
    assert once.label == label
    assert validate_example(once, tax) == once


def test_taxonomy_label_sets_match_published_tables():
    assert taxonomy_for(Task.INTENT).labels == ("crypto", "fan", "casual")
    assert taxonomy_for(Task.MODERATION).labels == (
        "toxic", "spam", "not_toxic_not_spam"
    )
    assert taxonomy_for(Task.CONTRIBUTION).labels == (
        "na",
        "onboarding",
        "knowledge_tcg",
        "knowledge_fan",
        "knowledge_crypto",
        "content",
        "moderation",
        "suggestion",
    )


def test_canonical_label():
    assert canonical_label("  Not_Toxic_Not_Spam ") == "not_toxic_not_spam"


def test_parse_timestamp_handles_z_suffix_and_millis():
    ts = parse_timestamp("2023-05-01T12:00:00.123456Z")
    assert ts.microsecond == 123000
    assert ts.utcoffset().total_seconds() == 0
    assert parse_timestamp("2023-05-01T12:00:00.123+00:00") == parse_timestamp(
        "2023-05-01T12:00:00.123Z"
    )


def test_labeled_example_round_trips_through_dict():
    original = LabeledExample(
        message_id="m9",
        text="who is the doctor",
        label="fan",
        source=Source.HUMAN,
        context=("gm", "wen moon"),
        annotator_id="a1",
        iteration=2,
    )
    assert LabeledExample.from_dict(original.to_dict()) == original

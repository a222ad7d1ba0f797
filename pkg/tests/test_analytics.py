import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from modgate.analytics import (
    PERSONA_CASUAL,
    PERSONA_CRYPTO,
    PERSONA_FAN,
    assign_personas,
    build_profiles,
    community_stats,
    render_stats,
)
from modgate.errors import EmptyInput


def test_crypto_threshold_of_three():
    assert assign_personas({"crypto": 3, "fan": 0, "casual": 10}) == {PERSONA_CRYPTO}


def test_below_both_thresholds_is_casual():
    assert assign_personas({"crypto": 2, "fan": 2, "casual": 0}) == {PERSONA_CASUAL}


def test_overlapping_personas_allowed():
    # The published persona counts (343 + 243 + 716 over 1121 users) only ever
    # add up if crypto and fan overlap; flags are independent.
    assert assign_personas({"crypto": 5, "fan": 3, "casual": 1}) == {
        PERSONA_CRYPTO,
        PERSONA_FAN,
    }


def test_published_overlap_arithmetic():
    # 1121 active users, 716 casuals -> 405 in the crypto/fan union;
    # 343 + 243 - 405 = 181 users carry both flags.
    assert 343 + 243 - (1121 - 716) == 181


def test_personas_never_empty_and_casual_is_complement():
    assert assign_personas({}) == {PERSONA_CASUAL}
    assert assign_personas({"crypto": 99}) == {PERSONA_CRYPTO}


@given(
    st.dictionaries(
        st.sampled_from(["crypto", "fan", "casual"]),
        st.integers(min_value=0, max_value=10),
    )
)
def test_assign_depends_only_on_crypto_and_fan_counts(counts):
    personas = assign_personas(counts)
    stripped = {k: v for k, v in counts.items() if k in ("crypto", "fan")}
    assert assign_personas(stripped) == personas
    assert personas
    assert (PERSONA_CASUAL in personas) == (
        PERSONA_CRYPTO not in personas and PERSONA_FAN not in personas
    )


@given(
    st.dictionaries(
        st.sampled_from(["crypto", "fan", "casual"]),
        st.integers(min_value=0, max_value=6),
    )
)
def test_persona_monotonicity(counts):
    before = assign_personas(counts)
    more_crypto = dict(counts)
    more_crypto["crypto"] = more_crypto.get("crypto", 0) + 1
    after = assign_personas(more_crypto)
    assert PERSONA_CRYPTO in after or PERSONA_CRYPTO not in before
    # adding a casual message changes nothing about the crypto/fan flags
    more_casual = dict(counts)
    more_casual["casual"] = more_casual.get("casual", 0) + 1
    unchanged = assign_personas(more_casual)
    assert (PERSONA_CRYPTO in unchanged) == (PERSONA_CRYPTO in before)
    assert (PERSONA_FAN in unchanged) == (PERSONA_FAN in before)


def test_hand_counted_shares():
    labeled = [("u1", "casual"), ("u1", "casual"), ("u2", "fan"), ("u3", "crypto")]
    stats = community_stats(labeled)
    assert stats.label_shares["casual"] == 0.5
    assert stats.label_shares["fan"] == 0.25
    assert stats.label_shares["crypto"] == 0.25
    assert stats.label_shares["unclassified"] == 0.0
    assert stats.total_messages == 4
    assert stats.active_users == 3


def test_all_crypto_degenerate_share():
    stats = community_stats([("u1", "crypto"), ("u2", "crypto")])
    assert stats.label_shares["crypto"] == 1.0


def test_unclassified_remainder_reported_not_renormalized():
    stats = community_stats([("u1", "casual"), ("u2", None)])
    assert stats.label_shares["casual"] == 0.5
    assert stats.label_shares["unclassified"] == 0.5


def test_empty_input_rejected():
    with pytest.raises(EmptyInput):
        community_stats([])


def test_three_user_profile_fixture():
    labeled = (
        [("alice", "crypto")] * 3
        + [("alice", "casual")]
        + [("bob", "fan")] * 4
        + [("carol", "casual")] * 2
    )
    profiles = build_profiles(labeled)
    assert profiles["alice"].personas == {PERSONA_CRYPTO}
    assert profiles["bob"].personas == {PERSONA_FAN}
    assert profiles["carol"].personas == {PERSONA_CASUAL}
    stats = community_stats(labeled, profiles)
    assert stats.persona_counts == {
        PERSONA_CRYPTO: 1,
        PERSONA_FAN: 1,
        PERSONA_CASUAL: 1,
    }


def test_casual_count_is_users_minus_union_on_generated_population():
    rng = random.Random(8)
    labeled = []
    for u in range(200):
        for _ in range(rng.randint(1, 8)):
            labeled.append((f"u{u}", rng.choice(["crypto", "fan", "casual"])))
    profiles = build_profiles(labeled)
    stats = community_stats(labeled, profiles)
    union = sum(
        1
        for p in profiles.values()
        if p.personas & {PERSONA_CRYPTO, PERSONA_FAN}
    )
    assert stats.persona_counts[PERSONA_CASUAL] == stats.active_users - union


def test_render_stats_order_and_shares():
    labeled = [("u1", "casual"), ("u2", "fan"), ("u3", "crypto"), ("u4", "casual")]
    text = render_stats(community_stats(labeled))
    assert "50% casual chatter" in text
    assert text.index("casual chatter") < text.index("gaming universe")
    assert text.index("gaming universe") < text.index("about crypto")
    assert "personas:" in text

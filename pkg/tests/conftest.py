from datetime import datetime, timezone

import pytest

from modgate.domain import Message, Task, taxonomy_for


@pytest.fixture
def intent_tax():
    return taxonomy_for(Task.INTENT)


@pytest.fixture
def moderation_tax():
    return taxonomy_for(Task.MODERATION)


@pytest.fixture
def contribution_tax():
    return taxonomy_for(Task.CONTRIBUTION)


def make_message(mid="m1", channel="c1", author="u1", second=0, text="hello there",
                 is_bot=False):
    return Message(
        id=mid,
        channel_id=channel,
        author_id=author,
        timestamp=datetime(2023, 4, 1, 12, 0, second, tzinfo=timezone.utc),
        text=text,
        is_bot=is_bot,
    )

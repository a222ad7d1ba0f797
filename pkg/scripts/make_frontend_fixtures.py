#!/usr/bin/env python3
"""Regenerate the review console's service fixture file.

Captures real HTTP responses from the moderation service (three pending
flags, an intent eval report, persona stats) into
frontend/tests/fixtures/service_fixtures.json.  A Python-side contract test
re-runs this builder and fails if the committed fixture drifts from what
the service actually returns.
"""

import itertools
import json
from datetime import datetime, timezone
from pathlib import Path

from fastapi.testclient import TestClient

from modgate.agreement import krippendorff_alpha
from modgate.analytics import build_profiles, community_stats
from modgate.domain import AnnotationMatrix, Message
from modgate.metrics import ConfusionMatrix, report_from_matrix
from modgate.service.api import create_app
from modgate.service.gate import GatePolicy, ModerationGate
from modgate.service.store import FlagStore

REPO = Path(__file__).resolve().parent.parent
FIXTURE_PATH = REPO / "frontend" / "tests" / "fixtures" / "service_fixtures.json"

# the unique matrix consistent with the published intent table
INTENT_MATRIX = ConfusionMatrix(
    labels=("crypto", "fan", "casual"),
    counts=((33, 3, 5), (0, 40, 0), (3, 0, 32)),
)

LOW_ALPHA_PANEL = [
    ("u1", "A", "x"), ("u1", "B", "x"), ("u1", "C", "x"),
    ("u2", "A", "x"), ("u2", "B", "y"), ("u2", "C", "x"),
    ("u3", "A", "y"), ("u3", "B", "y"), ("u3", "C", "y"),
    ("u4", "A", "y"), ("u4", "B", "x"), ("u4", "C", "y"),
    ("u5", "A", "x"), ("u5", "B", "x"),
]


def scorer(text):
    words = text.lower().split()
    if any(w in ("idiot", "moron", "trash") for w in words):
        return "toxic", {"toxic": 0.9, "spam": 0.02, "not_toxic_not_spam": 0.08}
    if "giveaway" in words:
        return "spam", {"toxic": 0.02, "spam": 0.9, "not_toxic_not_spam": 0.08}
    return "not_toxic_not_spam", {"toxic": 0.02, "spam": 0.02,
                                  "not_toxic_not_spam": 0.96}


def message(mid, text, second, author="user7"):
    return Message(
        id=mid,
        channel_id="general",
        author_id=author,
        timestamp=datetime(2023, 4, 2, 9, 0, second, tzinfo=timezone.utc),
        text=text,
    )


def build_fixture(tmp_dir: Path) -> dict:
    counter = itertools.count()
    clock = lambda: f"2023-04-02T09:01:{next(counter):02d}.000Z"  # noqa: E731
    store = FlagStore(tmp_dir / "events.jsonl", clock=clock)
    gate = ModerationGate(store, scorer, GatePolicy(tau=0.7), context_size=3)

    report = report_from_matrix(INTENT_MATRIX)
    alpha = krippendorff_alpha(
        AnnotationMatrix.from_records(LOW_ALPHA_PANEL)
    ).alpha
    reports_doc = {
        "reports": [report.to_dict()],
        "macro_f1_series": [report.macro.f1],
        "recommendation": {"kind": "deploy", "alpha": alpha},
        "seed": 1337,
    }
    reports_path = tmp_dir / "manifest.json"
    reports_path.write_text(json.dumps(reports_doc), encoding="utf-8")

    labeled = (
        [("alice", "crypto")] * 3
        + [("alice", "casual")]
        + [("bob", "fan")] * 4
        + [("carol", "casual")] * 2
    )
    personas_doc = community_stats(labeled, build_profiles(labeled)).to_dict()
    personas_path = tmp_dir / "personas.json"
    personas_path.write_text(json.dumps(personas_doc), encoding="utf-8")

    app = create_app(gate, store, personas_path=personas_path,
                     reports_path=reports_path)
    client = TestClient(app)

    # context for the first flag, then three flags in a known order
    client.post("/v1/score", json={"message": message(
        "m100", "anyone up for a match tonight", 0).to_dict()})
    score_responses = []
    for mid, text, second in [
        ("m101", "you are an idiot and a moron", 1),
        ("m102", "free giveaway click fast", 2),
        ("m103", "what a trash take", 3),
    ]:
        response = client.post(
            "/v1/score", json={"message": message(mid, text, second).to_dict()}
        )
        score_responses.append(response.json())

    flags_pending = client.get(
        "/v1/flags", params={"status": "pending", "page": 1, "page_size": 50}
    ).json()
    stats_before = client.get("/v1/stats/service").json()

    # a resolution round-trip for the success + conflict payloads
    target = flags_pending["flags"][0]["flag_id"]
    resolve_ok = client.post(
        f"/v1/flags/{target}/verdict",
        json={"label": "toxic", "moderator_id": "mod-a"},
    )
    resolve_conflict = client.post(
        f"/v1/flags/{target}/verdict",
        json={"label": "spam", "moderator_id": "mod-b"},
    )
    stats_after = client.get("/v1/stats/service").json()
    flags_after = client.get(
        "/v1/flags", params={"status": "pending", "page": 1, "page_size": 50}
    ).json()

    return {
        "score_responses": score_responses,
        "flags_pending": flags_pending,
        "stats_before": stats_before,
        "resolve_success": {"status": resolve_ok.status_code,
                            "body": resolve_ok.json()},
        "resolve_conflict": {"status": resolve_conflict.status_code,
                             "body": resolve_conflict.json()},
        "stats_after_one_resolution": stats_after,
        "flags_after_one_resolution": flags_after,
        "reports": client.get("/v1/reports/eval").json(),
        "personas": client.get("/v1/stats/personas").json(),
    }


def main():
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        fixture = build_fixture(Path(tmp))
    FIXTURE_PATH.parent.mkdir(parents=True, exist_ok=True)
    FIXTURE_PATH.write_text(
        json.dumps(fixture, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {FIXTURE_PATH}")


if __name__ == "__main__":
    main()

"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with -s to see them).  Tolerances are pinned here, not
calibrated later."""

import json
import random
import socket
import time

import pytest

from conftest import make_message
from modgate import distill, synth
from modgate.agreement import krippendorff_alpha
from modgate.analytics import (
    PERSONA_CASUAL,
    PERSONA_CRYPTO,
    PERSONA_FAN,
    assign_personas,
    build_profiles,
    community_stats,
)
from modgate.domain import (
    AnnotationMatrix,
    LabeledExample,
    Source,
    Task,
    TaxonomySpec,
    taxonomy_for,
)
from modgate.errors import DegenerateAgreement
from modgate.gateway import (
    ProviderRef,
    build_finetune_corpus,
    build_provider,
    default_template,
    parse_finetune_corpus,
)
from modgate.metrics import (
    confusion_matrix,
    per_class_metrics,
    report_from_matrix,
    round_half_up,
)
from modgate.service.gate import GatePolicy, ModerationGate
from modgate.service.store import FlagStore, export_retraining_corpus
from oracles import brute_force_alpha, counting_metrics
from test_agreement import (
    FIXTURE_DROPPED_UNIT,
    FIXTURE_MISSING_CELL,
    FIXTURE_SYSTEMATIC_DISAGREEMENT,
)
from test_gateway import GOLDEN, human
from test_metrics import (
    INTENT_EXPECTED,
    INTENT_MATRIX,
    MODERATION_EXPECTED,
    MODERATION_MATRIX,
    assert_report_matches,
)


def _pass(name):
    print(f"[ACCEPTANCE] {name}: PASS")


def test_table2_reproduction_under_one_second():
    started = time.perf_counter()
    assert_report_matches(INTENT_MATRIX, INTENT_EXPECTED)
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    _pass(f"table-2 reproduction (all 12 cells at 2dp, {elapsed * 1000:.0f} ms)")


def test_table3_reproduction():
    assert_report_matches(MODERATION_MATRIX, MODERATION_EXPECTED)
    _pass("table-3 reproduction (all cells at 2dp)")


def test_table4_zero_row_and_oracle_equivalence():
    # support-1 class never predicted -> 0/0/0 exactly
    tax = taxonomy_for(Task.CONTRIBUTION)
    gold = ["moderation"] + ["na"] * 9
    pred = ["na"] * 10
    m = per_class_metrics(confusion_matrix(gold, pred, tax))["moderation"]
    assert (m.precision, m.recall, m.f1, m.support) == (0.0, 0.0, 0.0, 1)

    # full table 4 is under-determined; the substitute check: agreement with
    # a counting oracle on 1,000 random matrices up to 10x10, tol 1e-12
    rng = random.Random(20230402)
    for _ in range(1000):
        k = rng.randint(2, 10)
        labels = tuple(f"l{i}" for i in range(k))
        n = rng.randint(1, 50)
        g = [rng.choice(labels) for _ in range(n)]
        p = [rng.choice(labels) for _ in range(n)]
        got = per_class_metrics(
            confusion_matrix(g, p, TaxonomySpec(task=Task.CONTRIBUTION, labels=labels))
        )
        want = counting_metrics(g, p, labels)
        for label in labels:
            gp, gr, gf, gs = (got[label].precision, got[label].recall,
                              got[label].f1, got[label].support)
            wp, wr, wf, ws = want[label]
            assert abs(gp - wp) <= 1e-12
            assert abs(gr - wr) <= 1e-12
            assert abs(gf - wf) <= 1e-12
            assert gs == ws
    _pass("table-4 zero-row convention + 1000-matrix oracle equivalence (1e-12)")


def test_krippendorff_alpha_against_brute_force():
    fixtures = [
        FIXTURE_MISSING_CELL,            # includes a missing cell
        FIXTURE_DROPPED_UNIT,            # includes a dropped single-value unit
        FIXTURE_SYSTEMATIC_DISAGREEMENT, # negative alpha
    ]
    for records in fixtures:
        want = float(brute_force_alpha(records))
        got = krippendorff_alpha(AnnotationMatrix.from_records(records)).alpha
        assert abs(got - want) <= 1e-9

    perfect = [
        ("u1", "A", "p"), ("u1", "B", "p"),
        ("u2", "A", "q"), ("u2", "B", "q"),
        ("u3", "A", "p"), ("u3", "B", "p"),
        ("u4", "A", "q"), ("u4", "B", "q"),
    ]
    assert krippendorff_alpha(AnnotationMatrix.from_records(perfect)).alpha == 1.0

    unanimous = [("u1", "A", "z"), ("u1", "B", "z"), ("u2", "A", "z"), ("u2", "B", "z")]
    with pytest.raises(DegenerateAgreement):
        krippendorff_alpha(AnnotationMatrix.from_records(unanimous))
    _pass("krippendorff alpha vs brute force (3 fixtures, 1e-9) + edge outcomes")


def test_persona_rules_and_identities():
    assert assign_personas({"crypto": 3, "fan": 0, "casual": 10}) == {PERSONA_CRYPTO}
    assert assign_personas({"crypto": 2, "fan": 2, "casual": 0}) == {PERSONA_CASUAL}
    assert assign_personas({"crypto": 5, "fan": 3, "casual": 1}) == {
        PERSONA_CRYPTO, PERSONA_FAN
    }

    # documented arithmetic from the published run: the overlap forced by
    # 343 crypto + 243 fan + 716 casual over 1121 users
    assert 343 + 243 - (1121 - 716) == 181

    # generated population: |casual| = users - |crypto ∪ fan| exactly
    rng = random.Random(99)
    labeled = []
    for u in range(500):
        for _ in range(rng.randint(1, 7)):
            labeled.append((f"u{u}", rng.choice(["crypto", "fan", "casual"])))
    profiles = build_profiles(labeled)
    stats = community_stats(labeled, profiles)
    union = sum(1 for p in profiles.values()
                if p.personas & {PERSONA_CRYPTO, PERSONA_FAN})
    assert stats.persona_counts[PERSONA_CASUAL] == stats.active_users - union

    # monotonicity over 10,000 randomized count vectors
    for _ in range(10000):
        counts = {
            "crypto": rng.randint(0, 6),
            "fan": rng.randint(0, 6),
            "casual": rng.randint(0, 6),
        }
        before = assign_personas(counts)
        plus_crypto = dict(counts, crypto=counts["crypto"] + 1)
        assert (PERSONA_CRYPTO in assign_personas(plus_crypto)) or (
            PERSONA_CRYPTO not in before
        )
        plus_casual = dict(counts, casual=counts["casual"] + 1)
        after = assign_personas(plus_casual)
        assert (PERSONA_CRYPTO in after) == (PERSONA_CRYPTO in before)
        assert (PERSONA_FAN in after) == (PERSONA_FAN in before)
    _pass("persona rules, casual-complement identity, 10k monotonicity checks")


def _offline_loop_run(checkpoint_dir):
    messages, gold = synth.make_messages(500, Task.INTENT, seed=11)
    holdout = tuple(synth.gold_examples(messages[-150:], gold))
    provider = build_provider(ProviderRef("mock", "ada", seed=99, noise=0.3))
    template = default_template(Task.INTENT)
    boot = distill.bootstrap(messages[:-150], provider, template, 350, seed=5)
    state = distill.LoopState(task=Task.INTENT, curated=boot.examples, holdout=holdout)

    def corrections(st):
        by_id = {ex.message_id: ex for ex in st.curated}
        wrong = sorted(mid for mid, ex in by_id.items() if ex.label != gold[mid])
        return [
            LabeledExample(message_id=mid, text=by_id[mid].text, label=gold[mid],
                           source=Source.HUMAN, annotator_id="scripted")
            for mid in wrong[:60]
        ]

    return distill.run_loop(
        state,
        distill.StopPolicy(),
        corrections_provider=corrections,
        checkpoint_dir=checkpoint_dir,
    )


def test_end_to_end_offline_loop(tmp_path, monkeypatch):
    # prove the run is offline: any socket use fails loudly
    def no_network(*_args, **_kwargs):
        raise AssertionError("network access attempted during the offline loop")

    monkeypatch.setattr(socket, "socket", no_network)
    monkeypatch.setattr(socket, "create_connection", no_network)

    started = time.perf_counter()
    run_a = _offline_loop_run(tmp_path / "a")
    run_b = _offline_loop_run(tmp_path / "b")
    elapsed = time.perf_counter() - started

    policy = distill.StopPolicy()
    assert run_a.decision.stop
    assert run_a.state.iteration <= policy.max_iterations
    final = run_a.state.history[-1].macro.f1
    assert final >= 0.85
    assert elapsed < 60.0

    # byte-determinism: every checkpoint file identical across the two runs
    files_a = sorted((tmp_path / "a").glob("*.json"))
    files_b = sorted((tmp_path / "b").glob("*.json"))
    assert [f.name for f in files_a] == [f.name for f in files_b]
    for fa, fb in zip(files_a, files_b):
        assert fa.read_bytes() == fb.read_bytes()
    assert json.dumps(run_a.state.to_dict(), sort_keys=True) == json.dumps(
        run_b.state.to_dict(), sort_keys=True
    )
    _pass(
        f"offline loop: {run_a.state.iteration} iterations, final macro-F1 "
        f"{final:.3f} >= 0.85, byte-deterministic, {elapsed:.1f}s, no network"
    )


def _moderation_scorer(text):
    words = text.lower().split()
    if any(w in ("idiot", "moron", "trash") for w in words):
        return "toxic", {"toxic": 0.9, "spam": 0.02, "not_toxic_not_spam": 0.08}
    return "not_toxic_not_spam", {"toxic": 0.02, "spam": 0.02,
                                  "not_toxic_not_spam": 0.96}


def test_service_round_trip_restart_and_fail_closed(tmp_path):
    log = tmp_path / "events.jsonl"
    store = FlagStore(log)
    gate = ModerationGate(store, _moderation_scorer, GatePolicy(tau=0.7))

    # score -> flag -> list -> resolve -> export
    verdict = gate.score_message(make_message("m1", text="what an idiot move"))
    assert verdict.flagged
    flags, total = store.list_flags(status="pending")
    assert total == 1
    store.resolve(flags[0].flag_id, "not_toxic_not_spam", "mod1")
    corpus, lines = export_retraining_corpus(store)
    assert lines == 1
    parsed = parse_finetune_corpus(corpus)
    assert parsed[0][2] == "not_toxic_not_spam"   # the human verdict

    # kill-and-restart mid-queue: add pending flags, then replay
    gate.score_message(make_message("m2", text="another moron take", second=1))
    gate.score_message(make_message("m3", text="pure trash post", second=2))
    before = store.list_flags()
    replayed = FlagStore(log)
    assert replayed.list_flags() == before
    assert replayed.retraining_examples() == store.retraining_examples()

    # fail-closed: with the model unavailable, zero messages pass
    def broken(_text):
        raise RuntimeError("model unavailable")

    dead_gate = ModerationGate(FlagStore(tmp_path / "dead.jsonl"), broken, GatePolicy())
    outcomes = [
        dead_gate.score_message(make_message(f"d{i}", text=f"anything {i}", second=i))
        for i in range(25)
    ]
    assert all(v.flagged for v in outcomes)
    _pass("service round-trip, restart replay, 100% fail-closed flagging")


def test_corpus_wire_format_golden_and_round_trip():
    examples = [
        human("m1", "who is the doctor", "fan"),
        human("m2", "buy the token dip", "crypto", context=("gm gm", "wen moon")),
    ]
    tax = taxonomy_for(Task.INTENT)
    corpus, manifest = build_finetune_corpus(examples, tax)
    assert corpus == GOLDEN.read_bytes()
    assert manifest.total == 2
    parsed = parse_finetune_corpus(corpus)
    assert parsed == [
        ((), "who is the doctor", "fan"),
        (("gm gm", "wen moon"), "buy the token dip", "crypto"),
    ]
    _pass("corpus wire format: golden-file byte-exact + parse-back identity")

#!/usr/bin/env python3
"""End-to-end offline demo of the whole pipeline, no network needed.

Generates a synthetic community chat export, runs the teacher->student
distillation loop for the intent task with a noisy mock teacher and
scripted human corrections, computes persona stats from student labels,
calibrates the moderation gate threshold, and exercises the gate and the
retraining export.  Everything lands under --workdir.

Usage:  python scripts/run_offline_loop.py --workdir /tmp/modgate-demo
"""

import argparse
import json
from pathlib import Path

from modgate import baseline, distill, synth
from modgate.cli import main as cli
from modgate.domain import Task, taxonomy_for
from modgate.service.gate import GatePolicy, ModerationGate
from modgate.service.store import FlagStore, export_retraining_corpus


def write_rows(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--workdir", default="demo-run")
    parser.add_argument("--messages", type=int, default=500)
    parser.add_argument("--noise", type=float, default=0.3)
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)

    # 1. synthetic chat export + human gold for holdout and corrections
    messages, gold = synth.make_messages(args.messages, Task.INTENT, seed=args.seed)
    holdout_msgs = messages[-args.messages // 4:]
    write_rows(workdir / "messages.jsonl", [m.to_dict() for m in messages])
    write_rows(
        workdir / "holdout.jsonl",
        [ex.to_dict() for ex in synth.gold_examples(holdout_msgs, gold)],
    )
    write_rows(
        workdir / "corrections.jsonl",
        [
            {"message_id": m.id, "text": m.text, "label": gold[m.id],
             "source": "human", "annotator_id": "demo"}
            for m in messages[: -args.messages // 4]
        ],
    )

    # 2. distillation loop (bootstrap -> corrections -> train -> benchmark)
    code = cli([
        "distill", "--task", "intent",
        "--messages", str(workdir / "messages.jsonl"),
        "--holdout", str(workdir / "holdout.jsonl"),
        "--corrections", str(workdir / "corrections.jsonl"),
        "--corrections-per-round", "60",
        "--sample-size", str(args.messages),
        "--provider", "mock", "--noise", str(args.noise),
        "--seed", str(args.seed),
        "--workdir", str(workdir / "distill"),
    ])
    assert code == 0, "distill run failed"
    manifest = json.loads((workdir / "distill" / "manifest.json").read_text())
    print("\nloop macro-F1 series:", [round(x, 3) for x in manifest["macro_f1_series"]])

    # 3. label the full export with the tuned student and compute personas
    cli([
        "label", "--input", str(workdir / "messages.jsonl"),
        "--task", "intent", "--provider", "mock",
        "--output", str(workdir / "labels.jsonl"),
        "--seed", str(args.seed),
    ])
    cli([
        "personas", "--input", str(workdir / "labels.jsonl"),
        "--output", str(workdir / "personas.json"),
    ])

    # 4. moderation: train a baseline student on synthetic moderation data,
    #    calibrate tau, run the gate, resolve one flag, export retraining data
    mod_msgs, mod_gold = synth.make_messages(300, Task.MODERATION, seed=args.seed + 1)
    mod_examples = synth.gold_examples(mod_msgs, mod_gold)
    model = baseline.train(mod_examples[:200], taxonomy_for(Task.MODERATION))
    baseline.save_model(model, str(workdir / "moderation-model.json"))
    write_rows(workdir / "mod-validation.jsonl",
               [ex.to_dict() for ex in mod_examples[200:]])
    cli([
        "calibrate", "--input", str(workdir / "mod-validation.jsonl"),
        "--baseline-model", str(workdir / "moderation-model.json"),
        "--output", str(workdir / "calibration.json"),
    ])
    tau = json.loads((workdir / "calibration.json").read_text())["tau"]

    store = FlagStore(workdir / "events.jsonl")
    gate = ModerationGate(
        store, lambda text: baseline.predict(model, text), GatePolicy(tau=tau)
    )
    flagged = 0
    for msg in mod_msgs[250:]:
        if gate.score_message(msg).flagged:
            flagged += 1
    flags, total = store.list_flags(status="pending")
    if flags:
        store.resolve(flags[0].flag_id, "not_toxic_not_spam", "demo-mod")
    corpus, lines = export_retraining_corpus(store)
    (workdir / "retraining-corpus.jsonl").write_bytes(corpus)

    print(f"gate: flagged {flagged} of {len(mod_msgs[250:])} scored messages "
          f"(tau {tau:.3f}); exported {lines} retraining example(s)")
    print(f"\nartifacts in {workdir}/ -- serve them with:")
    print(f"  modgate serve --event-log {workdir}/events.jsonl "
          f"--baseline-model {workdir}/moderation-model.json "
          f"--personas {workdir}/personas.json "
          f"--reports {workdir}/distill/manifest.json --tau {tau:.3f}")


if __name__ == "__main__":
    main()

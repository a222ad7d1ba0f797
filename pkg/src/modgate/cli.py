"""Command-line entry point for the whole workflow.

Subcommands: ingest, distill, label, eval, agreement, personas, calibrate,
serve, export-corpus.  Exit codes: 0 success, 1 domain error, 2 usage error.
Every run writes one manifest (command, config, seed, input digests, output
paths, timings) so results are reproducible.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import analytics, baseline, distill, ingest
from .agreement import krippendorff_alpha
from .domain import (
    AnnotationMatrix,
    LabeledExample,
    Task,
    taxonomy_for,
    validate_example,
)
from .errors import LengthMismatch, ModgateError
from .gateway import (
    EndpointConfig,
    ProviderRef,
    build_provider,
    classify,
    default_template,
    render_finetune_prompt,
    render_prompt,
)
from .metrics import evaluate, render_report
from .service.gate import GatePolicy, ModerationGate, calibrate_tau
from .service.store import FlagStore, export_retraining_corpus

DEFAULT_SEED = 1337


# ---------------------------------------------------------------------------
# small file helpers


def _read_jsonl(path: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def _write_jsonl(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")


def _read_labeled(path: str) -> list[LabeledExample]:
    return [LabeledExample.from_dict(row) for row in _read_jsonl(path)]


def _digest_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


class _Manifest:
    """Collects one run's reproducibility record."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.started = time.time()
        self.payload = {
            "command": command,
            "config": {
                k: v for k, v in sorted(vars(args).items()) if k not in ("func",)
            },
            "seed": getattr(args, "seed", None),
            "inputs": {},
            "outputs": [],
        }

    def add_input(self, path: str | None) -> None:
        if path and Path(path).exists():
            self.payload["inputs"][path] = _digest_file(path)

    def add_output(self, path: str | None) -> None:
        if path:
            self.payload["outputs"].append(str(path))

    def extend(self, **fields) -> None:
        self.payload.update(fields)

    def write(self, path: str) -> None:
        finished = time.time()
        self.payload["timings"] = {
            "started_at": _iso(self.started),
            "finished_at": _iso(finished),
            "seconds": finished - self.started,
        }
        _write_json(path, self.payload)


def _iso(epoch: float) -> str:
    return datetime.fromtimestamp(epoch, timezone.utc).isoformat(
        timespec="milliseconds"
    ).replace("+00:00", "Z")


def _make_provider(args, model_dir=None):
    if args.provider == "mock":
        ref = ProviderRef(
            "mock", args.model, seed=args.seed, noise=getattr(args, "noise", 0.0)
        )
        return build_provider(ref, model_dir=model_dir)
    endpoint = EndpointConfig(base_url=args.base_url)
    return build_provider(ProviderRef("remote", args.model, endpoint))


def _add_provider_flags(parser, default_model="ada"):
    parser.add_argument("--provider", choices=["mock", "remote"],
                        default=os.environ.get("MODGATE_PROVIDER", "mock"),
                        help="mock forces fully offline runs "
                             "(default from MODGATE_PROVIDER)")
    parser.add_argument("--model", default=default_model)
    parser.add_argument("--base-url", default="https://api.openai.com/v1")
    parser.add_argument("--noise", type=float, default=0.0,
                        help="mock only: probability of a wrong label")


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args) -> int:
    manifest = _Manifest("ingest", args)
    manifest.add_input(args.input)
    manifest.add_input(args.bots)
    messages, rejects = ingest.load_export(args.input, args.format)
    bots = ingest.load_bot_ids(args.bots) if args.bots else set()
    kept = ingest.sort_messages(ingest.filter_messages(messages, bots))
    ingest.write_messages(args.output, kept)
    manifest.add_output(args.output)
    if args.rejects:
        _write_jsonl(
            args.rejects,
            [{"line": r.line_no, "error": r.error} for r in rejects],
        )
        manifest.add_output(args.rejects)
    manifest.extend(stats={"parsed": len(messages), "rejected": len(rejects),
                           "kept": len(kept)})
    manifest.write(args.manifest or f"{args.output}.manifest.json")
    print(f"parsed {len(messages)} messages ({len(rejects)} rejected), "
          f"kept {len(kept)} after filtering")
    return 0


def cmd_label(args) -> int:
    manifest = _Manifest("label", args)
    manifest.add_input(args.input)
    msgs, _rejects = ingest.load_export(args.input, "jsonl")
    msgs = ingest.sort_messages(ingest.filter_messages(msgs))
    tax = taxonomy_for(args.task)
    provider = _make_provider(args, model_dir=args.model_dir)
    template = default_template(args.task)
    finetuned = args.model.startswith(("mock-ft-", "ft:"))
    windows = ingest.build_context(msgs, args.context_window)
    rows = []
    for window, msg in windows:
        context = ingest.context_texts(window)
        if finetuned:
            prompt = render_finetune_prompt(context, msg.text)
        else:
            prompt = render_prompt(template, tax, context, msg.text)
        result = classify(provider, prompt, tax)
        rows.append(
            {
                "message_id": msg.id,
                "author_id": msg.author_id,
                "text": msg.text,
                "label": result.label,
                "source": "student_model" if finetuned else "teacher_zero_shot",
                "context": list(context),
            }
        )
    _write_jsonl(args.output, rows)
    manifest.add_output(args.output)
    manifest.write(args.manifest or f"{args.output}.manifest.json")
    print(f"labeled {len(rows)} messages with {provider.ref.summary()}")
    return 0


def cmd_eval(args) -> int:
    manifest = _Manifest("eval", args)
    manifest.add_input(args.gold)
    manifest.add_input(args.pred)
    tax = taxonomy_for(args.task)
    gold_rows = {r["message_id"]: r["label"] for r in _read_jsonl(args.gold)}
    pred_rows = {r["message_id"]: r["label"] for r in _read_jsonl(args.pred)}
    missing = set(gold_rows) ^ set(pred_rows)
    if missing:
        raise LengthMismatch(
            f"gold and pred disagree on {len(missing)} message ids, "
            f"e.g. {sorted(missing)[:3]}"
        )
    ids = list(gold_rows)
    report = evaluate([gold_rows[i] for i in ids], [pred_rows[i] for i in ids], tax)
    print(render_report(report))
    if args.output:
        _write_json(args.output, report.to_dict())
        manifest.add_output(args.output)
    manifest.extend(report=report.to_dict())
    manifest.write(args.manifest or f"{args.gold}.eval-manifest.json")
    return 0


def cmd_agreement(args) -> int:
    manifest = _Manifest("agreement", args)
    manifest.add_input(args.input)
    rows = _read_jsonl(args.input)
    am = AnnotationMatrix.from_records(
        [(r["unit"], r["annotator"], r["label"]) for r in rows]
    )
    report = krippendorff_alpha(am)
    print(
        f"alpha {report.alpha:.4f} over {report.n_pairable} pairable values "
        f"({report.units_used} units used, {report.units_dropped} dropped)"
    )
    if args.output:
        _write_json(args.output, report.to_dict())
        manifest.add_output(args.output)
    manifest.extend(report=report.to_dict())
    manifest.write(args.manifest or f"{args.input}.agreement-manifest.json")
    return 0


def cmd_personas(args) -> int:
    manifest = _Manifest("personas", args)
    manifest.add_input(args.input)
    rows = _read_jsonl(args.input)
    labeled = [(r["author_id"], r.get("label")) for r in rows]
    profiles = analytics.build_profiles(labeled)
    stats = analytics.community_stats(labeled, profiles)
    print(analytics.render_stats(stats))
    payload = stats.to_dict()
    payload["profiles"] = [p.to_dict() for p in profiles.values()]
    if args.output:
        _write_json(args.output, payload)
        manifest.add_output(args.output)
    manifest.write(args.manifest or f"{args.input}.personas-manifest.json")
    return 0


def cmd_distill(args) -> int:
    manifest = _Manifest("distill", args)
    for path in (args.messages, args.holdout, args.corrections, args.annotations):
        manifest.add_input(path)
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    tax = taxonomy_for(args.task)
    provider = _make_provider(args, model_dir=workdir / "models")
    template = default_template(args.task)

    msgs, _rejects = ingest.load_export(args.messages, "jsonl")
    holdout = tuple(validate_example(ex, tax) for ex in _read_labeled(args.holdout))
    holdout_ids = {ex.message_id for ex in holdout}
    pool = [m for m in msgs if m.id not in holdout_ids]

    latest = workdir / "checkpoints" / "latest.json"
    if args.resume and latest.exists():
        state = distill.load_checkpoint(latest)
        boot_info = {"resumed_from": str(latest), "iteration": state.iteration}
    else:
        boot = distill.bootstrap(
            pool, provider, template, min(args.sample_size, len(pool)), seed=args.seed
        )
        state = distill.LoopState(
            task=Task(args.task),
            curated=boot.examples,
            holdout=holdout,
            base_models=tuple(args.base_models.split(",")),
        )
        boot_info = {"labeled": len(boot.examples), "skipped": list(boot.skipped)}
    policy = distill.StopPolicy(
        epsilon=args.epsilon,
        patience=args.patience,
        max_iterations=args.max_iterations,
        target_macro_f1=args.target,
    )

    corrections = _read_labeled(args.corrections) if args.corrections else []
    cursor = {"next": 0}

    def corrections_provider(_state):
        chunk = corrections[cursor["next"]: cursor["next"] + args.corrections_per_round]
        cursor["next"] += len(chunk)
        return chunk

    annotations = None
    if args.annotations:
        annotations = AnnotationMatrix.from_records(
            [(r["unit"], r["annotator"], r["label"])
             for r in _read_jsonl(args.annotations)]
        )

    run = distill.run_loop(
        state,
        policy,
        corrections_provider=corrections_provider,
        provider=provider,
        annotations=annotations,
        checkpoint_dir=workdir / "checkpoints",
    )

    curated_path = workdir / "curated.jsonl"
    _write_jsonl(str(curated_path), [ex.to_dict() for ex in run.state.curated])
    manifest.add_output(str(curated_path))
    manifest.add_output(str(workdir / "checkpoints"))
    manifest.extend(
        policy=vars(policy).copy(),
        provider=provider.ref.summary(),
        bootstrap=boot_info,
        reports=[r.to_dict() for r in run.state.history],
        macro_f1_series=run.state.macro_f1_series(),
        decision={"stop": run.decision.stop, "reason": run.decision.reason},
        recommendation=run.recommendation.to_dict(),
        model_ref=run.state.model_ref,
    )
    manifest.write(str(workdir / "manifest.json"))
    series = ", ".join(f"{x:.3f}" for x in run.state.macro_f1_series())
    print(f"stopped after iteration {run.state.iteration} ({run.decision.reason}); "
          f"macro-F1 series: {series}")
    print(f"recommendation: {run.recommendation.kind} -- {run.recommendation.reason}")
    return 0


def cmd_calibrate(args) -> int:
    manifest = _Manifest("calibrate", args)
    manifest.add_input(args.input)
    examples = _read_labeled(args.input)
    scorer = _build_scorer(args)
    scored = []
    for ex in examples:
        label, scores = scorer(ex.text)
        scored.append((ex.label, label, scores))
    result = calibrate_tau(scored, GatePolicy(), target_recall=args.target_recall)
    print(
        f"tau {result.tau:.6f} reaches toxic recall "
        f"{result.achieved_recall:.3f} (target {result.target_recall}); "
        f"{result.type_one_flags} benign messages flagged of {result.evaluated}"
    )
    if args.output:
        _write_json(args.output, result.to_dict())
        manifest.add_output(args.output)
    manifest.extend(result=result.to_dict())
    manifest.write(args.manifest or f"{args.input}.calibrate-manifest.json")
    return 0


def _build_scorer(args):
    tax = taxonomy_for(Task.MODERATION)
    if args.baseline_model:
        model = baseline.load_model(args.baseline_model)
        return lambda text: baseline.predict(model, text)
    provider = _make_provider(args)
    template = default_template(Task.MODERATION)

    def scorer(text: str):
        result = classify(provider, render_prompt(template, tax, (), text), tax)
        return result.label, result.scores or {}

    return scorer


def cmd_serve(args) -> int:
    import uvicorn

    from .service.api import create_app

    manifest = _Manifest("serve", args)
    store = FlagStore(args.event_log)
    gate = ModerationGate(
        store,
        _build_scorer(args) if not args.no_scorer else None,
        GatePolicy(tau=args.tau),
        context_size=args.context_window,
    )
    app = create_app(
        gate,
        store,
        personas_path=args.personas,
        reports_path=args.reports,
        token=args.token,
    )
    manifest.add_output(args.event_log)
    manifest.write(args.manifest or f"{args.event_log}.serve-manifest.json")
    print(f"serving moderation gate on :{args.port} (event log: {args.event_log})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_export_corpus(args) -> int:
    manifest = _Manifest("export-corpus", args)
    manifest.add_input(args.event_log)
    store = FlagStore(args.event_log)
    corpus, lines = export_retraining_corpus(store, since=args.since)
    with open(args.output, "wb") as fh:
        fh.write(corpus)
    manifest.add_output(args.output)
    manifest.extend(lines=lines)
    manifest.write(args.manifest or f"{args.output}.manifest.json")
    if lines == 0:
        print("warning: no resolved verdicts to export (0 lines)")
    else:
        print(f"exported {lines} retraining examples")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modgate",
        description="Teacher/student moderation pipeline and gate service",
    )
    parser.set_defaults(func=None)
    sub = parser.add_subparsers(dest="subcommand")

    p = sub.add_parser("ingest", help="parse a chat export into the message store")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=list(ingest.FORMATS), default="jsonl")
    p.add_argument("--bots", help="bot id list file (one id per line, # comments)")
    p.add_argument("--output", required=True)
    p.add_argument("--rejects", help="where to write rejected lines")
    p.add_argument("--manifest")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("label", help="batch-classify a message file")
    p.add_argument("--input", required=True)
    p.add_argument("--task", choices=[t.value for t in Task], required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--context-window", type=int, default=5)
    p.add_argument("--model-dir", help="directory holding mock fine-tuned models")
    p.add_argument("--manifest")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_provider_flags(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("eval", help="score predictions against gold labels")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--task", choices=[t.value for t in Task], required=True)
    p.add_argument("--output")
    p.add_argument("--manifest")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("agreement", help="Krippendorff alpha of an annotation panel")
    p.add_argument("--input", required=True,
                   help="JSONL rows {unit, annotator, label}")
    p.add_argument("--output")
    p.add_argument("--manifest")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("personas", help="persona and share statistics from labels")
    p.add_argument("--input", required=True,
                   help="JSONL rows {author_id, label}")
    p.add_argument("--output")
    p.add_argument("--manifest")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_personas)

    p = sub.add_parser("distill", help="run the teacher->student loop for a task")
    p.add_argument("--task", choices=[t.value for t in Task], required=True)
    p.add_argument("--messages", required=True)
    p.add_argument("--holdout", required=True,
                   help="human-labeled benchmark JSONL, never trained on")
    p.add_argument("--corrections", help="human corrections JSONL, fed in rounds")
    p.add_argument("--corrections-per-round", type=int, default=50)
    p.add_argument("--annotations", help="grader panel JSONL for the consistency audit")
    p.add_argument("--sample-size", type=int, default=500)
    p.add_argument("--base-models", default=",".join(distill.DEFAULT_BASE_MODELS))
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--patience", type=int, default=2)
    p.add_argument("--max-iterations", type=int, default=10)
    p.add_argument("--target", type=float, default=0.85)
    p.add_argument("--workdir", required=True)
    p.add_argument("--resume", action="store_true",
                   help="continue from the workdir's latest checkpoint")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_provider_flags(p)
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("calibrate", help="pick the smallest tau hitting a toxic recall")
    p.add_argument("--input", required=True, help="labeled moderation JSONL")
    p.add_argument("--target-recall", type=float, default=1.0)
    p.add_argument("--baseline-model", help="baseline model JSON to score with")
    p.add_argument("--output")
    p.add_argument("--manifest")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_provider_flags(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("serve", help="start the moderation-gate service")
    p.add_argument("--event-log", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.add_argument("--tau", type=float, default=0.7)
    p.add_argument("--context-window", type=int, default=5)
    p.add_argument("--baseline-model", help="baseline model JSON to score with")
    p.add_argument("--no-scorer", action="store_true",
                   help="run without a model (every message is flagged)")
    p.add_argument("--personas", help="persona stats JSON to serve")
    p.add_argument("--reports", help="distill manifest JSON to serve")
    p.add_argument("--token", help="static bearer token")
    p.add_argument("--manifest")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_provider_flags(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export-corpus", help="resolved verdicts as a retraining corpus")
    p.add_argument("--event-log", required=True)
    p.add_argument("--since", help="ISO-8601; only verdicts after this instant")
    p.add_argument("--output", required=True)
    p.add_argument("--manifest")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_export_corpus)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.func is None:
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except ModgateError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

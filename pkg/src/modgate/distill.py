"""The iterative teacher -> student distillation loop.

One pass: bootstrap labels from a zero-shot teacher, merge human
corrections by consensus, train the current candidate student (local
baseline or provider fine-tune), benchmark on a fixed human-labeled
holdout, and repeat until gains level out, the budget runs out, or the
cheapest sufficient student is found.  States are immutable; a failed
iteration leaves the previous state untouched.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from . import baseline
from .agreement import krippendorff_alpha
from .domain import (
    AnnotationMatrix,
    LabeledExample,
    Message,
    Source,
    Task,
    TaxonomySpec,
    taxonomy_for,
    validate_example,
)
from .errors import (
    DanglingReference,
    DegenerateAgreement,
    EmptySample,
    HoldoutOverlap,
    UnparseableCompletion,
)
from .gateway import (
    PromptTemplate,
    build_finetune_corpus,
    classify,
    render_finetune_prompt,
    render_prompt,
    submit_finetune,
)
from .metrics import EvalReport, evaluate

BASELINE_MODEL = "baseline"
DEFAULT_BASE_MODELS = (BASELINE_MODEL, "ada", "babbage", "curie", "davinci")


@dataclass(frozen=True)
class StopPolicy:
    epsilon: float = 0.01          # minimum macro-F1 improvement that counts
    patience: int = 2              # consecutive sub-epsilon improvements allowed
    max_iterations: int = 10
    target_macro_f1: float = 0.85
    alpha_threshold: float = 0.667

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass(frozen=True)
class StopDecision:
    stop: bool
    reason: str | None = None      # "leveled" | "budget"


@dataclass(frozen=True)
class LoopState:
    task: Task
    curated: tuple[LabeledExample, ...]
    holdout: tuple[LabeledExample, ...]
    iteration: int = 0
    history: tuple[EvalReport, ...] = ()
    model_ref: dict | None = None
    base_models: tuple[str, ...] = DEFAULT_BASE_MODELS
    model_index: int = 0

    def __post_init__(self):
        if len(self.history) != self.iteration:
            raise ValueError("history length must equal the iteration count")

    @property
    def current_base_model(self) -> str:
        return self.base_models[self.model_index]

    def macro_f1_series(self) -> list[float]:
        return [report.macro.f1 for report in self.history]

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "iteration": self.iteration,
            "curated": [ex.to_dict() for ex in self.curated],
            "holdout": [ex.to_dict() for ex in self.holdout],
            "history": [report.to_dict() for report in self.history],
            "model_ref": self.model_ref,
            "base_models": list(self.base_models),
            "model_index": self.model_index,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "LoopState":
        return cls(
            task=Task(data["task"]),
            iteration=int(data["iteration"]),
            curated=tuple(LabeledExample.from_dict(d) for d in data["curated"]),
            holdout=tuple(LabeledExample.from_dict(d) for d in data["holdout"]),
            history=tuple(EvalReport.from_dict(d) for d in data["history"]),
            model_ref=data.get("model_ref"),
            base_models=tuple(data.get("base_models", DEFAULT_BASE_MODELS)),
            model_index=int(data.get("model_index", 0)),
        )


# ---------------------------------------------------------------------------
# step 2: zero-shot distillation


@dataclass(frozen=True)
class BootstrapResult:
    examples: tuple[LabeledExample, ...]
    skipped: tuple[tuple[str, str], ...]   # (message_id, reason) audit log


def bootstrap(
    messages: Sequence[Message],
    provider,
    template: PromptTemplate,
    sample_size: int,
    seed: int = 0,
    contexts: Mapping[str, Sequence[str]] | None = None,
) -> BootstrapResult:
    """Label a seeded sample of messages with the zero-shot teacher.

    Unparseable teacher completions are excluded and recorded in the audit
    log rather than failing the run.
    """
    if sample_size <= 0:
        raise EmptySample("sample_size must be positive")
    if sample_size > len(messages):
        raise EmptySample(
            f"sample_size {sample_size} exceeds the {len(messages)} available messages"
        )
    tax = taxonomy_for(template.task)
    rng = random.Random(seed)
    sample = rng.sample(list(messages), sample_size)
    examples: list[LabeledExample] = []
    skipped: list[tuple[str, str]] = []
    for msg in sample:
        context = tuple(contexts.get(msg.id, ())) if contexts else ()
        prompt = render_prompt(template, tax, context, msg.text)
        try:
            result = classify(provider, prompt, tax)
        except UnparseableCompletion as exc:
            skipped.append((msg.id, f"unparseable completion: {exc.raw!r}"))
            continue
        examples.append(
            LabeledExample(
                message_id=msg.id,
                text=msg.text,
                label=result.label,
                source=Source.TEACHER_ZERO_SHOT,
                context=context,
            )
        )
    return BootstrapResult(examples=tuple(examples), skipped=tuple(skipped))


# ---------------------------------------------------------------------------
# step 3: human correction merge


@dataclass(frozen=True)
class MergeResult:
    curated: tuple[LabeledExample, ...]
    unresolved: tuple[str, ...]            # message ids excluded on grader ties


def merge_corrections(
    predicted: Sequence[LabeledExample],
    human: Sequence[LabeledExample],
    tax: TaxonomySpec | None = None,
) -> MergeResult:
    """Apply human corrections over teacher/student labels.

    A human label overrides the machine label; several graders on one
    message resolve by majority, and an exact tie marks the message
    unresolved and drops it from the curated output (kept for
    re-annotation).
    """
    known = {ex.message_id for ex in predicted}
    by_message: dict[str, list[LabeledExample]] = {}
    for ex in human:
        if tax is not None:
            ex = validate_example(ex, tax)
        if ex.message_id not in known:
            raise DanglingReference(
                f"correction for unknown message_id {ex.message_id!r}"
            )
        by_message.setdefault(ex.message_id, []).append(ex)

    curated: list[LabeledExample] = []
    unresolved: list[str] = []
    for ex in predicted:
        votes = by_message.get(ex.message_id)
        if not votes:
            curated.append(ex)
            continue
        tally: dict[str, int] = {}
        for vote in votes:
            tally[vote.label] = tally.get(vote.label, 0) + 1
        top = max(tally.values())
        winners = sorted(l for l, c in tally.items() if c == top)
        if len(winners) > 1:
            unresolved.append(ex.message_id)
            continue
        label = winners[0]
        annotators = sorted({v.annotator_id or "?" for v in votes if v.label == label})
        curated.append(
            replace(
                ex,
                label=label,
                source=Source.HUMAN,
                annotator_id="+".join(annotators),
            )
        )
    return MergeResult(curated=tuple(curated), unresolved=tuple(unresolved))


# ---------------------------------------------------------------------------
# students


class BaselineStudent:
    """Local naive-Bayes student; the cheapest candidate."""

    name = BASELINE_MODEL

    def __init__(self, tax: TaxonomySpec):
        self.tax = tax
        self.model: baseline.BaselineModel | None = None

    def fit(self, examples: Sequence[LabeledExample]) -> dict:
        self.model = baseline.train(examples, self.tax)
        digest = _digest(sorted((ex.message_id, ex.label) for ex in examples))
        return {"kind": "baseline", "corpus_digest": digest}

    def predict(self, ex: LabeledExample) -> str:
        label, _scores = baseline.predict(self.model, ex.text)
        return label


class FinetuneStudent:
    """Provider-backed student: builds a corpus, fine-tunes, classifies."""

    def __init__(self, provider, tax: TaxonomySpec, base_model: str):
        self.provider = provider
        self.tax = tax
        self.base_model = base_model
        self.model_id: str | None = None

    @property
    def name(self) -> str:
        return self.base_model

    def fit(self, examples: Sequence[LabeledExample]) -> dict:
        corpus, _manifest = build_finetune_corpus(examples, self.tax)
        self.model_id = submit_finetune(self.provider, corpus, self.base_model)
        return {"kind": "finetuned", "model_id": self.model_id,
                "base_model": self.base_model}

    def predict(self, ex: LabeledExample) -> str:
        prompt = render_finetune_prompt(ex.context, ex.text)
        provider = self.provider.with_model(self.model_id)
        return classify(provider, prompt, self.tax).label


def make_student(base_model: str, tax: TaxonomySpec, provider=None):
    if base_model == BASELINE_MODEL:
        return BaselineStudent(tax)
    if provider is None:
        raise ValueError(f"base model {base_model!r} needs a provider")
    return FinetuneStudent(provider, tax, base_model)


def _digest(payload) -> str:
    import hashlib

    return hashlib.sha256(
        json.dumps(payload, ensure_ascii=False, sort_keys=True).encode("utf-8")
    ).hexdigest()[:16]


# ---------------------------------------------------------------------------
# steps 4-6: fine-tune, classify benchmark, evaluate


def check_disjoint(state: LoopState) -> None:
    overlap = {ex.message_id for ex in state.curated} & {
        ex.message_id for ex in state.holdout
    }
    if overlap:
        raise HoldoutOverlap(
            f"holdout shares {len(overlap)} message ids with training data, "
            f"e.g. {sorted(overlap)[:3]}"
        )


def run_iteration(state: LoopState, student=None, provider=None) -> LoopState:
    """Train the current candidate on the curated data, benchmark on the
    holdout, and append the report.  Atomic: any failure leaves `state` as
    it was."""
    check_disjoint(state)
    tax = taxonomy_for(state.task)
    if student is None:
        student = make_student(state.current_base_model, tax, provider)
    model_ref = student.fit(state.curated)
    gold = [ex.label for ex in state.holdout]
    pred = [student.predict(ex) for ex in state.holdout]
    report = evaluate(gold, pred, tax)
    return replace(
        state,
        iteration=state.iteration + 1,
        history=state.history + (report,),
        model_ref=model_ref,
    )


def should_stop(history: Sequence[EvalReport], policy: StopPolicy) -> StopDecision:
    """Stop once the last `patience` macro-F1 improvements are all below
    epsilon, or the iteration budget is exhausted."""
    if len(history) >= policy.max_iterations:
        return StopDecision(True, "budget")
    series = [report.macro.f1 for report in history]
    improvements = [b - a for a, b in zip(series, series[1:])]
    if len(improvements) >= policy.patience and all(
        gain < policy.epsilon for gain in improvements[-policy.patience:]
    ):
        return StopDecision(True, "leveled")
    return StopDecision(False)


# ---------------------------------------------------------------------------
# steps 7-8: escalate, reframe, or deploy


@dataclass(frozen=True)
class Recommendation:
    kind: str       # deploy | escalate_model | reframe_task | expand_data | audit_required
    reason: str
    macro_f1: float
    alpha: float | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "reason": self.reason,
                "macro_f1": self.macro_f1, "alpha": self.alpha}


def escalate_or_reframe(
    state: LoopState,
    policy: StopPolicy,
    annotations: AnnotationMatrix | None = None,
) -> Recommendation:
    """Post-stop decision: deploy if the target is met; otherwise audit
    grader consistency when panel annotations exist (low alpha means the
    task is not reliably a classification problem), then fall back to the
    next-larger base model or more data."""
    if not state.history:
        raise ValueError("cannot recommend without at least one evaluation")
    final = state.history[-1].macro.f1
    if final >= policy.target_macro_f1:
        return Recommendation(
            "deploy",
            f"macro-F1 {final:.3f} meets the {policy.target_macro_f1:.2f} target "
            f"with base model {state.current_base_model!r}",
            final,
        )
    has_larger = state.model_index + 1 < len(state.base_models)
    if annotations is None:
        if has_larger:
            return Recommendation(
                "escalate_model",
                f"below target; next candidate is "
                f"{state.base_models[state.model_index + 1]!r}",
                final,
            )
        return Recommendation(
            "audit_required",
            "below target with no larger candidate; collect a multi-grader "
            "consistency panel before reframing",
            final,
        )
    try:
        alpha = krippendorff_alpha(annotations).alpha
    except DegenerateAgreement:
        alpha = 1.0   # unanimous panel counts as consistent
    if alpha < policy.alpha_threshold:
        return Recommendation(
            "reframe_task",
            f"graders agree at alpha {alpha:.3f} < {policy.alpha_threshold}; "
            "the task is not reliably a classification problem",
            final,
            alpha=alpha,
        )
    if has_larger:
        return Recommendation(
            "escalate_model",
            f"graders are consistent (alpha {alpha:.3f}); try "
            f"{state.base_models[state.model_index + 1]!r}",
            final,
            alpha=alpha,
        )
    return Recommendation(
        "expand_data",
        f"graders are consistent (alpha {alpha:.3f}) and no larger model "
        "remains; grow the curated corpus",
        final,
        alpha=alpha,
    )


# ---------------------------------------------------------------------------
# orchestration


@dataclass(frozen=True)
class LoopRun:
    state: LoopState
    decision: StopDecision
    recommendation: Recommendation


def run_loop(
    state: LoopState,
    policy: StopPolicy,
    corrections_provider: Callable[[LoopState], Iterable[LabeledExample]] | None = None,
    provider=None,
    annotations: AnnotationMatrix | None = None,
    checkpoint_dir: str | Path | None = None,
) -> LoopRun:
    """Drive iterations to a stop decision, checkpointing after each one.

    `corrections_provider` is called before every iteration with the current
    state and returns that round's human corrections (possibly none).
    """
    tax = taxonomy_for(state.task)
    # checked up front so a resumed, already-stopped state is not re-run
    decision = should_stop(state.history, policy)
    while not decision.stop:
        if corrections_provider is not None:
            corrections = list(corrections_provider(state))
            if corrections:
                merged = merge_corrections(state.curated, corrections, tax)
                state = replace(state, curated=merged.curated)
        state = run_iteration(state, provider=provider)
        if checkpoint_dir is not None:
            save_checkpoint(state, checkpoint_dir)
        decision = should_stop(state.history, policy)
    recommendation = escalate_or_reframe(state, policy, annotations)
    return LoopRun(state=state, decision=decision, recommendation=recommendation)


def save_checkpoint(state: LoopState, checkpoint_dir: str | Path) -> Path:
    directory = Path(checkpoint_dir)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"iteration_{state.iteration:03d}.json"
    payload = json.dumps(state.to_dict(), ensure_ascii=False, sort_keys=True, indent=2)
    path.write_text(payload + "\n", encoding="utf-8")
    (directory / "latest.json").write_text(payload + "\n", encoding="utf-8")
    return path


def load_checkpoint(path: str | Path) -> LoopState:
    return LoopState.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

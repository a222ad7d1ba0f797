"""Uniform classification interface over remote LLM providers and a
deterministic local mock, plus the fine-tune corpus wire format.

Corpus wire format: one JSON object per line,
{"prompt": "<context lines>\\n<text>\\n\\n###\\n\\n", "completion": " <label>\\n"},
UTF-8, LF endings.  Completions are parsed by taking the first whitespace-
delimited token of the trimmed, lowercased completion and exact-matching it
against the taxonomy.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import httpx

from .domain import LabeledExample, Task, TaxonomySpec, taxonomy_for
from .errors import (
    EmptyCorpus,
    EmptyText,
    JobFailed,
    MixedTasks,
    ProviderUnavailable,
    RateLimited,
    TemplateError,
    UnknownLabel,
    UnparseableCompletion,
)
from .textutil import flatten_line, tokenize

SEPARATOR = "\n\n###\n\n"
COMPLETION_PREFIX = " "
COMPLETION_STOP = "\n"

BACKOFF_INITIAL = 1.0
BACKOFF_FACTOR = 2.0
BACKOFF_JITTER = 0.2
MAX_ATTEMPTS = 5


# ---------------------------------------------------------------------------
# configuration types


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    api_key_env: str = "MODGATE_API_KEY"
    timeout: float = 30.0
    max_retries: int = MAX_ATTEMPTS
    max_parallel: int = 4

    def __post_init__(self):
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")


@dataclass(frozen=True)
class ProviderRef:
    kind: str                      # "remote" | "mock"
    model_name: str
    endpoint: EndpointConfig | None = None
    seed: int = 1337               # mock only
    noise: float = 0.0             # mock only: P(wrong label)

    def __post_init__(self):
        if self.kind not in ("remote", "mock"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind == "remote" and self.endpoint is None:
            raise ValueError("remote provider needs an endpoint config")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must be in [0, 1]")

    @property
    def max_parallel(self) -> int:
        return self.endpoint.max_parallel if self.endpoint else 8

    @property
    def max_retries(self) -> int:
        return self.endpoint.max_retries if self.endpoint else 1

    def summary(self) -> str:
        if self.kind == "mock":
            return f"mock:{self.model_name}"
        return f"remote:{self.model_name}@{self.endpoint.base_url}"


@dataclass(frozen=True)
class PromptTemplate:
    task: Task
    preamble: str
    few_shot: tuple[tuple[str, str], ...] = ()


DEFAULT_PREAMBLE = (
    "You label community chat messages.\n"
    "Pick exactly one label from: {labels}.\n"
    "Definitions, in the same order: {definitions}.\n"
    "Reply with the label only."
)


def default_template(task: Task | str) -> PromptTemplate:
    return PromptTemplate(task=Task(task), preamble=DEFAULT_PREAMBLE)


@dataclass(frozen=True)
class ClassificationResult:
    label: str
    scores: dict[str, float] | None
    raw: str
    latency: float
    provider: str


# ---------------------------------------------------------------------------
# prompt rendering


def render_prompt(
    tpl: PromptTemplate,
    tax: TaxonomySpec,
    context: Sequence[str],
    text: str,
) -> str:
    """Deterministic prompt: instruction block, optional few-shot block,
    then context lines and the focus text on the final line, closed by the
    completion separator."""
    if not text.strip():
        raise EmptyText("cannot render a prompt for empty text")
    if "{labels}" not in tpl.preamble:
        raise TemplateError("preamble is missing the {labels} placeholder")
    instruction = tpl.preamble.replace("{labels}", ", ".join(tax.labels))
    definitions = "; ".join(
        f"({i}) {tax.definition(label)}" for i, label in enumerate(tax.labels, start=1)
    )
    instruction = instruction.replace("{definitions}", definitions)
    _check_labels_once(instruction, tax)

    blocks = [instruction]
    for shot_text, shot_label in tpl.few_shot:
        blocks.append(f"Message: {flatten_line(shot_text)}\nLabel: {shot_label}")
    message_lines = [flatten_line(line) for line in context]
    message_lines.append(flatten_line(text))
    blocks.append("\n".join(message_lines))
    return "\n\n".join(blocks) + SEPARATOR


def _check_labels_once(instruction: str, tax: TaxonomySpec) -> None:
    import re

    for label in tax.labels:
        hits = len(re.findall(rf"\b{re.escape(label)}\b", instruction))
        if hits != 1:
            raise TemplateError(
                f"label {label!r} appears {hits} times in the instruction block; "
                "expected exactly once"
            )


def render_finetune_prompt(context: Sequence[str], text: str) -> str:
    """Prompt form used in fine-tune corpora and against fine-tuned models:
    no instructions, just context lines, the text, and the separator."""
    lines = [flatten_line(line) for line in context]
    lines.append(flatten_line(text))
    return "\n".join(lines) + SEPARATOR


def focus_text(prompt: str) -> str:
    """The focus message of a rendered prompt: the last line before the
    separator (both prompt forms put it there)."""
    body = prompt[: -len(SEPARATOR)] if prompt.endswith(SEPARATOR) else prompt
    return body.rsplit("\n", 1)[-1]


def parse_completion(raw: str, tax: TaxonomySpec) -> str:
    tokens = raw.strip().lower().split()
    if tokens and tokens[0] in tax:
        return tokens[0]
    raise UnparseableCompletion(raw, tax.task.value)


# ---------------------------------------------------------------------------
# providers


class TransientProviderError(Exception):
    """Retryable transport failure (connection error, 5xx)."""


class RateLimitedError(TransientProviderError):
    """Retryable 429."""


class Completion:
    __slots__ = ("text", "scores")

    def __init__(self, text: str, scores: dict[str, float] | None = None):
        self.text = text
        self.scores = scores


def _load_default_lexicon() -> dict:
    with resources.files("modgate.data").joinpath("mock_lexicon.json").open(
        "r", encoding="utf-8"
    ) as fh:
        return json.load(fh)


def _hash01(*parts: str) -> float:
    digest = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


class MockProvider:
    """Deterministic offline provider: a pure function of (seed, lexicon,
    input).  Votes of lexicon tokens decide the label; a seeded noise knob
    flips the result to a uniformly random wrong label so correction loops
    have something to fix."""

    kind = "mock"

    def __init__(
        self,
        ref: ProviderRef,
        lexicon: dict | None = None,
        model_dir: str | Path | None = None,
    ):
        self.ref = ref
        self.lexicon = lexicon if lexicon is not None else _load_default_lexicon()
        self.model_dir = Path(model_dir) if model_dir else None
        self._models: dict[str, dict] = {}
        self._sem = threading.BoundedSemaphore(ref.max_parallel)

    def with_model(self, model_name: str) -> "MockProvider":
        clone = MockProvider(
            replace(self.ref, model_name=model_name),
            lexicon=self.lexicon,
            model_dir=self.model_dir,
        )
        clone._models = self._models
        return clone

    def complete(self, prompt: str, tax: TaxonomySpec) -> Completion:
        text = focus_text(prompt)
        task = tax.task.value
        table = self._lexicon_for(self.ref.model_name, task)
        votes: dict[str, int] = {}
        for token in tokenize(text):
            label = table.get(token)
            if label is not None and label in tax:
                votes[label] = votes.get(label, 0) + 1

        if votes:
            top = max(votes.values())
            winner = next(l for l in tax.labels if votes.get(l, 0) == top)
            confidence = 0.6 + 0.35 * top / sum(votes.values())
        else:
            winner = self.lexicon["defaults"].get(task, tax.labels[0])
            confidence = 0.9
        confidence -= 0.08 * _hash01(str(self.ref.seed), "jitter", task, text)
        confidence = min(max(confidence, 0.5), 0.99)

        if self.ref.noise > 0 and _hash01(str(self.ref.seed), "noise", task, text) < self.ref.noise:
            others = [l for l in tax.labels if l != winner]
            if others:
                pick = int(_hash01(str(self.ref.seed), "wrong", task, text) * len(others))
                winner = others[min(pick, len(others) - 1)]

        if len(tax.labels) == 1:
            scores = {tax.labels[0]: 1.0}
        else:
            rest = (1.0 - confidence) / (len(tax.labels) - 1)
            scores = {l: (confidence if l == winner else rest) for l in tax.labels}
        return Completion(f"{COMPLETION_PREFIX}{winner}{COMPLETION_STOP}", scores)

    def _lexicon_for(self, model_name: str, task: str) -> Mapping[str, str]:
        model = self._models.get(model_name)
        if model is None and self.model_dir is not None:
            path = self.model_dir / f"{model_name}.json"
            if path.exists():
                model = json.loads(path.read_text(encoding="utf-8"))
                self._models[model_name] = model
        if model is not None and model["task"] == task:
            return model["lexicon"]
        return self.lexicon.get(task, {})

    def finetune(self, corpus: bytes, base_model: str) -> str:
        """Mock fine-tuning: augment the task lexicon with each token's
        majority label in the corpus.  The returned id binds the corpus, so
        identical corpora yield identical models."""
        pairs = parse_finetune_corpus(corpus)
        tax = _infer_taxonomy(label for _ctx, _text, label in pairs)
        task = tax.task.value
        tallies: dict[str, dict[str, int]] = {}
        for _ctx, text, label in pairs:
            for token in tokenize(text):
                tallies.setdefault(token, {}).setdefault(label, 0)
                tallies[token][label] += 1
        learned = {}
        for token, counts in tallies.items():
            top = max(counts.values())
            learned[token] = next(l for l in tax.labels if counts.get(l, 0) == top)
        merged = dict(self.lexicon.get(task, {}))
        merged.update(learned)

        model_id = "mock-ft-" + hashlib.sha256(
            corpus + base_model.encode("utf-8")
        ).hexdigest()[:12]
        model = {"task": task, "base_model": base_model, "lexicon": merged}
        self._models[model_id] = model
        if self.model_dir is not None:
            self.model_dir.mkdir(parents=True, exist_ok=True)
            (self.model_dir / f"{model_id}.json").write_text(
                json.dumps(model, ensure_ascii=False, sort_keys=True), encoding="utf-8"
            )
        return model_id


def _default_transport(endpoint: EndpointConfig) -> Callable:
    client = httpx.Client(timeout=endpoint.timeout)

    def send(method: str, url: str, headers: dict, payload: dict | None):
        try:
            response = client.request(method, url, headers=headers, json=payload)
        except httpx.HTTPError as exc:
            raise TransientProviderError(str(exc)) from exc
        return response.status_code, response.json() if response.content else {}

    return send


class RemoteProvider:
    """HTTPS completion + fine-tune client with bearer-token auth.

    The transport is injectable so retry behavior is testable without a
    network; the default uses httpx.
    """

    kind = "remote"

    def __init__(self, ref: ProviderRef, transport: Callable | None = None,
                 poll_interval: float = 2.0, sleep: Callable = time.sleep):
        if ref.endpoint is None:
            raise ValueError("remote provider needs an endpoint config")
        self.ref = ref
        self.endpoint = ref.endpoint
        self.transport = transport or _default_transport(ref.endpoint)
        self.poll_interval = poll_interval
        self.sleep = sleep
        self._sem = threading.BoundedSemaphore(ref.max_parallel)

    def with_model(self, model_name: str) -> "RemoteProvider":
        return RemoteProvider(
            replace(self.ref, model_name=model_name),
            transport=self.transport,
            poll_interval=self.poll_interval,
            sleep=self.sleep,
        )

    def _headers(self) -> dict:
        key = os.environ.get(self.endpoint.api_key_env, "")
        if not key:
            raise ProviderUnavailable(
                f"no credential in ${self.endpoint.api_key_env}"
            )
        return {"Authorization": f"Bearer {key}"}

    def _call(self, method: str, path: str, payload: dict | None = None) -> dict:
        status, body = self.transport(
            method, f"{self.endpoint.base_url}{path}", self._headers(), payload
        )
        if status == 429:
            raise RateLimitedError("rate limited")
        if status >= 500:
            raise TransientProviderError(f"server error {status}")
        if status >= 400:
            raise ProviderUnavailable(f"request failed with {status}: {body}")
        return body

    def complete(self, prompt: str, tax: TaxonomySpec) -> Completion:
        body = self._call(
            "POST",
            "/completions",
            {
                "model": self.ref.model_name,
                "prompt": prompt,
                "max_tokens": 8,
                "temperature": 0,
                "stop": COMPLETION_STOP,
            },
        )
        try:
            text = body["choices"][0]["text"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderUnavailable(f"malformed completion payload: {body}") from exc
        return Completion(text, None)

    def finetune(self, corpus: bytes, base_model: str) -> str:
        upload = self._call(
            "POST",
            "/files",
            {"purpose": "fine-tune", "content": corpus.decode("utf-8")},
        )
        job = self._call(
            "POST",
            "/fine_tunes",
            {"training_file": upload["id"], "model": base_model},
        )
        job_id = job["id"]
        while True:
            status = self._call("GET", f"/fine_tunes/{job_id}")
            state = status.get("status")
            if state == "succeeded":
                return status["fine_tuned_model"]
            if state in ("failed", "cancelled"):
                raise JobFailed(f"fine-tune job {job_id}: {status.get('error', state)}")
            self.sleep(self.poll_interval)


def build_provider(
    ref: ProviderRef,
    lexicon: dict | None = None,
    model_dir: str | Path | None = None,
    transport: Callable | None = None,
):
    if ref.kind == "mock":
        return MockProvider(ref, lexicon=lexicon, model_dir=model_dir)
    return RemoteProvider(ref, transport=transport)


def provider_from_env(model_name: str = "ada", **kwargs):
    """Provider selected by MODGATE_PROVIDER (mock unless set to remote)."""
    kind = os.environ.get("MODGATE_PROVIDER", "mock")
    if kind == "remote":
        endpoint = EndpointConfig(base_url=os.environ.get(
            "MODGATE_BASE_URL", "https://api.openai.com/v1"))
        return build_provider(ProviderRef("remote", model_name, endpoint), **kwargs)
    return build_provider(ProviderRef("mock", model_name), **kwargs)


# ---------------------------------------------------------------------------
# classify


def classify(
    provider,
    prompt: str,
    tax: TaxonomySpec,
    sleep: Callable = time.sleep,
    jitter: Callable = None,
) -> ClassificationResult:
    """One classification with exponential-backoff retries on transient
    failures; never returns a label outside the taxonomy."""
    attempts = provider.ref.max_retries
    delay = BACKOFF_INITIAL
    last: Exception | None = None
    for attempt in range(1, attempts + 1):
        started = time.perf_counter()
        try:
            with provider._sem:
                completion = provider.complete(prompt, tax)
        except TransientProviderError as exc:
            last = exc
            if attempt == attempts:
                break
            factor = 1.0
            if jitter is not None:
                factor += BACKOFF_JITTER * (2 * jitter() - 1)
            sleep(delay * factor)
            delay *= BACKOFF_FACTOR
            continue
        label = parse_completion(completion.text, tax)
        scores = completion.scores
        if scores is not None:
            total = sum(scores.values())
            if abs(total - 1.0) > 1e-6:
                raise ProviderUnavailable(f"provider scores sum to {total}, not 1")
        return ClassificationResult(
            label=label,
            scores=scores,
            raw=completion.text,
            latency=time.perf_counter() - started,
            provider=provider.ref.summary(),
        )
    if isinstance(last, RateLimitedError):
        raise RateLimited(f"still rate limited after {attempts} attempts")
    raise ProviderUnavailable(f"provider failed after {attempts} attempts: {last}")


def classify_batch(
    provider,
    prompts: Sequence[str],
    tax: TaxonomySpec,
    sleep: Callable = time.sleep,
) -> list[ClassificationResult | Exception]:
    """Concurrent classification bounded by the provider's parallelism;
    results keep input order, failures are returned in place."""
    from concurrent.futures import ThreadPoolExecutor

    def one(prompt: str):
        try:
            return classify(provider, prompt, tax, sleep=sleep)
        except Exception as exc:   # caller decides per-item handling
            return exc

    with ThreadPoolExecutor(max_workers=provider.ref.max_parallel) as pool:
        return list(pool.map(one, prompts))


# ---------------------------------------------------------------------------
# fine-tune corpora


@dataclass(frozen=True)
class CorpusManifest:
    task: str
    counts: dict[str, int]
    total: int

    def to_dict(self) -> dict:
        return {"task": self.task, "counts": dict(self.counts), "total": self.total}


def _infer_taxonomy(labels: Iterable[str]) -> TaxonomySpec:
    seen = set(labels)
    for tax in (taxonomy_for(t) for t in Task):
        if seen <= set(tax.labels):
            return tax
    raise MixedTasks(f"labels {sorted(seen)} do not fit a single taxonomy")


def build_finetune_corpus(
    examples: Sequence[LabeledExample], tax: TaxonomySpec
) -> tuple[bytes, CorpusManifest]:
    """Serialize examples to the provider wire format plus a per-label
    manifest.  All examples must belong to the given taxonomy's task."""
    if not examples:
        raise EmptyCorpus("no examples to serialize")
    counts: dict[str, int] = {}
    lines = []
    for ex in examples:
        if ex.label not in tax:
            if any(ex.label in taxonomy_for(t) for t in Task):
                raise MixedTasks(
                    f"label {ex.label!r} belongs to a different task than {tax.task.value}"
                )
            raise UnknownLabel(ex.label, tax.task.value)
        counts[ex.label] = counts.get(ex.label, 0) + 1
        record = {
            "prompt": render_finetune_prompt(ex.context, ex.text),
            "completion": f"{COMPLETION_PREFIX}{ex.label}{COMPLETION_STOP}",
        }
        lines.append(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
    data = ("\n".join(lines) + "\n").encode("utf-8")
    manifest = CorpusManifest(
        task=tax.task.value,
        counts={l: counts[l] for l in tax.labels if l in counts},
        total=len(examples),
    )
    return data, manifest


def parse_finetune_corpus(data: bytes) -> list[tuple[tuple[str, ...], str, str]]:
    """Read a corpus back to (context, text, label) triples: the inverse of
    build_finetune_corpus for the texts it emits."""
    out = []
    # split on LF only: JSONL line breaks, not every Unicode line separator
    for i, line in enumerate(data.decode("utf-8").split("\n"), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            prompt, completion = record["prompt"], record["completion"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise EmptyCorpus(f"corpus line {i} is malformed: {exc}") from exc
        if not prompt.endswith(SEPARATOR):
            raise EmptyCorpus(f"corpus line {i} is missing the prompt separator")
        body = prompt[: -len(SEPARATOR)]
        lines = body.split("\n")
        out.append((tuple(lines[:-1]), lines[-1], completion.strip()))
    return out


def submit_finetune(provider, corpus: bytes, base_model: str) -> str:
    """Hand a built corpus to the provider's fine-tune endpoint and return
    the resulting model id (mock: a deterministic pseudo-model)."""
    if not corpus.strip():
        raise EmptyCorpus("refusing to submit an empty corpus")
    return provider.finetune(corpus, base_model)

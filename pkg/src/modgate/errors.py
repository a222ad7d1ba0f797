"""Exception types shared across the toolkit.

Every domain-level failure derives from ModgateError so the CLI can map it
to exit code 1; anything else escaping is a bug.
"""


class ModgateError(Exception):
    """Base class for all expected failures."""

    code = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


# domain
class UnknownLabel(ModgateError):
    code = "unknown_label"

    def __init__(self, label: str, task: str):
        super().__init__(f"label {label!r} is not in the {task} taxonomy")
        self.label = label
        self.task = task


class MissingAnnotator(ModgateError):
    code = "missing_annotator"


# ingest
class UnreadableSource(ModgateError):
    code = "unreadable_source"


class UnknownFormat(ModgateError):
    code = "unknown_format"


class UnsortedInput(ModgateError):
    code = "unsorted_input"


# gateway
class EmptyText(ModgateError):
    code = "empty_text"


class TemplateError(ModgateError):
    code = "template_error"


class ProviderUnavailable(ModgateError):
    code = "provider_unavailable"


class RateLimited(ModgateError):
    code = "rate_limited"


class UnparseableCompletion(ModgateError):
    code = "unparseable_completion"

    def __init__(self, raw: str, task: str):
        super().__init__(f"completion {raw!r} does not parse to a {task} label")
        self.raw = raw
        self.task = task


class EmptyCorpus(ModgateError):
    code = "empty_corpus"


class MixedTasks(ModgateError):
    code = "mixed_tasks"


class JobFailed(ModgateError):
    code = "job_failed"


# eval
class LengthMismatch(ModgateError):
    code = "length_mismatch"


class EmptyMatrix(ModgateError):
    code = "empty_matrix"


class NoPairableValues(ModgateError):
    code = "no_pairable_values"


class DegenerateAgreement(ModgateError):
    """All recorded values are one label; expected disagreement is zero and
    alpha is undefined (reported as its own outcome, never as 1.0)."""

    code = "degenerate_agreement"


# distill loop
class EmptySample(ModgateError):
    code = "empty_sample"


class DanglingReference(ModgateError):
    code = "dangling_reference"


class HoldoutOverlap(ModgateError):
    code = "holdout_overlap"


# analytics
class EmptyInput(ModgateError):
    code = "empty_input"


# moderation service
class ModelUnavailable(ModgateError):
    code = "model_unavailable"


class UnknownFlag(ModgateError):
    code = "unknown_flag"


class AlreadyResolved(ModgateError):
    code = "already_resolved"

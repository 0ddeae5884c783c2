"""Exception types shared across the toolkit.

Every error the CLI can surface derives from ToolError so the entry point
can emit one machine-parseable JSON object on stderr and a non-zero exit.
"""

from __future__ import annotations


class ToolError(Exception):
    code = "error"

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self)}


class CorpusReadError(ToolError):
    code = "corpus_read"

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset

    def to_json(self) -> dict:
        out = super().to_json()
        out["byte_offset"] = self.byte_offset
        return out


class UnknownCharacterError(ToolError):
    code = "unknown_character"

    def __init__(self, char: str, position: int):
        super().__init__(f"character {char!r} at position {position} is not in the pinyin table")
        self.char = char
        self.position = position


class EmptyCandidateSetError(ToolError):
    code = "empty_candidate_set"


class SpanOutOfRangeError(ToolError):
    code = "span_out_of_range"

    def __init__(self, instance_id: str, span, length: int):
        super().__init__(f"instance {instance_id}: span {span} out of range for text of length {length}")
        self.instance_id = instance_id


class ValidationError(ToolError):
    code = "validation"

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        detail = message
        if line is not None:
            detail = f"line {line}: {detail}"
        if field is not None:
            detail = f"{detail} (field: {field})"
        super().__init__(detail)
        self.line = line
        self.field = field


class ProviderError(ToolError):
    code = "provider"

    def __init__(self, provider_name: str, message: str):
        super().__init__(f"provider {provider_name}: {message}")
        self.provider_name = provider_name


class ProviderContractViolation(ToolError):
    code = "provider_contract"

    def __init__(self, provider_name: str, message: str):
        super().__init__(f"provider {provider_name}: {message}")
        self.provider_name = provider_name


class InvalidTextError(ToolError):
    code = "invalid_text"


class InvalidKError(ToolError):
    code = "invalid_k"


class UndefinedCorrelationError(ToolError):
    code = "undefined_correlation"


class IdMismatchError(ToolError):
    code = "id_mismatch"


class InvalidLabelError(ToolError):
    code = "invalid_label"


class MissingScoreError(ToolError):
    code = "missing_score"

    def __init__(self, candidate: str):
        super().__init__(f"no method score for rated candidate {candidate!r}")
        self.candidate = candidate


class InvalidRuleError(ToolError):
    code = "invalid_rule"


class RuleLengthMismatchError(ToolError):
    code = "rule_length_mismatch"


class AmbiguousRulesError(ToolError):
    code = "ambiguous_rules"


class UnknownInstanceError(ToolError):
    code = "unknown_instance"

    def __init__(self, instance_id: str):
        super().__init__(f"no instance with id {instance_id!r} in the group")
        self.instance_id = instance_id


class MissingReferenceError(ToolError):
    code = "missing_reference"

    def __init__(self, instance_id: str):
        super().__init__(f"instance {instance_id!r} has no reference translation")
        self.instance_id = instance_id


class ProbeFailedError(ToolError):
    code = "probe_failed"


class StageDependencyError(ToolError):
    code = "stage_dependency"


class MissingContextError(ToolError):
    code = "missing_context"

    def __init__(self, candidate: str, original: str):
        super().__init__(f"no dataset source contains {original!r} (needed as context for {candidate!r})")
        self.candidate = candidate
        self.original = original

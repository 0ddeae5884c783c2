"""Perturbation group construction.

Method 1 rewrites the Chinese source by swapping each slang word for one of
its generated homophones (length-preserving, so error spans stay valid).
Method 2 improves the English side instead: either a targeted fix of the
slang translation, or the full human reference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

from .dataset import Dataset, Instance
from .errors import (
    AmbiguousRulesError,
    InvalidRuleError,
    MissingReferenceError,
    RuleLengthMismatchError,
    UnknownInstanceError,
    ValidationError,
)

GROUP_NAMES = ("G0", "M1G1", "M1G2", "M1G3", "M1G4", "M1G5", "M2G1", "M2G2")


@dataclass(frozen=True)
class SubstitutionRule:
    original: str
    replacement: str
    side: str  # "source" | "target"


@dataclass(frozen=True)
class PerturbationGroup:
    name: str
    instances: tuple[Instance, ...]
    provenance: str

    def to_dataset(self) -> Dataset:
        return Dataset(instances=self.instances, name=self.name)


def load_rules(path: str | Path) -> list[SubstitutionRule]:
    rules = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc.msg}", line=lineno) from exc
        rule = SubstitutionRule(original=obj["original"], replacement=obj["replacement"], side=obj["side"])
        _validate_rule(rule)
        rules.append(rule)
    return rules


def load_fixes(path: str | Path) -> dict[str, str]:
    fixes = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc.msg}", line=lineno) from exc
        if not obj.get("mt"):
            raise ValidationError("corrected mt must be non-empty", line=lineno, field="mt")
        if obj["id"] in fixes:
            raise ValidationError(f"duplicate fix for id {obj['id']!r}", line=lineno, field="id")
        fixes[obj["id"]] = obj["mt"]
    return fixes


def _validate_rule(rule: SubstitutionRule) -> None:
    if rule.side not in ("source", "target"):
        raise InvalidRuleError(f"rule side must be 'source' or 'target', got {rule.side!r}")
    if not rule.original or not rule.replacement:
        raise InvalidRuleError("rule original and replacement must be non-empty")
    if rule.original == rule.replacement:
        raise InvalidRuleError(f"rule maps {rule.original!r} to itself")


def _check_rules_compatible(rules: list[SubstitutionRule]) -> None:
    for rule in rules:
        _validate_rule(rule)
        if rule.side != "source":
            raise InvalidRuleError(f"source perturbation got a {rule.side!r}-side rule for {rule.original!r}")
        if len(rule.original) != len(rule.replacement):
            raise RuleLengthMismatchError(
                f"{rule.original!r} -> {rule.replacement!r} changes length "
                f"({len(rule.original)} -> {len(rule.replacement)} characters)"
            )
    originals = [r.original for r in rules]
    for i, a in enumerate(originals):
        for b in originals[i + 1 :]:
            if a == b:
                raise AmbiguousRulesError(f"duplicate rule original {a!r}")
            if a in b or b in a or _can_overlap(a, b):
                raise AmbiguousRulesError(f"rule originals {a!r} and {b!r} can match overlapping text")


def _can_overlap(a: str, b: str) -> bool:
    # A suffix of one equal to a prefix of the other means both could claim the same span.
    for k in range(1, min(len(a), len(b))):
        if a[-k:] == b[:k] or b[-k:] == a[:k]:
            return True
    return False


def replace_all(text: str, rules: list[SubstitutionRule]) -> str:
    """Replace every occurrence of every rule original, left to right, non-overlapping."""
    ordered = sorted(rules, key=lambda r: r.original)
    out = []
    i = 0
    n = len(text)
    while i < n:
        for rule in ordered:
            if text.startswith(rule.original, i):
                out.append(rule.replacement)
                i += len(rule.original)
                break
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def make_g0(ds: Dataset) -> PerturbationGroup:
    """The unperturbed source-MT group the others are measured against."""
    return PerturbationGroup(name="G0", instances=tuple(ds.instances), provenance="identity")


def apply_method1(
    g0: PerturbationGroup, rules: list[SubstitutionRule], name: str = "M1G1"
) -> PerturbationGroup:
    """Swap slang words in every source for their homophones; everything else is copied verbatim."""
    _check_rules_compatible(rules)
    instances = tuple(replace(inst, source=replace_all(inst.source, rules)) for inst in g0.instances)
    provenance = "source homophone substitution: " + "; ".join(
        f"{r.original}->{r.replacement}" for r in sorted(rules, key=lambda r: r.original)
    ) if rules else "identity (no rules)"
    return PerturbationGroup(name=name, instances=instances, provenance=provenance)


def apply_method2_fix_slang(
    g0: PerturbationGroup, fixes: Mapping[str, str], name: str = "M2G1"
) -> PerturbationGroup:
    """Replace the MT output of listed instances with a slang-corrected translation."""
    known = {inst.id for inst in g0.instances}
    for instance_id in fixes:
        if instance_id not in known:
            raise UnknownInstanceError(instance_id)
    # Only the mt field changes; target spans are copied verbatim, so fixes
    # must stay long enough to keep the recorded spans in bounds.
    instances = tuple(
        replace(inst, mt=fixes[inst.id]) if inst.id in fixes else inst for inst in g0.instances
    )
    return PerturbationGroup(
        name=name,
        instances=instances,
        provenance=f"targeted slang translation fixes for {len(fixes)} instances",
    )


def apply_method2_use_reference(g0: PerturbationGroup, name: str = "M2G2") -> PerturbationGroup:
    """Replace every MT output with the human reference translation."""
    for inst in g0.instances:
        if inst.reference is None:
            raise MissingReferenceError(inst.id)
    instances = tuple(replace(inst, mt=inst.reference) for inst in g0.instances)
    return PerturbationGroup(
        name=name, instances=instances, provenance="full reference substitution"
    )

"""Homophone candidate generation.

Error-causing slang words are read off the highlighted source spans of a
quality-annotated dataset. For each slang word we take the toneless root
sound of every character, gather all characters sharing those root sounds,
and enumerate the cartesian product of the per-position character pools.
The original word is dropped and candidates below the string-frequency
threshold are filtered out.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from itertools import product

from .dataset import Instance
from .errors import EmptyCandidateSetError, SpanOutOfRangeError
from .lexicon import FrequencyDict, PinyinTable, Segmenter, latinize, segment


@dataclass(frozen=True)
class SlangEntry:
    """An error-causing slang word with its count across error annotations."""

    word: str
    frequency: int
    gloss: str | None = None


@dataclass(frozen=True)
class Candidate:
    text: str
    root: tuple[str, ...]
    aggregate_frequency: int
    combo_frequency: int
    percentile: float | None = None
    self_information: float | None = None


@dataclass(frozen=True)
class CandidateSet:
    original: SlangEntry
    candidates: tuple[Candidate, ...]

    def texts(self) -> list[str]:
        return [c.text for c in self.candidates]


def extract_error_words(
    instances: list[Instance], seg: Segmenter, min_freq: int = 10
) -> list[SlangEntry]:
    """Tokenize every highlighted source span and keep tokens above min_freq.

    Output is sorted by descending count, ties broken by code-point order.
    """
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    counter: Counter[str] = Counter()
    for inst in instances:
        for start, end in inst.src_error_spans:
            if not (0 <= start < end <= len(inst.source)):
                raise SpanOutOfRangeError(inst.id, (start, end), len(inst.source))
            counter.update(segment(inst.source[start:end], seg))
    entries = [SlangEntry(word=w, frequency=n) for w, n in counter.items() if n >= min_freq]
    entries.sort(key=lambda e: (-e.frequency, e.word))
    return entries


def character_pools(word: str, table: PinyinTable) -> list[list[str]]:
    """Per-position candidate characters: the union over every reading of the original character."""
    pools = []
    for pos, syllables in enumerate(latinize(word, table)):
        pool: set[str] = set()
        for s in syllables:
            pool.update(table.chars_of(s))
        if not pool:
            raise EmptyCandidateSetError(f"no characters share a reading with {word[pos]!r} at position {pos}")
        pools.append(sorted(pool))
    return pools


def enumerate_combinations(word: str, table: PinyinTable) -> list[str]:
    """Every character combination sharing the word's root sounds, original included."""
    return ["".join(combo) for combo in product(*character_pools(word, table))]


def _root_of(candidate: str, original: str, table: PinyinTable) -> tuple[str, ...]:
    # Per position, the shared toneless syllable (smallest one when a polyphone shares several).
    root = []
    for c_char, o_char in zip(candidate, original):
        shared = table.syllables_of(c_char) & table.syllables_of(o_char)
        root.append(min(shared))
    return tuple(root)


def generate_candidates(
    entry: SlangEntry, table: PinyinTable, freq: FrequencyDict, combo_min: int = 100
) -> CandidateSet:
    """Enumerate homophone combinations for one slang word and filter by string frequency.

    Keeps combinations whose exact corpus frequency is strictly above
    combo_min; the original word itself is always excluded. freq must carry
    string counts for the combinations (see FrequencyDict.merged_with), since
    plain character dictionaries answer 0 for multi-character keys.
    """
    if combo_min < 0:
        raise ValueError("combo_min must be >= 0")
    candidates = []
    for text in enumerate_combinations(entry.word, table):
        if text == entry.word:
            continue
        combo_freq = freq.count(text)
        if combo_freq <= combo_min:
            continue
        candidates.append(
            Candidate(
                text=text,
                root=_root_of(text, entry.word, table),
                aggregate_frequency=sum(freq.count(ch) for ch in text),
                combo_frequency=combo_freq,
            )
        )
    candidates.sort(key=lambda c: (-c.combo_frequency, c.text))
    return CandidateSet(original=entry, candidates=tuple(candidates))


def with_scores(cand: Candidate, percentile: float | None = None, self_information: float | None = None) -> Candidate:
    updates = {}
    if percentile is not None:
        updates["percentile"] = percentile
    if self_information is not None:
        updates["self_information"] = self_information
    return replace(cand, **updates)

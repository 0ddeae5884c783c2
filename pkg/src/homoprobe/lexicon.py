"""Character frequencies, toneless pinyin transcription and dictionary segmentation.

The frequency dictionary counts single characters from a microblog-style
corpus (one document per line) and can additionally hold exact-string counts
merged in by the candidate-generation stage. The pinyin table is loaded from
a TSV data file so the mapping is reproducible bit-for-bit; tones are erased
on load because homophone matching works on root sounds.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import CorpusReadError, UnknownCharacterError, ValidationError

_SYLLABLE_RE = re.compile(r"^[a-z]+$")


@dataclass(frozen=True)
class FrequencyDict:
    """Counts of characters (and optionally longer strings) from one corpus.

    total_chars is the number of characters seen at build time, including
    characters later pruned by a min_count threshold. Lookups of absent keys
    return 0.
    """

    counts: Mapping[str, int]
    total_chars: int
    source_id: str

    def count(self, key: str) -> int:
        return self.counts.get(key, 0)

    def merged_with(self, extra: Mapping[str, int]) -> "FrequencyDict":
        """New dict with extra string counts merged in; zero counts are dropped."""
        merged = dict(self.counts)
        for key, n in extra.items():
            if n > 0:
                merged[key] = n
        return FrequencyDict(counts=merged, total_chars=self.total_chars, source_id=self.source_id)

    def to_json_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "total_chars": self.total_chars,
            "counts": {k: self.counts[k] for k in sorted(self.counts)},
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "FrequencyDict":
        return cls(counts=dict(obj["counts"]), total_chars=int(obj["total_chars"]), source_id=str(obj["source_id"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "FrequencyDict":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def iter_corpus_lines(path: str | Path) -> Iterator[str]:
    """Yield corpus lines, turning undecodable bytes into CorpusReadError with a byte offset."""
    offset = 0
    with open(path, "rb") as fh:
        for raw in fh:
            try:
                yield raw.decode("utf-8").rstrip("\r\n")
            except UnicodeDecodeError as exc:
                raise CorpusReadError(
                    f"{path}: invalid UTF-8 at byte offset {offset + exc.start}",
                    byte_offset=offset + exc.start,
                ) from exc
            offset += len(raw)


def build_frequency_dict(
    corpus: Iterable[str], min_count: int = 1, source_id: str = "corpus"
) -> FrequencyDict:
    """Count every character of every line; keep characters seen at least max(min_count, 1) times."""
    if min_count < 0:
        raise ValueError("min_count must be >= 0")
    counter: Counter[str] = Counter()
    total = 0
    for line in corpus:
        line = line.rstrip("\r\n")
        counter.update(line)
        total += len(line)
    threshold = max(min_count, 1)
    counts = {ch: n for ch, n in counter.items() if n >= threshold}
    return FrequencyDict(counts=counts, total_chars=total, source_id=source_id)


def count_substring_occurrences(lines: Iterable[str], targets: Iterable[str]) -> dict[str, int]:
    """Exact occurrence counts of each target string, overlapping matches included.

    Matches never span lines; counting is independent of any segmentation.
    """
    wanted = [t for t in set(targets) if t]
    counts = {t: 0 for t in wanted}
    for line in lines:
        for t in wanted:
            start = line.find(t)
            while start != -1:
                counts[t] += 1
                start = line.find(t, start + 1)
    return counts


@dataclass(frozen=True)
class PinyinTable:
    """Bidirectional map between characters and their toneless syllables.

    Polyphones carry several syllables; the two maps are mutual inverses.
    """

    char_to_syllables: Mapping[str, frozenset[str]]
    syllable_to_chars: Mapping[str, frozenset[str]]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "PinyinTable":
        c2s: dict[str, set[str]] = {}
        s2c: dict[str, set[str]] = {}
        seen: set[tuple[str, str]] = set()
        for char, syllable in pairs:
            if len(char) != 1:
                raise ValidationError(f"pinyin table key {char!r} is not a single character")
            if not _SYLLABLE_RE.match(syllable):
                raise ValidationError(f"syllable {syllable!r} for {char!r} is not lowercase Latin")
            if (char, syllable) in seen:
                raise ValidationError(f"duplicate pinyin table pair {char!r}\t{syllable!r}")
            seen.add((char, syllable))
            c2s.setdefault(char, set()).add(syllable)
            s2c.setdefault(syllable, set()).add(char)
        return cls(
            char_to_syllables={c: frozenset(s) for c, s in c2s.items()},
            syllable_to_chars={s: frozenset(c) for s, c in s2c.items()},
        )

    @classmethod
    def load(cls, path: str | Path) -> "PinyinTable":
        pairs = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValidationError(f"{path}: malformed pinyin table line", line=lineno)
            pairs.append((parts[0], parts[1]))
        return cls.from_pairs(pairs)

    def syllables_of(self, char: str) -> frozenset[str]:
        return self.char_to_syllables.get(char, frozenset())

    def chars_of(self, syllable: str) -> frozenset[str]:
        return self.syllable_to_chars.get(syllable, frozenset())


def latinize(word: str, table: PinyinTable) -> list[frozenset[str]]:
    """Per-character sets of toneless syllables, in word order.

    Raises UnknownCharacterError naming the character and its position when
    the table has no reading for it.
    """
    out = []
    for pos, char in enumerate(word):
        syllables = table.syllables_of(char)
        if not syllables:
            raise UnknownCharacterError(char, pos)
        out.append(syllables)
    return out


@dataclass(frozen=True)
class Segmenter:
    """Greedy longest-match segmenter over a fixed word list."""

    word_list: frozenset[str]
    max_word_len: int

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "Segmenter":
        wl = frozenset(w for w in words if w)
        max_len = max((len(w) for w in wl), default=1)
        return cls(word_list=wl, max_word_len=max_len)

    @classmethod
    def load(cls, path: str | Path) -> "Segmenter":
        words = [w.strip() for w in Path(path).read_text(encoding="utf-8").splitlines()]
        return cls.from_words(w for w in words if w and not w.startswith("#"))


def segment(text: str, seg: Segmenter) -> list[str]:
    """Split text left-to-right, always taking the longest word-list match.

    Characters not covered by the word list become single-character tokens,
    so the concatenation of the output always equals the input.
    """
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        match = text[i]
        for length in range(min(seg.max_word_len, n - i), 1, -1):
            piece = text[i : i + length]
            if piece in seg.word_list:
                match = piece
                break
        tokens.append(match)
        i += len(match)
    return tokens

"""Candidate ranking by percentile score and by self-information.

The percentile baseline sorts a candidate set by summed character frequency
(ascending) and scores each candidate as its 1-based index over the set size
times 100; picking the top k surfaces the rarest character combinations.

Self-information converts a language-model probability into bits,
I(x) = -log2 P(x), over a pluggable provider of natural-log probabilities.
A deterministic corpus unigram provider ships for offline use; neural models
are reached over HTTP and never embedded.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Protocol, Sequence

import requests

from .errors import (
    EmptyCandidateSetError,
    InvalidKError,
    InvalidTextError,
    ProviderContractViolation,
    ProviderError,
)
from .homogen import Candidate, CandidateSet, with_scores
from .lexicon import FrequencyDict

_LN2 = math.log(2.0)


class LogProbProvider(Protocol):
    name: str

    def scores(self, texts: Sequence[str]) -> list[float]:
        """Natural-log probability per text, one value <= 0 each, input order."""
        ...


@dataclass(frozen=True)
class RankedCandidates:
    method: str  # "percentile" | "self_information"
    provider_name: str
    items: tuple[tuple[Candidate, float], ...]
    k: int

    def top(self) -> list[Candidate]:
        return [cand for cand, _ in self.items[: min(self.k, len(self.items))]]


def percentile_scores(
    cands: CandidateSet, freq: FrequencyDict, k: int = 5, direction: str = "asc"
) -> RankedCandidates:
    """Rank candidates by percentile of summed character frequency.

    Candidates are sorted by aggregate frequency ascending (ties broken by
    code-point order of the text) and the i-th of N gets percentile i/N*100.
    direction="asc" keeps the rarest-first order so top-k picks the least
    frequent character combinations; "desc" reverses the pick order while
    keeping the same percentile values.
    """
    if not cands.candidates:
        raise EmptyCandidateSetError(f"no candidates to score for {cands.original.word!r}")
    if k < 1:
        raise InvalidKError(f"k must be >= 1, got {k}")
    if direction not in ("asc", "desc"):
        raise ValueError(f"direction must be 'asc' or 'desc', got {direction!r}")
    scored = []
    for cand in cands.candidates:
        f_h = sum(freq.count(ch) for ch in cand.text)
        scored.append((f_h, cand))
    scored.sort(key=lambda pair: (pair[0], pair[1].text))
    n = len(scored)
    items = []
    for index, (f_h, cand) in enumerate(scored, start=1):
        pct = index / n * 100.0
        updated = replace(cand, aggregate_frequency=f_h, percentile=pct)
        items.append((updated, pct))
    if direction == "desc":
        items.reverse()
    return RankedCandidates(method="percentile", provider_name="corpus", items=tuple(items), k=k)


def self_information(text: str, provider: LogProbProvider) -> float:
    """Bits of surprise of text under the provider: -log2 P(text)."""
    if not text:
        raise InvalidTextError("self_information requires a non-empty text")
    try:
        logprob = provider.scores([text])[0]
    except (ProviderError, ProviderContractViolation, InvalidTextError):
        raise
    except Exception as exc:
        raise ProviderError(getattr(provider, "name", "unknown"), f"scoring failed: {exc}") from exc
    return _to_bits(logprob, provider)


def _to_bits(logprob: float, provider: LogProbProvider) -> float:
    if not isinstance(logprob, (int, float)) or not math.isfinite(logprob):
        raise ProviderContractViolation(provider.name, f"log-probability {logprob!r} is not finite")
    if logprob > 0.0:
        raise ProviderContractViolation(provider.name, f"positive log-probability {logprob!r}")
    return -logprob / _LN2


def rank_by_self_information(
    cands: CandidateSet, provider: LogProbProvider, k: int, direction: str = "desc"
) -> RankedCandidates:
    """Score all candidates with one batched provider call and sort by bits.

    direction="desc" prefers the most informative (least probable)
    candidates; ties fall back to code-point order of the text.
    """
    if k < 1:
        raise InvalidKError(f"k must be >= 1, got {k}")
    if not cands.candidates:
        raise EmptyCandidateSetError(f"no candidates to score for {cands.original.word!r}")
    if direction not in ("asc", "desc"):
        raise ValueError(f"direction must be 'asc' or 'desc', got {direction!r}")
    texts = cands.texts()
    try:
        logprobs = provider.scores(texts)
    except (ProviderError, ProviderContractViolation, InvalidTextError):
        raise
    except Exception as exc:
        raise ProviderError(getattr(provider, "name", "unknown"), f"scoring failed: {exc}") from exc
    if len(logprobs) != len(texts):
        raise ProviderContractViolation(provider.name, f"{len(texts)} texts in, {len(logprobs)} log-probs out")
    items = []
    for cand, lp in zip(cands.candidates, logprobs):
        bits = _to_bits(lp, provider)
        items.append((with_scores(cand, self_information=bits), bits))
    sign = -1.0 if direction == "desc" else 1.0
    items.sort(key=lambda pair: (sign * pair[1], pair[0].text))
    return RankedCandidates(
        method="self_information", provider_name=provider.name, items=tuple(items), k=k
    )


class CorpusUnigramProvider:
    """Deterministic offline stand-in: characters are independent unigrams.

    log P(text) = sum over characters of ln(count(c) / total_chars); unseen
    characters are smoothed as count 0.5 so log-probs stay finite.
    """

    name = "corpus"

    def __init__(self, freq: FrequencyDict):
        if freq.total_chars <= 0:
            raise ValueError("corpus unigram provider needs total_chars > 0")
        self._freq = freq

    def scores(self, texts: Sequence[str]) -> list[float]:
        out = []
        log_total = math.log(self._freq.total_chars)
        for text in texts:
            if not text:
                raise InvalidTextError("cannot score an empty text")
            logprob = 0.0
            for ch in text:
                count = self._freq.count(ch)
                logprob += math.log(count if count > 0 else 0.5) - log_total
            out.append(logprob)
        return out


def corpus_unigram_provider(freq: FrequencyDict) -> CorpusUnigramProvider:
    return CorpusUnigramProvider(freq)


class RemoteLogProbProvider:
    """HTTP client for a whole-sequence log-probability endpoint.

    POSTs {"model", "texts"} to <endpoint>/v1/logprob and expects
    {"logprobs": [...]} back, natural log, one value per text in order.
    Large batches can be split and issued concurrently; results are
    reassembled in input order.
    """

    def __init__(
        self,
        endpoint_url: str,
        model_name: str,
        timeout: float = 60.0,
        retries: int = 3,
        backoff: float = 0.5,
        batch_size: int | None = None,
        parallelism: int = 4,
    ):
        self.endpoint_url = endpoint_url.rstrip("/")
        self.name = model_name
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.batch_size = batch_size
        self.parallelism = max(1, parallelism)

    def _post_batch(self, texts: Sequence[str]) -> list[float]:
        url = f"{self.endpoint_url}/v1/logprob"
        payload = {"model": self.name, "texts": list(texts)}
        response = _post_with_retries(url, payload, self.name, self.timeout, self.retries, self.backoff)
        try:
            body = response.json()
            logprobs = body["logprobs"]
        except Exception as exc:
            raise ProviderContractViolation(self.name, f"malformed response body: {exc}") from exc
        if not isinstance(logprobs, list) or len(logprobs) != len(texts):
            raise ProviderContractViolation(self.name, f"expected {len(texts)} logprobs, got {logprobs!r}")
        return [float(lp) for lp in logprobs]

    def scores(self, texts: Sequence[str]) -> list[float]:
        for text in texts:
            if not text:
                raise InvalidTextError("cannot score an empty text")
        if self.batch_size is None or len(texts) <= self.batch_size:
            return self._post_batch(texts)
        chunks = [texts[i : i + self.batch_size] for i in range(0, len(texts), self.batch_size)]
        with ThreadPoolExecutor(max_workers=min(self.parallelism, len(chunks))) as pool:
            results = list(pool.map(self._post_batch, chunks))
        return [lp for chunk in results for lp in chunk]


def remote_lm_provider(endpoint_url: str, model_name: str, **kwargs) -> RemoteLogProbProvider:
    return RemoteLogProbProvider(endpoint_url, model_name, **kwargs)


def _post_with_retries(
    url: str, payload: dict, provider_name: str, timeout: float, retries: int, backoff: float
):
    """Retry transient failures (connection errors, timeouts, 5xx) up to `retries` attempts."""
    last_error = None
    for attempt in range(retries):
        try:
            response = requests.post(url, json=payload, timeout=timeout)
        except requests.RequestException as exc:
            last_error = f"request failed: {exc}"
        else:
            if response.status_code == 200:
                return response
            last_error = f"HTTP {response.status_code}"
            if not 500 <= response.status_code < 600:
                raise ProviderError(provider_name, last_error)
        if attempt + 1 < retries and backoff > 0:
            time.sleep(backoff * (2**attempt))
    raise ProviderError(provider_name, f"{last_error} after {retries} attempts")

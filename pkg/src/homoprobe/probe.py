"""Probing external QE scorers and emotion predictors with perturbation groups.

All models are reached over a small HTTP contract and treated as black
boxes. A record/replay cassette keyed by a request fingerprint makes probe
runs reproducible offline, and a hash-derived stub provides deterministic
scores for tests without any recording.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import requests

from .dataset import EMOTION_LABELS
from .errors import (
    ProbeFailedError,
    ProviderContractViolation,
    ProviderError,
    ValidationError,
)
from .perturb import PerturbationGroup


class QEProvider(Protocol):
    name: str

    def score(self, source: str, mt: str) -> float: ...


class EmotionPredictor(Protocol):
    name: str

    def predict(self, text: str) -> str: ...


@dataclass(frozen=True)
class ProbeEntry:
    instance_id: str
    value: float | str | None
    error: str | None = None


@dataclass(frozen=True)
class ProbeResult:
    group_name: str
    model_name: str
    kind: str  # "qe" | "emotion"
    entries: tuple[ProbeEntry, ...]

    @property
    def complete(self) -> bool:
        return all(e.error is None for e in self.entries)

    def scores(self) -> list[tuple[str, float]]:
        return [(e.instance_id, e.value) for e in self.entries if e.error is None]

    def labels(self) -> list[tuple[str, str]]:
        return [(e.instance_id, e.value) for e in self.entries if e.error is None]

    def missing(self) -> list[tuple[str, str]]:
        return [(e.instance_id, e.error) for e in self.entries if e.error is not None]


def request_fingerprint(kind: str, payload: dict) -> str:
    """Stable key for one wire request: sha256 over the canonical request JSON."""
    canonical = json.dumps(
        {"endpoint": kind, **payload}, ensure_ascii=False, sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def qe_fingerprint(model: str, source: str, mt: str) -> str:
    return request_fingerprint("qe", {"model": model, "source": source, "mt": mt})


def emotion_fingerprint(text: str) -> str:
    # The emotion wire request carries only the text, so the key does too.
    return request_fingerprint("emotion", {"text": text})


def _probe(
    group: PerturbationGroup,
    model_name: str,
    kind: str,
    one: Callable,
    parallelism: int,
) -> ProbeResult:
    def run_one(inst) -> ProbeEntry:
        try:
            return ProbeEntry(instance_id=inst.id, value=one(inst))
        except Exception as exc:  # per-instance failures never abort the batch
            return ProbeEntry(instance_id=inst.id, value=None, error=f"{type(exc).__name__}: {exc}")

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        entries = tuple(pool.map(run_one, group.instances))
    if entries and all(e.error is not None for e in entries):
        raise ProbeFailedError(
            f"{kind} probe of group {group.name} against {model_name} failed for all "
            f"{len(entries)} instances (first error: {entries[0].error})"
        )
    return ProbeResult(group_name=group.name, model_name=model_name, kind=kind, entries=entries)


def run_probe(group: PerturbationGroup, provider: QEProvider, parallelism: int = 4) -> ProbeResult:
    """One QE prediction per instance, input order preserved; failures are recorded per instance."""
    return _probe(group, provider.name, "qe", lambda inst: float(provider.score(inst.source, inst.mt)), parallelism)


def predict_labels(
    group: PerturbationGroup, predictor: EmotionPredictor, parallelism: int = 4
) -> ProbeResult:
    """One emotion label per instance; same ordering and failure contract as run_probe."""
    return _probe(group, predictor.name, "emotion", lambda inst: predictor.predict(inst.source), parallelism)


# --- HTTP providers ----------------------------------------------------------


def _post_json(
    url: str, payload: dict, provider_name: str, timeout: float, retries: int, backoff: float
) -> dict:
    last_error = None
    for attempt in range(retries):
        try:
            response = requests.post(url, json=payload, timeout=timeout)
        except requests.RequestException as exc:
            last_error = f"request failed: {exc}"
        else:
            if response.status_code == 200:
                try:
                    return response.json()
                except Exception as exc:
                    raise ProviderContractViolation(provider_name, f"malformed response body: {exc}") from exc
            last_error = f"HTTP {response.status_code}"
            if not 500 <= response.status_code < 600:
                raise ProviderError(provider_name, last_error)
        if attempt + 1 < retries and backoff > 0:
            time.sleep(backoff * (2**attempt))
    raise ProviderError(provider_name, f"{last_error} after {retries} attempts")


class HttpQEProvider:
    """POST {base}/v1/qe with {"model", "source", "mt"}; expects {"score": float}."""

    def __init__(self, endpoint_url: str, model_name: str, timeout: float = 60.0, retries: int = 3, backoff: float = 0.5):
        self.endpoint_url = endpoint_url.rstrip("/")
        self.name = model_name
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def score(self, source: str, mt: str) -> float:
        body = _post_json(
            f"{self.endpoint_url}/v1/qe",
            {"model": self.name, "source": source, "mt": mt},
            self.name,
            self.timeout,
            self.retries,
            self.backoff,
        )
        if "score" not in body or isinstance(body["score"], bool) or not isinstance(body["score"], (int, float)):
            raise ProviderContractViolation(self.name, f"response missing numeric score: {body!r}")
        return float(body["score"])


class HttpEmotionPredictor:
    """POST {base}/v1/emotion with {"text"}; expects {"label": one of the six labels}."""

    def __init__(self, endpoint_url: str, model_name: str = "emotion", timeout: float = 60.0, retries: int = 3, backoff: float = 0.5):
        self.endpoint_url = endpoint_url.rstrip("/")
        self.name = model_name
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def predict(self, text: str) -> str:
        body = _post_json(
            f"{self.endpoint_url}/v1/emotion",
            {"text": text},
            self.name,
            self.timeout,
            self.retries,
            self.backoff,
        )
        label = body.get("label")
        if label not in EMOTION_LABELS:
            raise ProviderContractViolation(self.name, f"response label {label!r} not in {EMOTION_LABELS}")
        return label


# --- Record / replay ---------------------------------------------------------


def load_cassette(path: str | Path) -> dict[str, dict]:
    """Cassette file: JSON lines {"request_hash": str, "response": object}."""
    responses: dict[str, dict] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            responses[obj["request_hash"]] = obj["response"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValidationError(f"malformed cassette entry: {exc}", line=lineno) from exc
    return responses


class CassetteWriter:
    """Appends new request/response pairs, one JSON line each, thread-safe."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._seen = set(load_cassette(path)) if self.path.exists() else set()
        self._lock = threading.Lock()

    def record(self, request_hash: str, response: dict) -> None:
        with self._lock:
            if request_hash in self._seen:
                return
            self._seen.add(request_hash)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {"request_hash": request_hash, "response": response},
                        ensure_ascii=False,
                        sort_keys=True,
                    )
                    + "\n"
                )


class ReplayQEProvider:
    """Serves QE scores from a recorded cassette; unseen requests fail."""

    def __init__(self, cassette: str | Path | dict, model_name: str):
        self.name = model_name
        self._responses = cassette if isinstance(cassette, dict) else load_cassette(cassette)

    def score(self, source: str, mt: str) -> float:
        key = qe_fingerprint(self.name, source, mt)
        if key not in self._responses:
            raise ProviderError(self.name, f"no recorded response for request {key[:12]}...")
        body = self._responses[key]
        if not isinstance(body, dict) or not isinstance(body.get("score"), (int, float)):
            raise ProviderContractViolation(self.name, f"recorded response malformed: {body!r}")
        return float(body["score"])


class ReplayEmotionPredictor:
    def __init__(self, cassette: str | Path | dict, model_name: str = "emotion"):
        self.name = model_name
        self._responses = cassette if isinstance(cassette, dict) else load_cassette(cassette)

    def predict(self, text: str) -> str:
        key = emotion_fingerprint(text)
        if key not in self._responses:
            raise ProviderError(self.name, f"no recorded response for request {key[:12]}...")
        body = self._responses[key]
        label = body.get("label") if isinstance(body, dict) else None
        if label not in EMOTION_LABELS:
            raise ProviderContractViolation(self.name, f"recorded label {label!r} not in {EMOTION_LABELS}")
        return label


class RecordingQEProvider:
    """Passes through to an inner provider and records each response."""

    def __init__(self, inner: QEProvider, writer: CassetteWriter):
        self.inner = inner
        self.writer = writer
        self.name = inner.name

    def score(self, source: str, mt: str) -> float:
        value = self.inner.score(source, mt)
        self.writer.record(qe_fingerprint(self.name, source, mt), {"score": value})
        return value


class RecordingEmotionPredictor:
    def __init__(self, inner: EmotionPredictor, writer: CassetteWriter):
        self.inner = inner
        self.writer = writer
        self.name = inner.name

    def predict(self, text: str) -> str:
        label = self.inner.predict(text)
        self.writer.record(emotion_fingerprint(text), {"label": label})
        return label


# --- Deterministic stubs ------------------------------------------------------


class HashStubQEProvider:
    """Deterministic pseudo-scores in [0, 1) derived from the request digest."""

    def __init__(self, model_name: str = "qe-stub"):
        self.name = model_name

    def score(self, source: str, mt: str) -> float:
        digest = hashlib.sha256(f"{self.name}\x00{source}\x00{mt}".encode("utf-8")).hexdigest()
        return int(digest[:12], 16) / 16**12


class HashStubEmotionPredictor:
    def __init__(self, model_name: str = "emotion-stub"):
        self.name = model_name

    def predict(self, text: str) -> str:
        digest = hashlib.sha256(f"{self.name}\x00{text}".encode("utf-8")).hexdigest()
        return EMOTION_LABELS[int(digest[:8], 16) % len(EMOTION_LABELS)]


class ConstantQEProvider:
    def __init__(self, value: float, model_name: str = "qe-constant"):
        self.value = value
        self.name = model_name

    def score(self, source: str, mt: str) -> float:
        return self.value

"""Completion, scoring, and embedding backends.

Two kinds are provided behind one informal protocol:

* ``StubBackend`` — a scripted, fully deterministic stand-in driven by a
  plain-text record file (``StubScript``). Rules are keyed by prompt
  fingerprints; anything without a rule falls back to a deterministic
  synthesis derived from SHA-256, so desk-scale runs never block on scripting
  every prompt.
* ``RemoteBackend`` — an HTTP client for a completions-style endpoint with
  echo+logprobs scoring and an optional embeddings endpoint.

All returned log-probabilities are finite and <= 0. Completions never contain
a configured stop sequence. Backends are shareable across threads; callers
should bound concurrency by ``max_in_flight``.
"""

from __future__ import annotations

import hashlib
import math
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import httpx

from .core import SamplingConfig
from .errors import (
    ConfigurationError,
    GenerationFailedError,
    InputError,
    ScoringError,
    TransportError,
)


def fingerprint(text: str) -> str:
    """First 16 hex chars of the SHA-256 of the text bytes."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def truncate_at_stop(text: str, stop_sequences: Sequence[str]) -> str:
    """Cut the text at the earliest occurrence of any stop sequence."""
    cut = len(text)
    for stop in stop_sequences:
        idx = text.find(stop)
        if idx != -1 and idx < cut:
            cut = idx
    return text[:cut]


@runtime_checkable
class Backend(Protocol):
    """What the pipeline needs from a backend."""

    id: str
    max_in_flight: int

    def complete(self, prompt: str, sampling: SamplingConfig, seed: int) -> str: ...

    def score_continuations(self, prompt: str, candidates: Sequence[str]) -> list[float]: ...

    def embed(self, text: str) -> tuple[float, ...]: ...


# ---------------------------------------------------------------------------
# Scripted stub
# ---------------------------------------------------------------------------

SCORE_MODES = ("constant", "hash")


@dataclass
class StubScript:
    """Deterministic rules for the stub backend.

    Keys are prompt fingerprints (see :func:`fingerprint`). ``default_score``
    is used for unscripted (prompt, candidate) pairs in ``constant`` mode;
    ``hash`` mode derives a stable pseudo-score from the pair instead, which
    gives varied but reproducible predictions on unscripted fixtures.
    """

    completion_rules: dict[tuple[str, int], str] = field(default_factory=dict)
    score_rules: dict[tuple[str, str], float] = field(default_factory=dict)
    embed_rules: dict[str, tuple[float, ...]] = field(default_factory=dict)
    default_score: float = -2.0
    score_mode: str = "constant"

    def __post_init__(self):
        if self.default_score > 0:
            raise ConfigurationError("default_score must be a log-probability (<= 0)")
        if self.score_mode not in SCORE_MODES:
            raise ConfigurationError(
                f"unknown score_mode {self.score_mode!r}; expected one of {SCORE_MODES}"
            )

    def add_completion(self, prompt: str, seed: int, text: str) -> None:
        _check_record_text(text)
        self.completion_rules[(fingerprint(prompt), int(seed))] = text

    def add_score(self, prompt: str, continuation: str, logprob: float) -> None:
        if logprob > 0 or not math.isfinite(logprob):
            raise ConfigurationError("scores must be finite log-probabilities (<= 0)")
        _check_record_text(continuation)
        self.score_rules[(fingerprint(prompt), continuation)] = float(logprob)

    def add_embedding(self, text: str, vector: Sequence[float]) -> None:
        vec = tuple(float(x) for x in vector)
        if not vec or all(x == 0.0 for x in vec):
            raise ConfigurationError("embedding rules must be non-zero vectors")
        self.embed_rules[fingerprint(text)] = vec

    def save(self, path: str | Path) -> None:
        lines = ["# sgicl stub script\n"]
        lines.append(f"option\tdefault_score\t{self.default_score!r}\n")
        lines.append(f"option\tscore_mode\t{self.score_mode}\n")
        for (fp, seed), text in sorted(self.completion_rules.items()):
            lines.append(f"complete\t{fp}\t{seed}\t{text}\n")
        for (fp, continuation), logprob in sorted(self.score_rules.items()):
            lines.append(f"score\t{fp}\t{continuation}\t{logprob!r}\n")
        for fp, vec in sorted(self.embed_rules.items()):
            joined = ",".join(repr(x) for x in vec)
            lines.append(f"embed\t{fp}\t{joined}\n")
        Path(path).write_text("".join(lines), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> StubScript:
        script = cls()
        for lineno, raw in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not raw.strip() or raw.lstrip().startswith("#"):
                continue
            kind, _, rest = raw.partition("\t")
            try:
                if kind == "option":
                    name, _, value = rest.partition("\t")
                    if name == "default_score":
                        script.default_score = float(value)
                    elif name == "score_mode":
                        script.score_mode = value
                    else:
                        raise ValueError(f"unknown option {name!r}")
                elif kind == "complete":
                    fp, seed, text = rest.split("\t", 2)
                    script.completion_rules[(fp, int(seed))] = text
                elif kind == "score":
                    fp, continuation, value = rest.split("\t", 2)
                    logprob = float(value)
                    if logprob > 0 or not math.isfinite(logprob):
                        raise ValueError("scores must be <= 0 and finite")
                    script.score_rules[(fp, continuation)] = logprob
                elif kind == "embed":
                    fp, _, joined = rest.partition("\t")
                    vec = tuple(float(x) for x in joined.split(","))
                    if not vec or all(x == 0.0 for x in vec):
                        raise ValueError("embedding must be a non-zero vector")
                    script.embed_rules[fp] = vec
                else:
                    raise ValueError(f"unknown record kind {kind!r}")
            except ValueError as exc:
                raise ConfigurationError(
                    f"{path}: line {lineno}: bad stub record ({exc})"
                ) from None
        # re-validate options that may have been set from the file
        if script.default_score > 0:
            raise ConfigurationError(f"{path}: default_score must be <= 0")
        if script.score_mode not in SCORE_MODES:
            raise ConfigurationError(f"{path}: unknown score_mode {script.score_mode!r}")
        return script


def _check_record_text(text: str) -> None:
    if "\t" in text or "\n" in text:
        raise ConfigurationError(
            "stub record text must not contain tab or newline characters"
        )


_SYNTH_WORDS = (
    "quite", "rather", "truly", "barely", "clearly", "oddly", "plainly",
    "vivid", "flat", "warm", "stale", "sharp", "gentle", "uneven", "steady",
    "story", "pacing", "tone", "craft", "detail", "rhythm", "texture",
    "work", "piece", "effort", "turn", "note", "touch", "moment", "scene",
)


def _synth_completion(fp: str, seed: int) -> str:
    digest = hashlib.sha256(f"complete:{fp}:{seed}".encode()).digest()
    n_words = 3 + digest[0] % 4
    words = [_SYNTH_WORDS[digest[1 + i] % len(_SYNTH_WORDS)] for i in range(n_words)]
    return " ".join(words) + " ."


def _synth_score(fp: str, candidate: str) -> float:
    digest = hashlib.sha256(f"score:{fp}:{candidate}".encode()).digest()
    value = int.from_bytes(digest[:8], "big")
    return -(value % 4_000_003) / 1_000_000.0 - 1e-6


def _synth_embedding(fp: str, dim: int) -> tuple[float, ...]:
    digest = hashlib.sha256(f"embed:{fp}".encode()).digest()
    while len(digest) < dim:
        digest += hashlib.sha256(digest).digest()
    return tuple(digest[i] / 255.0 - 0.5 for i in range(dim))


def _unit(vec: Sequence[float]) -> tuple[float, ...]:
    norm = math.sqrt(math.fsum(x * x for x in vec))
    if norm == 0.0:
        raise InputError("cannot normalize a zero embedding vector")
    if abs(norm - 1.0) <= 1e-12:
        return tuple(vec)
    return tuple(x / norm for x in vec)


class StubBackend:
    """Scripted deterministic backend for desk-scale verification.

    Call counters (``complete_calls`` etc.) let tests assert cache behavior.
    """

    kind = "stub"

    def __init__(
        self,
        script: StubScript,
        id: str = "stub",
        max_in_flight: int = 8,
        embed_dim: int = 8,
    ):
        self.script = script
        self.id = id
        self.max_in_flight = max_in_flight
        self.embed_dim = embed_dim
        self.complete_calls = 0
        self.score_calls = 0
        self.embed_calls = 0
        self._lock = threading.Lock()

    def complete(self, prompt: str, sampling: SamplingConfig, seed: int) -> str:
        if not prompt:
            raise InputError("prompt must be non-empty")
        with self._lock:
            self.complete_calls += 1
        text = self.script.completion_rules.get((fingerprint(prompt), seed))
        if text is None:
            text = _synth_completion(fingerprint(prompt), seed)
        return truncate_at_stop(text, sampling.stop_sequences)

    def score_continuations(self, prompt: str, candidates: Sequence[str]) -> list[float]:
        _check_scoring_args(prompt, candidates)
        with self._lock:
            self.score_calls += 1
        fp = fingerprint(prompt)
        scores = []
        for candidate in candidates:
            score = self.script.score_rules.get((fp, candidate))
            if score is None:
                if self.script.score_mode == "hash":
                    score = _synth_score(fp, candidate)
                else:
                    score = self.script.default_score
            scores.append(score)
        return scores

    def embed(self, text: str) -> tuple[float, ...]:
        if not text:
            raise InputError("text must be non-empty")
        with self._lock:
            self.embed_calls += 1
        vec = self.script.embed_rules.get(fingerprint(text))
        if vec is None:
            vec = _synth_embedding(fingerprint(text), self.embed_dim)
        return _unit(vec)


def _check_scoring_args(prompt: str, candidates: Sequence[str]) -> None:
    if not prompt:
        raise InputError("prompt must be non-empty")
    if not candidates:
        raise InputError("candidates must be non-empty")
    for candidate in candidates:
        if not candidate:
            raise InputError("candidates must all be non-empty")


# ---------------------------------------------------------------------------
# Remote completions-style backend
# ---------------------------------------------------------------------------


class RemoteBackend:
    """HTTP client for a completions endpoint with echo+logprobs scoring.

    Requests carry {prompt, max_tokens, temperature, stop, seed?} for
    generation and {prompt, max_tokens: 0, echo: true, logprobs: 1} for
    scoring; the response must expose per-token log-probabilities
    (tokens / token_logprobs / text_offset) in scoring mode. Transport
    failures are retried with exponential backoff; refusals are not.
    """

    kind = "remote-completion"

    def __init__(
        self,
        endpoint: str,
        *,
        model: str | None = None,
        id: str | None = None,
        auth_env: str | None = None,
        embed_endpoint: str | None = None,
        embed_model: str | None = None,
        timeout: float = 60.0,
        transport_retries: int = 3,
        backoff_base: float = 0.5,
        length_normalize: bool = False,
        max_in_flight: int = 8,
    ):
        self.endpoint = endpoint
        self.model = model
        self.id = id or f"{model or 'default'}@{endpoint}"
        self.embed_endpoint = embed_endpoint
        self.embed_model = embed_model
        self.transport_retries = transport_retries
        self.backoff_base = backoff_base
        self.length_normalize = length_normalize
        self.max_in_flight = max_in_flight
        headers = {}
        if auth_env:
            token = os.environ.get(auth_env)
            if token:
                headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(timeout=timeout, headers=headers)

    def close(self) -> None:
        self._client.close()

    def _post(self, url: str, payload: dict, retries: int) -> dict:
        last_error: Exception | None = None
        for attempt in range(retries + 1):
            if attempt:
                time.sleep(self.backoff_base * 2 ** (attempt - 1))
            try:
                response = self._client.post(url, json=payload)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = TransportError(
                    f"server error {response.status_code} from {url}"
                )
                continue
            if response.status_code >= 400:
                raise TransportError(
                    f"backend refused request ({response.status_code}): "
                    f"{response.text[:200]}",
                    retryable=False,
                )
            try:
                return response.json()
            except ValueError:
                raise TransportError(
                    f"non-JSON response from {url}", retryable=False
                ) from None
        raise TransportError(f"transport failed after {retries + 1} attempts: {last_error}")

    def complete(self, prompt: str, sampling: SamplingConfig, seed: int) -> str:
        if not prompt:
            raise InputError("prompt must be non-empty")
        payload = {
            "prompt": prompt,
            "max_tokens": sampling.max_new_tokens,
            "temperature": sampling.temperature,
            "stop": list(sampling.stop_sequences),
            "seed": seed,
        }
        if self.model:
            payload["model"] = self.model
        fp = fingerprint(prompt)
        try:
            data = self._post(self.endpoint, payload, retries=sampling.retry_limit)
            text = data["choices"][0]["text"]
        except TransportError as exc:
            raise GenerationFailedError(
                f"completion failed for prompt {fp}: {exc}", prompt_fingerprint=fp
            ) from exc
        except (KeyError, IndexError, TypeError) as exc:
            raise GenerationFailedError(
                f"malformed completion response for prompt {fp}: {exc}",
                prompt_fingerprint=fp,
            ) from exc
        return truncate_at_stop(text, sampling.stop_sequences)

    def score_continuations(self, prompt: str, candidates: Sequence[str]) -> list[float]:
        _check_scoring_args(prompt, candidates)
        return [self._score_one(prompt, candidate) for candidate in candidates]

    def _score_one(self, prompt: str, candidate: str) -> float:
        payload = {
            "prompt": prompt + candidate,
            "max_tokens": 0,
            "temperature": 0.0,
            "echo": True,
            "logprobs": 1,
        }
        if self.model:
            payload["model"] = self.model
        data = self._post(self.endpoint, payload, retries=self.transport_retries)
        try:
            logprobs = data["choices"][0]["logprobs"]
            tokens = logprobs["tokens"]
            token_logprobs = logprobs["token_logprobs"]
            offsets = logprobs["text_offset"]
        except (KeyError, IndexError, TypeError):
            raise ScoringError(
                f"backend response carries no usable logprobs for candidate "
                f"{candidate!r}",
                candidate=candidate,
            ) from None
        # A token overlapping the prompt/candidate boundary (e.g. a leading-
        # space merge) belongs to the candidate: include every token whose
        # span ends past the boundary.
        boundary = len(prompt)
        total, count = 0.0, 0
        for token, logprob, offset in zip(tokens, token_logprobs, offsets):
            if offset + len(token) > boundary:
                if logprob is None or not math.isfinite(logprob):
                    raise ScoringError(
                        f"missing token log-probability for candidate {candidate!r}",
                        candidate=candidate,
                    )
                total += logprob
                count += 1
        if count == 0:
            raise ScoringError(
                f"no continuation tokens found for candidate {candidate!r}",
                candidate=candidate,
            )
        score = total / count if self.length_normalize else total
        return min(score, 0.0)

    def embed(self, text: str) -> tuple[float, ...]:
        if not text:
            raise InputError("text must be non-empty")
        if not self.embed_endpoint:
            raise ConfigurationError(
                f"backend {self.id!r} has no embedding endpoint configured"
            )
        payload: dict = {"input": text}
        if self.embed_model:
            payload["model"] = self.embed_model
        data = self._post(self.embed_endpoint, payload, retries=self.transport_retries)
        try:
            vec = data["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError):
            raise TransportError("malformed embedding response", retryable=False) from None
        return _unit(tuple(float(x) for x in vec))


__all__ = [
    "Backend",
    "RemoteBackend",
    "StubBackend",
    "StubScript",
    "fingerprint",
    "truncate_at_stop",
]

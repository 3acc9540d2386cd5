"""Provider-agnostic LLM completion layer.

Greedy-decoding completion against provider HTTP APIs, strict parsing of
boolean-verdict responses, a persistent append-only response cache keyed by
prompt digest, and a deterministic mock provider for offline runs and
tests. Verdict objects map option letter labels to booleans, e.g.
{"A": true, "B": false}.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import httpx

from .dataset import TestInstance
from .prompts import PromptBundle, TEMPLATE_A, TEMPLATE_B


class GatewayError(Exception):
    """Base for completion/parsing failures."""


class TransportFailure(GatewayError):
    """Network-level failure that persisted through the retry budget."""


class AuthorizationError(GatewayError):
    """Credential problem; never retried."""


class ProviderResponseError(GatewayError):
    """Provider answered with a non-retryable content error."""


class VerdictParseError(GatewayError):
    """Response did not contain a usable verdict object."""


class NoVerdictObjectError(VerdictParseError):
    pass


class MissingLabelError(VerdictParseError):
    pass


class ExtraLabelError(VerdictParseError):
    pass


class NonBooleanVerdictError(VerdictParseError):
    pass


class UnscriptedPromptError(GatewayError):
    """Mock provider received a prompt it has no reply for."""


@dataclass(frozen=True)
class DecodingProfile:
    temperature: float = 0.0
    structured_output: bool = True

    def key(self) -> str:
        return f"t={self.temperature!r};json={int(self.structured_output)}"


@dataclass(frozen=True)
class ProviderSpec:
    """Wire-level description of one model endpoint."""

    name: str
    adapter: str = "mock"  # anthropic | google | openai | mock
    endpoint: str = ""
    auth_env: str = ""
    model: str = ""
    decoding: DecodingProfile = field(default_factory=DecodingProfile)
    max_retries: int = 3
    backoff_seconds: float = 0.5


@dataclass(frozen=True)
class ModelVerdict:
    verdicts: dict[str, bool]
    model: str
    raw: str

    def true_labels(self) -> list[str]:
        return [label for label, v in self.verdicts.items() if v]


# ---------------------------------------------------------------------------
# Verdict parsing

def _balanced_object_end(raw: str, start: int) -> int | None:
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(raw)):
        ch = raw[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i
    return None


def _first_json_object(raw: str) -> dict | None:
    pos = raw.find("{")
    while pos != -1:
        end = _balanced_object_end(raw, pos)
        if end is not None:
            try:
                obj = json.loads(raw[pos:end + 1])
            except json.JSONDecodeError:
                obj = None
            if isinstance(obj, dict):
                return obj
        pos = raw.find("{", pos + 1)
    return None


def parse_verdicts(raw: str, labels: tuple[str, ...] | list[str],
                   model: str = "") -> ModelVerdict:
    """Extract the first well-formed JSON object from a response and
    validate it as a complete boolean verdict over the given labels.

    Lenient on surrounding prose (models occasionally wrap the object),
    strict on the object itself: exact label set, booleans only.
    """
    obj = _first_json_object(raw)
    if obj is None:
        raise NoVerdictObjectError(
            f"no JSON object found in response: {raw[:120]!r}"
        )
    expected = list(labels)
    missing = [lab for lab in expected if lab not in obj]
    if missing:
        raise MissingLabelError(f"verdict object lacks label(s): {', '.join(missing)}")
    extra = [key for key in obj if key not in expected]
    if extra:
        raise ExtraLabelError(f"verdict object has unknown label(s): {', '.join(extra)}")
    for lab in expected:
        if not isinstance(obj[lab], bool):
            raise NonBooleanVerdictError(
                f"label {lab!r} has non-boolean value {obj[lab]!r}"
            )
    return ModelVerdict(
        verdicts={lab: obj[lab] for lab in expected}, model=model, raw=raw,
    )


# ---------------------------------------------------------------------------
# Response cache

_RECORD_HEADER = struct.Struct(">I")


class ResponseCache:
    """Append-only length-prefixed record file, indexed in memory.

    Record payload: JSON {digest, provider, raw, ts}. Cache hits return the
    stored raw body byte-for-byte, which makes whole runs reproducible once
    primed. Appends are serialized with a lock (append-then-index).
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._index: dict[str, str] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, "rb") as f:
            while True:
                header = f.read(_RECORD_HEADER.size)
                if len(header) < _RECORD_HEADER.size:
                    break
                (length,) = _RECORD_HEADER.unpack(header)
                payload = f.read(length)
                if len(payload) < length:
                    break  # truncated trailing record from a killed run
                rec = json.loads(payload.decode("utf-8"))
                self._index[rec["digest"]] = rec["raw"]

    @staticmethod
    def digest(provider_name: str, prompt_text: str,
               decoding: DecodingProfile) -> str:
        h = hashlib.sha256()
        h.update(provider_name.encode("utf-8"))
        h.update(b"\x00")
        h.update(decoding.key().encode("utf-8"))
        h.update(b"\x00")
        h.update(prompt_text.encode("utf-8"))
        return h.hexdigest()

    def get(self, digest: str) -> str | None:
        with self._lock:
            return self._index.get(digest)

    def put(self, digest: str, provider_name: str, raw: str) -> None:
        payload = json.dumps(
            {"digest": digest, "provider": provider_name, "raw": raw,
             "ts": time.time()},
            ensure_ascii=False,
        ).encode("utf-8")
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "ab") as f:
                f.write(_RECORD_HEADER.pack(len(payload)))
                f.write(payload)
            self._index[digest] = raw

    def __len__(self) -> int:
        with self._lock:
            return len(self._index)


# ---------------------------------------------------------------------------
# Providers

class HttpProvider:
    """Live endpoint adapter with bounded retries and exponential backoff.

    Transient transport errors and 429/5xx responses are retried; auth
    failures and other client errors are raised immediately.
    """

    _RETRYABLE_STATUS = {429, 500, 502, 503, 504, 529}

    def __init__(self, spec: ProviderSpec):
        if spec.adapter not in ("anthropic", "google", "openai"):
            raise ValueError(f"unknown live adapter {spec.adapter!r}")
        self.spec = spec
        self.name = spec.name
        self.decoding = spec.decoding

    def _api_key(self) -> str:
        key = os.environ.get(self.spec.auth_env, "")
        if not key:
            raise AuthorizationError(
                f"environment variable {self.spec.auth_env or '<unset>'} "
                f"holds no credential for provider {self.name}"
            )
        return key

    def _request(self, prompt_text: str) -> tuple[str, dict, dict]:
        spec = self.spec
        model = spec.model or spec.name
        temperature = spec.decoding.temperature
        if spec.adapter == "anthropic":
            url = spec.endpoint.rstrip("/") + "/v1/messages"
            headers = {
                "x-api-key": self._api_key(),
                "anthropic-version": "2023-06-01",
            }
            body = {
                "model": model,
                "max_tokens": 1024,
                "temperature": temperature,
                "messages": [{"role": "user", "content": prompt_text}],
            }
        elif spec.adapter == "google":
            url = (
                spec.endpoint.rstrip("/")
                + f"/v1beta/models/{model}:generateContent"
            )
            headers = {"x-goog-api-key": self._api_key()}
            body = {
                "contents": [{"parts": [{"text": prompt_text}]}],
                "generationConfig": {"temperature": temperature},
            }
        else:  # openai-compatible
            url = spec.endpoint.rstrip("/") + "/v1/chat/completions"
            headers = {"Authorization": f"Bearer {self._api_key()}"}
            body = {
                "model": model,
                "temperature": temperature,
                "messages": [{"role": "user", "content": prompt_text}],
            }
        return url, headers, body

    def _extract_text(self, data: dict) -> str:
        try:
            if self.spec.adapter == "anthropic":
                return data["content"][0]["text"]
            if self.spec.adapter == "google":
                return data["candidates"][0]["content"]["parts"][0]["text"]
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise ProviderResponseError(
                f"{self.name}: unexpected response shape ({e})"
            ) from e

    def complete(self, bundle: PromptBundle) -> str:
        url, headers, body = self._request(bundle.text)
        last_error: Exception | None = None
        for attempt in range(self.spec.max_retries + 1):
            if attempt:
                time.sleep(self.spec.backoff_seconds * 2 ** (attempt - 1))
            try:
                response = httpx.post(
                    url, headers=headers, json=body, timeout=120.0
                )
            except httpx.TransportError as e:
                last_error = e
                continue
            if response.status_code in (401, 403):
                raise AuthorizationError(
                    f"{self.name}: authorization rejected "
                    f"(HTTP {response.status_code})"
                )
            if response.status_code in self._RETRYABLE_STATUS:
                last_error = ProviderResponseError(
                    f"{self.name}: HTTP {response.status_code}"
                )
                continue
            if response.status_code >= 400:
                raise ProviderResponseError(
                    f"{self.name}: HTTP {response.status_code}: "
                    f"{response.text[:200]}"
                )
            return self._extract_text(response.json())
        raise TransportFailure(
            f"{self.name}: gave up after {self.spec.max_retries + 1} "
            f"attempts ({last_error})"
        )


class MockProvider:
    """Deterministic stand-in provider.

    Replies come from a script (prompt digest or exact prompt text ->
    reply) and/or a responder callable over the prompt bundle. Unmatched
    prompts raise UnscriptedPromptError. Tracks call_count so tests can
    assert cache hits and lazy tie-breaking.
    """

    def __init__(
        self,
        name: str = "mock",
        script: dict[str, str] | None = None,
        responder: Callable[[PromptBundle], str] | None = None,
        decoding: DecodingProfile | None = None,
    ):
        self.name = name
        self.decoding = decoding or DecodingProfile()
        self.script = dict(script or {})
        self.responder = responder
        self.call_count = 0

    def complete(self, bundle: PromptBundle) -> str:
        self.call_count += 1
        digest = ResponseCache.digest(self.name, bundle.text, self.decoding)
        if digest in self.script:
            return self.script[digest]
        if bundle.text in self.script:
            return self.script[bundle.text]
        if self.responder is not None:
            return self.responder(bundle)
        raise UnscriptedPromptError(
            f"mock provider {self.name!r} has no reply for instance "
            f"{bundle.instance_id!r}"
        )


def verdict_reply(labels: tuple[str, ...] | list[str],
                  true_indices: set[int] | frozenset[int]) -> str:
    """Serialize a verdict object marking the given option indices true."""
    return json.dumps({lab: (i in true_indices) for i, lab in enumerate(labels)})


def echo_gold_responder(
    gold: dict[str, frozenset[int] | set[int]],
) -> Callable[[PromptBundle], str]:
    """Reply with the fixture gold for the prompted instance."""
    def respond(bundle: PromptBundle) -> str:
        if bundle.instance_id not in gold:
            raise UnscriptedPromptError(
                f"no gold scripted for instance {bundle.instance_id!r}"
            )
        return verdict_reply(bundle.labels, set(gold[bundle.instance_id]))
    return respond


def verbatim_context_responder(
    instances: list[TestInstance],
) -> Callable[[PromptBundle], str]:
    """Mark true every option that appears verbatim in the instance context."""
    contexts = {inst.id: inst.context for inst in instances}
    def respond(bundle: PromptBundle) -> str:
        if bundle.instance_id not in contexts:
            raise UnscriptedPromptError(
                f"unknown instance {bundle.instance_id!r}"
            )
        ctx = contexts[bundle.instance_id]
        hits = {i for i, opt in enumerate(bundle.options) if opt in ctx}
        return verdict_reply(bundle.labels, hits)
    return respond


KIND_SEEN = "seen"
KIND_PLAIN = "plain"
KIND_AMBIGUOUS = "ambiguous"


def template_aware_responder(
    gold: dict[str, frozenset[int] | set[int]],
    kinds: dict[str, str],
) -> Callable[[PromptBundle], str]:
    """Answer correctly only when the rendered template suits the instance.

    kinds maps instance id to seen/plain/ambiguous: seen instances need the
    standard template with demonstrations, plain ones the zero-shot
    standard template, ambiguous ones the strict template. Mismatches get
    a deliberately wrong set, so static-template pipelines provably lose
    to dynamic routing on mixed fixtures.
    """
    def respond(bundle: PromptBundle) -> str:
        if bundle.instance_id not in gold or bundle.instance_id not in kinds:
            raise UnscriptedPromptError(
                f"no gold/kind scripted for instance {bundle.instance_id!r}"
            )
        truth = set(gold[bundle.instance_id])
        kind = kinds[bundle.instance_id]
        decision = bundle.decision
        suited = (
            (kind == KIND_SEEN
             and decision.template == TEMPLATE_A and decision.fewshot)
            or (kind == KIND_PLAIN
                and decision.template == TEMPLATE_A and not decision.fewshot)
            or (kind == KIND_AMBIGUOUS and decision.template == TEMPLATE_B)
        )
        answer = truth if suited else truth ^ {0}
        return verdict_reply(bundle.labels, answer)
    return respond


def always_empty_responder() -> Callable[[PromptBundle], str]:
    """Predict "no option fits" for everything (adversarial ensemble filler)."""
    def respond(bundle: PromptBundle) -> str:
        return verdict_reply(bundle.labels, set())
    return respond


def mock_provider(
    script: dict[str, str] | None = None,
    responder: Callable[[PromptBundle], str] | None = None,
    name: str = "mock",
) -> MockProvider:
    return MockProvider(name=name, script=script, responder=responder)


def build_provider(spec: ProviderSpec):
    if spec.adapter == "mock":
        raise ValueError(
            "mock providers carry scripted state; construct MockProvider "
            "directly (or run the pipeline with a mock responder)"
        )
    return HttpProvider(spec)


def complete(provider, bundle: PromptBundle) -> str:
    """Raw completion text for a prompt from a provider or spec."""
    if isinstance(provider, ProviderSpec):
        provider = build_provider(provider)
    return provider.complete(bundle)


def cached_complete(cache: ResponseCache, provider, bundle: PromptBundle) -> ModelVerdict:
    """Cache-aware completion returning a parsed verdict.

    The raw response is stored before parsing, so a malformed reply is
    reproduced (and re-raises) on every rerun instead of being silently
    retried against the provider.
    """
    if isinstance(provider, ProviderSpec):
        provider = build_provider(provider)
    digest = ResponseCache.digest(provider.name, bundle.text, provider.decoding)
    raw = cache.get(digest)
    if raw is None:
        raw = provider.complete(bundle)
        cache.put(digest, provider.name, raw)
    return parse_verdicts(raw, bundle.labels, model=provider.name)

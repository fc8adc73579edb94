"""Provider-agnostic completion gateway.

Three backends sit behind :func:`Gateway.complete`: an OpenAI-compatible HTTP
chat endpoint, a scripted provider driven by a scenario file, and a replay
store of content-addressed cassettes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import httpx

logger = logging.getLogger(__name__)

PROVIDER_KINDS = ("http_chat", "scripted", "replay")
REPLAY_POLICIES = ("live", "record", "replay_only")
RETRY_ATTEMPTS = 3
RETRY_BACKOFF = (1.0, 2.0, 4.0)
DEFAULT_MAX_IN_FLIGHT = 4


class GatewayError(RuntimeError):
    """Base class for provider failures; ``role`` is filled in by callers that know it."""

    role: str | None = None


class AuthenticationError(GatewayError):
    pass


class RateLimitExhausted(GatewayError):
    pass


class ProviderTimeout(GatewayError):
    pass


class ProviderHTTPError(GatewayError):
    pass


class ReplayMiss(GatewayError):
    pass


class ScenarioError(ValueError):
    pass


class RatingParseError(ValueError):
    def __init__(self, message: str, raw_text: str):
        super().__init__(message)
        self.raw_text = raw_text


@dataclass(frozen=True)
class ModelSpec:
    name: str
    provider_kind: str = "scripted"
    model_name: str | None = None  # identifier sent to the provider; defaults to ``name``
    endpoint: str | None = None
    credential_ref: str | None = None
    temperature: float = 0.0
    max_output_tokens: int = 512
    scenario: Any = None  # path, list of rules, or callable(request) -> str
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT
    timeout: float = 60.0

    def __post_init__(self):
        if self.provider_kind not in PROVIDER_KINDS:
            raise ValueError(f"unknown provider kind {self.provider_kind!r}")
        if self.provider_kind == "http_chat" and not (self.endpoint and self.credential_ref):
            raise ValueError(f"model {self.name!r}: http_chat requires endpoint and credential_ref")
        if self.provider_kind == "scripted" and self.scenario is None:
            raise ValueError(f"model {self.name!r}: scripted provider requires a scenario")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")

    @property
    def remote_name(self) -> str:
        return self.model_name or self.name

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> ModelSpec:
        data = dict(data)
        kind = data.pop("provider", data.pop("provider_kind", "scripted"))
        decoding = data.pop("decoding", {}) or {}
        scenario = data.pop("scenario", None)
        if isinstance(scenario, str) and base_dir is not None and not Path(scenario).is_absolute():
            scenario = str(base_dir / scenario)
        known = {"name", "model_name", "endpoint", "credential_ref", "temperature", "max_output_tokens",
                 "max_in_flight", "timeout"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown model fields: {sorted(unknown)}")
        data.setdefault("temperature", decoding.get("temperature", 0.0))
        data.setdefault("max_output_tokens", decoding.get("max_output_tokens", 512))
        return cls(provider_kind=kind, scenario=scenario, **data)

    def to_dict(self) -> dict:
        """Configuration view; credentials are referenced by variable name only."""
        return {
            "name": self.name,
            "provider": self.provider_kind,
            "model_name": self.remote_name,
            "endpoint": self.endpoint,
            "credential_ref": self.credential_ref,
            "decoding": {"temperature": self.temperature, "max_output_tokens": self.max_output_tokens},
            "scenario": self.scenario if isinstance(self.scenario, (str, list)) else None,
        }


@dataclass(frozen=True)
class CompletionRequest:
    question: str
    context: str | None = None
    temperature: float | None = None
    max_output_tokens: int | None = None
    # Routing hints for scripted providers and logs (edge label, prompt index, role).
    # Not part of the request digest.
    tags: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not self.question:
            raise ValueError("question must be non-empty")

    def with_context(self, context: str | None) -> CompletionRequest:
        return replace(self, context=context)


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    latency: float
    source: str  # live | scripted | replayed
    digest: str = ""


def decoding_for(model: ModelSpec, request: CompletionRequest) -> dict:
    return {
        "temperature": model.temperature if request.temperature is None else request.temperature,
        "max_output_tokens": model.max_output_tokens if request.max_output_tokens is None else request.max_output_tokens,
    }


def request_digest(model: ModelSpec, request: CompletionRequest) -> str:
    payload = {
        "model_name": model.remote_name,
        "context": request.context,
        "question": request.question,
        "decoding": decoding_for(model, request),
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --- replay store ---------------------------------------------------------

class ReplayStore:
    """Directory of ``<digest>.json`` cassettes. Reads are lock-free; appends are serialized."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()

    def path_for(self, digest: str) -> Path:
        return self.root / f"{digest}.json"

    def get(self, digest: str) -> dict | None:
        p = self.path_for(digest)
        try:
            return json.loads(p.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None

    def put(self, digest: str, model: ModelSpec, request: CompletionRequest, text: str) -> None:
        record = {
            "digest": digest,
            "request": {
                "model_name": model.remote_name,
                "context": request.context,
                "question": request.question,
                "decoding": decoding_for(model, request),
            },
            "response": text,
            "recorded_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        with self._lock:
            self.root.mkdir(parents=True, exist_ok=True)
            tmp = self.root / f".{digest}.tmp"
            tmp.write_text(json.dumps(record, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
            os.replace(tmp, self.path_for(digest))

    def digest(self) -> str:
        """Content hash over all cassettes, for report provenance."""
        h = hashlib.sha256()
        if self.root.is_dir():
            for p in sorted(self.root.glob("*.json")):
                h.update(p.name.encode())
                h.update(p.read_bytes())
        return h.hexdigest()

    def __len__(self) -> int:
        return len(list(self.root.glob("*.json"))) if self.root.is_dir() else 0


# --- scripted provider ----------------------------------------------------

_MATCH_KEYS = {"edge", "prompt_index", "role", "responder", "context_contains", "question_contains", "has_context"}


def load_scenario(source) -> list[dict]:
    if isinstance(source, (str, Path)):
        rules = json.loads(Path(source).read_text(encoding="utf-8"))
    else:
        rules = list(source)
    if not isinstance(rules, list):
        raise ScenarioError("scenario must be a JSON list of rules")
    for i, rule in enumerate(rules):
        if not isinstance(rule, dict) or "response" not in rule or "match" not in rule:
            raise ScenarioError(f"rule {i} needs 'match' and 'response'")
        if rule["match"] != "default":
            if not isinstance(rule["match"], dict):
                raise ScenarioError(f"rule {i}: match must be an object or \"default\"")
            bad = set(rule["match"]) - _MATCH_KEYS
            if bad:
                raise ScenarioError(f"rule {i}: unknown match keys {sorted(bad)}")
    if not any(r["match"] == "default" for r in rules):
        raise ScenarioError('scenario requires a rule with "match": "default"')
    return rules


def _rule_matches(match: dict, request: CompletionRequest) -> bool:
    tags = request.tags
    for key, want in match.items():
        if key == "context_contains":
            if want not in (request.context or ""):
                return False
        elif key == "question_contains":
            if want not in request.question:
                return False
        elif key == "has_context":
            if bool(request.context) != bool(want):
                return False
        else:
            got = tags.get(key)
            if isinstance(want, list):
                if got not in want:
                    return False
            elif got != want:
                return False
    return True


class ScriptedProvider:
    """Deterministic responder: first matching rule wins, ``default`` last."""

    def __init__(self, scenario):
        if callable(scenario):
            self._fn = scenario
            self.rules = None
        else:
            self._fn = None
            self.rules = load_scenario(scenario)

    def respond(self, request: CompletionRequest) -> str:
        if self._fn is not None:
            return self._fn(request)
        default = None
        for rule in self.rules:
            if rule["match"] == "default":
                default = default if default is not None else rule["response"]
                continue
            if _rule_matches(rule["match"], request):
                return rule["response"]
        return default


# --- live HTTP provider ---------------------------------------------------

def _chat_messages(request: CompletionRequest) -> list[dict]:
    messages = []
    if request.context:
        messages.append({"role": "system", "content": request.context})
    messages.append({"role": "user", "content": request.question})
    return messages


def http_chat_complete(model: ModelSpec, request: CompletionRequest, client: httpx.Client) -> str:
    """One POST to an OpenAI-compatible chat-completions endpoint (no retries)."""
    token = os.environ.get(model.credential_ref or "")
    if not token:
        raise AuthenticationError(f"credential variable {model.credential_ref!r} is not set")
    dec = decoding_for(model, request)
    body = {
        "model": model.remote_name,
        "messages": _chat_messages(request),
        "temperature": dec["temperature"],
        "max_tokens": dec["max_output_tokens"],
    }
    try:
        resp = client.post(model.endpoint, json=body, headers={"Authorization": f"Bearer {token}"},
                           timeout=model.timeout)
    except httpx.TimeoutException as exc:
        raise ProviderTimeout(f"{model.name}: request timed out") from exc
    except httpx.TransportError as exc:
        raise ProviderTimeout(f"{model.name}: transport error: {exc}") from exc
    if resp.status_code in (401, 403):
        raise AuthenticationError(f"{model.name}: HTTP {resp.status_code}")
    if resp.status_code == 429:
        raise RateLimitExhausted(f"{model.name}: rate limited")
    if resp.status_code >= 400:
        raise ProviderHTTPError(f"{model.name}: HTTP {resp.status_code}: {resp.text[:200]}")
    try:
        return resp.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ProviderHTTPError(f"{model.name}: malformed chat response") from exc


_TRANSIENT = (RateLimitExhausted, ProviderTimeout)


def _is_transient(exc: Exception) -> bool:
    if isinstance(exc, _TRANSIENT):
        return True
    return isinstance(exc, ProviderHTTPError) and " HTTP 5" in str(exc)


class Gateway:
    """Routes requests to providers under a replay policy.

    * ``live``: always call the provider, never touch the store.
    * ``record``: serve cassettes when present, otherwise call and record.
    * ``replay_only``: serve cassettes; a missing cassette is a :class:`ReplayMiss`.
    """

    def __init__(self, store: ReplayStore | None = None, policy: str = "live", *,
                 sleep: Callable[[float], None] = time.sleep, client: httpx.Client | None = None,
                 backoff: tuple[float, ...] = RETRY_BACKOFF, attempts: int = RETRY_ATTEMPTS):
        if policy not in REPLAY_POLICIES:
            raise ValueError(f"unknown replay policy {policy!r}")
        if policy != "live" and store is None:
            raise ValueError(f"policy {policy!r} needs a replay store")
        self.store = store
        self.policy = policy
        self.sleep = sleep
        self.backoff = backoff
        self.attempts = attempts
        self._client = client
        self._scripted: dict[str, ScriptedProvider] = {}
        self._limits: dict[str, threading.BoundedSemaphore] = {}
        self._lock = threading.Lock()
        self.network_calls = 0

    def _client_for(self) -> httpx.Client:
        with self._lock:
            if self._client is None:
                self._client = httpx.Client()
            return self._client

    def _scripted_for(self, model: ModelSpec) -> ScriptedProvider:
        with self._lock:
            if model.name not in self._scripted:
                self._scripted[model.name] = ScriptedProvider(model.scenario)
            return self._scripted[model.name]

    def _limit_for(self, model: ModelSpec) -> threading.BoundedSemaphore:
        key = model.endpoint or model.name
        with self._lock:
            if key not in self._limits:
                self._limits[key] = threading.BoundedSemaphore(model.max_in_flight)
            return self._limits[key]

    def complete(self, model: ModelSpec, request: CompletionRequest) -> CompletionResponse:
        digest = request_digest(model, request)
        start = time.perf_counter()
        if self.policy != "live" or model.provider_kind == "replay":
            record = self.store.get(digest) if self.store is not None else None
            if record is not None:
                return CompletionResponse(record["response"], time.perf_counter() - start, "replayed", digest)
            if self.policy == "replay_only" or model.provider_kind == "replay":
                raise ReplayMiss(f"{model.name}: no cassette for request {digest[:12]}")

        if model.provider_kind == "scripted":
            text = self._scripted_for(model).respond(request)
            source = "scripted"
        else:
            text = self._live(model, request)
            source = "live"
        if self.policy == "record":
            self.store.put(digest, model, request, text)
        return CompletionResponse(text, time.perf_counter() - start, source, digest)

    def _live(self, model: ModelSpec, request: CompletionRequest) -> str:
        client = self._client_for()
        last: Exception | None = None
        for attempt in range(self.attempts):
            try:
                with self._limit_for(model):
                    with self._lock:
                        self.network_calls += 1
                    return http_chat_complete(model, request, client)
            except GatewayError as exc:
                if not _is_transient(exc):
                    raise
                last = exc
                if attempt + 1 < self.attempts:
                    delay = self.backoff[min(attempt, len(self.backoff) - 1)]
                    logger.warning("%s: %s; retrying in %.0fs", model.name, exc, delay)
                    self.sleep(delay)
        if isinstance(last, RateLimitExhausted):
            raise RateLimitExhausted(f"{model.name}: rate limited after {self.attempts} attempts") from last
        raise last

    def close(self) -> None:
        if self._client is not None:
            self._client.close()


# --- rating extraction ----------------------------------------------------

_INT = r"(?<![\w.])(\d+)(?!\w|\.\d)"
_KEYWORD_RE = re.compile(r"\brat(?:e|ing)\b\s*(?:[:=\-]|is|of)?\s*(?:\*\*)?\s*" + _INT, re.IGNORECASE)
_FRACTION_RE = re.compile(r"(?<![\w.])(\d+)\s*/\s*4(?![\w.]\d)")
_STANDALONE_RE = re.compile(_INT)


def extract_rating(response_text: str) -> int:
    """First in-range integer, preferring one right after "rate"/"rating" or written as ``n/4``."""
    text = response_text or ""
    preferred = []
    for m in _KEYWORD_RE.finditer(text):
        preferred.append((m.start(1), int(m.group(1))))
    for m in _FRACTION_RE.finditer(text):
        preferred.append((m.start(1), int(m.group(1))))
    for _, value in sorted(preferred):
        if 1 <= value <= 4:
            return value
    candidates = [int(m.group(1)) for m in _STANDALONE_RE.finditer(text)]
    for value in candidates:
        if 1 <= value <= 4:
            return value
    if candidates:
        raise RatingParseError(f"no rating in [1, 4]; first integer was {candidates[0]}", text)
    raise RatingParseError("no rating found in response", text)

"""Provider-agnostic chat-completion client with live, record, and replay
modes; the sole source of model text, token usage, and latency.

The record store is line-delimited JSON ({hash, request, response}); the
request hash covers model_id, system prompt, messages, and temperature, so
ablation runs never collide. Replay raises on any unseen request rather
than silently falling back to the live provider.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Union


class ReplayMiss(LookupError):
    def __init__(self, request_hash: str):
        super().__init__(f"no recorded response for request {request_hash}")
        self.request_hash = request_hash


class RateLimited(RuntimeError):
    pass


class ProviderError(RuntimeError):
    def __init__(self, status: int, body: str):
        super().__init__(f"provider returned {status}: {body[:200]}")
        self.status = status
        self.body = body


@dataclass(frozen=True)
class ChatMessage:
    role: str  # user | assistant | tool
    content: str

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    system_prompt: str = ""
    messages: tuple = ()
    temperature: float = 0.0
    max_output_tokens: int = 4096

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be nonempty")

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "system_prompt": self.system_prompt,
            "messages": [m.to_dict() for m in self.messages],
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChatRequest":
        return cls(
            model_id=d["model_id"],
            system_prompt=d.get("system_prompt", ""),
            messages=tuple(ChatMessage(m["role"], m["content"]) for m in d["messages"]),
            temperature=d.get("temperature", 0.0),
            max_output_tokens=d.get("max_output_tokens", 4096),
        )


@dataclass(frozen=True)
class ChatResponse:
    text: str
    prompt_tokens: int
    completion_tokens: int
    latency_ms: int

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "latency_ms": self.latency_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChatResponse":
        return cls(
            text=d["text"],
            prompt_tokens=int(d["prompt_tokens"]),
            completion_tokens=int(d["completion_tokens"]),
            latency_ms=int(d["latency_ms"]),
        )


def request_hash(request: ChatRequest) -> str:
    """Stable digest over the semantically relevant request fields."""
    payload = {
        "model_id": request.model_id,
        "system_prompt": request.system_prompt,
        "messages": [m.to_dict() for m in request.messages],
        "temperature": request.temperature,
    }
    canonical = json.dumps(payload, ensure_ascii=False, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def accumulate_cost(responses: Iterable[ChatResponse]) -> dict:
    total_tokens = 0
    total_latency = 0
    for response in responses:
        total_tokens += response.prompt_tokens + response.completion_tokens
        total_latency += response.latency_ms
    return {"total_tokens": total_tokens, "total_latency_ms": total_latency}


class ReplayStore:
    """Append-only hash -> response store over line-delimited JSON.

    Appends are serialized and written as whole lines, so concurrent
    recording from worker threads is safe.
    """

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: Optional[dict] = None

    def _load(self) -> dict:
        if self._entries is None:
            entries: dict = {}
            if self.path.exists():
                with self.path.open(encoding="utf-8") as handle:
                    for line in handle:
                        if not line.strip():
                            continue
                        record = json.loads(line)
                        entries[record["hash"]] = record
            self._entries = entries
        return self._entries

    def get(self, digest: str) -> Optional[ChatResponse]:
        record = self._load().get(digest)
        if record is None:
            return None
        return ChatResponse.from_dict(record["response"])

    def __contains__(self, digest: str) -> bool:
        return digest in self._load()

    def put(self, request: ChatRequest, response: ChatResponse) -> str:
        digest = request_hash(request)
        record = {
            "hash": digest,
            "request": request.to_dict(),
            "response": response.to_dict(),
        }
        with self._lock:
            entries = self._load()
            if digest not in entries:
                entries[digest] = record
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as handle:
                    handle.write(json.dumps(record, ensure_ascii=False) + "\n")
        return digest


@dataclass(frozen=True)
class Live:
    pass


@dataclass(frozen=True)
class Record:
    store_path: Union[str, Path]
    dedup: bool = True


@dataclass(frozen=True)
class Replay:
    store_path: Union[str, Path]


SessionMode = Union[Live, Record, Replay]

Transport = Callable[[ChatRequest], ChatResponse]

RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY_S = 2.0


@dataclass
class ProviderConfig:
    name: str = "openai"
    base_url: str = "https://api.openai.com/v1"
    # Minimum spacing between requests; serializes bursts.
    min_interval_s: float = 0.0

    @property
    def api_key_env(self) -> str:
        return f"STEERBENCH_API_KEY_{self.name.upper()}"


class HttpTransport:
    """OpenAI-style chat completions over HTTP with bounded rate-limit retry."""

    def __init__(self, provider: ProviderConfig):
        self.provider = provider
        self._lock = threading.Lock()
        self._last_request = 0.0

    def _throttle(self):
        if self.provider.min_interval_s <= 0:
            return
        with self._lock:
            wait = self.provider.min_interval_s - (time.monotonic() - self._last_request)
            if wait > 0:
                time.sleep(wait)
            self._last_request = time.monotonic()

    def __call__(self, request: ChatRequest) -> ChatResponse:
        import requests

        key = os.environ.get(self.provider.api_key_env)
        if not key:
            raise ProviderError(0, f"missing credentials ({self.provider.api_key_env})")
        messages = []
        if request.system_prompt:
            messages.append({"role": "system", "content": request.system_prompt})
        messages.extend(m.to_dict() for m in request.messages)
        body = {
            "model": request.model_id,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        delay = RETRY_BASE_DELAY_S
        for attempt in range(RETRY_ATTEMPTS):
            self._throttle()
            start = time.monotonic()
            reply = requests.post(
                f"{self.provider.base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {key}"},
                timeout=120,
            )
            if reply.status_code == 429:
                if attempt == RETRY_ATTEMPTS - 1:
                    raise RateLimited(f"rate limited after {RETRY_ATTEMPTS} attempts")
                time.sleep(delay)
                delay *= 2
                continue
            if reply.status_code != 200:
                raise ProviderError(reply.status_code, reply.text)
            latency_ms = int((time.monotonic() - start) * 1000)
            data = reply.json()
            usage = data.get("usage", {})
            return ChatResponse(
                text=data["choices"][0]["message"]["content"],
                prompt_tokens=int(usage.get("prompt_tokens", 0)),
                completion_tokens=int(usage.get("completion_tokens", 0)),
                latency_ms=latency_ms,
            )
        raise RateLimited("retry budget exhausted")


class Gateway:
    """Chat-completion entry point. ``transport`` defaults to the HTTP
    provider; tests and offline demos inject a callable instead."""

    def __init__(
        self,
        mode: SessionMode,
        provider: Optional[ProviderConfig] = None,
        transport: Optional[Transport] = None,
    ):
        self.mode = mode
        self.provider = provider or ProviderConfig()
        self._transport = transport
        self._store: Optional[ReplayStore] = None
        if isinstance(mode, (Record, Replay)):
            self._store = ReplayStore(mode.store_path)

    @property
    def transport(self) -> Transport:
        if self._transport is None:
            self._transport = HttpTransport(self.provider)
        return self._transport

    def complete(self, request: ChatRequest) -> ChatResponse:
        mode = self.mode
        if isinstance(mode, Replay):
            digest = request_hash(request)
            response = self._store.get(digest)
            if response is None:
                raise ReplayMiss(digest)
            return response
        if isinstance(mode, Record):
            digest = request_hash(request)
            if mode.dedup:
                cached = self._store.get(digest)
                if cached is not None:
                    return cached
            response = self.transport(request)
            self._store.put(request, response)
            return response
        return self.transport(request)


def complete(
    request: ChatRequest,
    mode: SessionMode,
    *,
    provider: Optional[ProviderConfig] = None,
    transport: Optional[Transport] = None,
) -> ChatResponse:
    """One-shot convenience wrapper around Gateway.complete."""
    return Gateway(mode, provider=provider, transport=transport).complete(request)

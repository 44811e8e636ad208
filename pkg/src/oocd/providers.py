"""Chat-completion providers: the live HTTP client plus offline stand-ins.

All providers expose ``model_id``, ``temperature`` and ``complete(prompt)``.
The live client sends one user message per request and is rate-limited
client-side; the stubs are deterministic functions of (prompt, seed) so the
whole extraction stage can run offline and reproducibly.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass

from .errors import ConfigError, ProviderUnreachable, RateLimited
from .prompting import format_vector

DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
API_KEY_ENV = "OOCD_API_KEY"

# A pinned model id carries a snapshot suffix (e.g. -0301); bare aliases
# auto-update and would silently change the extractor under replication.
_PINNED_SUFFIX = re.compile(r"-\d{4}(\d{4})?$")


@dataclass(frozen=True)
class ProviderConfig:
    endpoint_url: str = DEFAULT_ENDPOINT
    model_id: str = "gpt-3.5-turbo-0301"
    temperature: float = 0.0
    max_retries: int = 3
    requests_per_minute: int = 60
    timeout: float = 30.0
    replication_mode: bool = True
    api_key_env: str = API_KEY_ENV

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.requests_per_minute <= 0:
            raise ValueError("requests_per_minute must be positive")
        if self.replication_mode:
            if self.temperature != 0:
                raise ConfigError(
                    f"replication mode requires temperature 0, got {self.temperature}"
                )
            if not _PINNED_SUFFIX.search(self.model_id):
                raise ConfigError(
                    f"replication mode requires a pinned model snapshot, got {self.model_id!r}"
                )


class TokenBucket:
    """Client-side request budget: ``rate_per_minute`` tokens, continuous refill."""

    def __init__(self, rate_per_minute: int, clock=time.monotonic, sleep=time.sleep):
        self._rate = rate_per_minute / 60.0
        self._capacity = float(rate_per_minute)
        self._tokens = float(rate_per_minute)
        self._last = clock()
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()

    def _refill(self) -> None:
        now = self._clock()
        self._tokens = min(self._capacity, self._tokens + (now - self._last) * self._rate)
        self._last = now

    def acquire(self) -> None:
        while True:
            with self._lock:
                self._refill()
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self._rate
            self._sleep(wait)


class TransportFailure(Exception):
    """Internal: transport-level failure the client may retry."""


def _requests_transport(url: str, headers: dict, payload: dict, timeout: float):
    import requests

    try:
        resp = requests.post(url, headers=headers, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportFailure(str(exc)) from exc
    return resp.status_code, resp.text


class LiveChatProvider:
    """POSTs a single-user-message chat-completion request; reads the first choice.

    429 and 5xx responses back off exponentially up to ``max_retries`` extra
    attempts; other 4xx responses fail immediately (they will not heal).
    """

    def __init__(self, config: ProviderConfig, transport=_requests_transport, sleep=time.sleep,
                 bucket: TokenBucket | None = None):
        self.config = config
        self.model_id = config.model_id
        self.temperature = config.temperature
        self._transport = transport
        self._sleep = sleep
        self._bucket = bucket or TokenBucket(config.requests_per_minute)

    def _api_key(self) -> str:
        key = os.environ.get(self.config.api_key_env, "")
        if not key:
            raise ConfigError(
                f"live provider needs an API key: set the {self.config.api_key_env} "
                "environment variable"
            )
        return key

    def complete(self, prompt: str) -> str:
        headers = {
            "Authorization": f"Bearer {self._api_key()}",
            "Content-Type": "application/json",
        }
        payload = {
            "model": self.config.model_id,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        attempts = self.config.max_retries + 1
        backoff = 1.0
        last_error: str = ""
        throttled = False
        for attempt in range(attempts):
            self._bucket.acquire()
            try:
                status, body = self._transport(
                    self.config.endpoint_url, headers, payload, self.config.timeout
                )
            except TransportFailure as exc:
                last_error = str(exc)
                throttled = False
            else:
                if status == 200:
                    try:
                        content = json.loads(body)["choices"][0]["message"]["content"]
                    except (json.JSONDecodeError, KeyError, IndexError, TypeError):
                        last_error = f"unparseable 200 response body: {body[:200]!r}"
                        throttled = False
                    else:
                        if not isinstance(content, str):
                            raise ProviderUnreachable(
                                f"response content is not text: {content!r}"
                            )
                        return content
                elif status == 429:
                    last_error = f"throttled (429): {body[:200]!r}"
                    throttled = True
                elif 500 <= status < 600:
                    last_error = f"server error ({status}): {body[:200]!r}"
                    throttled = False
                else:
                    raise ProviderUnreachable(f"provider rejected request ({status}): {body[:200]!r}")
            if attempt + 1 < attempts:
                self._sleep(backoff)
                backoff *= 2
        if throttled:
            raise RateLimited(f"backoff exhausted after {attempts} attempts: {last_error}")
        raise ProviderUnreachable(f"gave up after {attempts} attempts: {last_error}")


class StubChatProvider:
    """Deterministic offline provider: six digits derived from (seed, prompt)."""

    def __init__(self, seed: int = 0, model_id: str = "stub-v1"):
        self.seed = seed
        self.model_id = model_id
        self.temperature = 0.0

    def _digest(self, prompt: str) -> bytes:
        return hashlib.sha256(f"{self.seed}:{prompt}".encode("utf-8")).digest()

    def complete(self, prompt: str) -> str:
        digest = self._digest(prompt)
        return format_vector(digest[i] % 10 for i in range(6))


class FixtureChatProvider:
    """Table-driven provider: prompt hash -> canned reply.

    Values may be six integers (rendered as a clean list) or a raw reply
    string, so fixtures can plant malformed responses too.
    """

    def __init__(self, table: dict[str, object], model_id: str = "fixture-v1"):
        self.model_id = model_id
        self.temperature = 0.0
        self._table = dict(table)

    @staticmethod
    def prompt_hash(prompt: str) -> str:
        return hashlib.sha256(prompt.encode("utf-8")).hexdigest()

    @classmethod
    def from_pairs(cls, pairs: dict[tuple[str, str], object], **kwargs) -> "FixtureChatProvider":
        from .prompting import render_prompt

        table = {
            cls.prompt_hash(render_prompt(c1, c2)): value
            for (c1, c2), value in pairs.items()
        }
        return cls(table, **kwargs)

    @classmethod
    def from_file(cls, path: str, **kwargs) -> "FixtureChatProvider":
        """JSON file: {"pairs": [{"caption1":..., "caption2":..., "response": [..] | "..."}]}"""
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        pairs = {}
        for item in obj["pairs"]:
            pairs[(item["caption1"], item["caption2"])] = item["response"]
        return cls.from_pairs(pairs, **kwargs)

    def complete(self, prompt: str) -> str:
        key = self.prompt_hash(prompt)
        if key not in self._table:
            raise ConfigError(f"fixture has no reply for prompt hash {key[:12]}...")
        value = self._table[key]
        if isinstance(value, str):
            return value
        return format_vector(value)


class AdversarialStubProvider:
    """Stub that misbehaves on a seeded schedule, to exercise the lenient
    parser, retries, and the failure policy.

    Per prompt, the schedule picks one of: clean list, prose-wrapped list,
    transient prose (clean again from the second attempt on), or a
    persistently out-of-range list.
    """

    MODES = ("clean", "prose_wrapped", "transient_prose", "out_of_range")

    def __init__(self, seed: int = 0, model_id: str = "adversarial-stub-v1"):
        self.seed = seed
        self.model_id = model_id
        self.temperature = 0.0
        self._calls: dict[str, int] = {}
        self._lock = threading.Lock()

    def mode_for(self, prompt: str) -> str:
        digest = hashlib.sha256(f"{self.seed}:adv:{prompt}".encode("utf-8")).digest()
        return self.MODES[digest[0] % len(self.MODES)]

    def complete(self, prompt: str) -> str:
        with self._lock:
            attempt = self._calls.get(prompt, 0) + 1
            self._calls[prompt] = attempt
        digest = hashlib.sha256(f"{self.seed}:{prompt}".encode("utf-8")).digest()
        clean = format_vector(digest[i] % 10 for i in range(6))
        mode = self.mode_for(prompt)
        if mode == "clean":
            return clean
        if mode == "prose_wrapped":
            return f"Sure, here are my ratings: {clean} based on the two sentences."
        if mode == "transient_prose" and attempt == 1:
            return "I would rate these sentences as fairly different overall."
        if mode == "out_of_range":
            return format_vector([digest[0] % 10 + 10, *(digest[i] % 10 for i in range(1, 6))])
        return clean

"""Chat-completion access layer.

Two backends share one interface: an HTTP client for any OpenAI-compatible
chat endpoint, and a deterministic mock for offline runs and tests. Both emit
one GatewayEvent per completion call.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field
from importlib import resources
from random import Random
from typing import Callable, Optional


class GatewayError(RuntimeError):
    pass


class GatewayConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CompletionParams:
    # defaults: sampling temperature 1, completion cap 500 tokens
    temperature: float = 1.0
    max_tokens: int = 500
    model_name: str = "gpt-3.5-turbo"


@dataclass(frozen=True)
class GatewayEvent:
    timestamp: float
    prompt_chars: int
    response_chars: int
    latency_ms: int
    attempt: int
    backend: str


EventSink = Callable[[GatewayEvent], None]

# payload section markers; build_prompt and the mocks agree on these
INPUT1_MARKER = "Input 1:"
INPUT2_MARKER = "Input 2:"
OBJECTIVES_LINE_PREFIX = "minimization objectives"


def split_payload_segments(prompt: str) -> list[str]:
    """Recover the parent text segments from an operator prompt."""
    lines = prompt.splitlines()
    segments: list[str] = []
    current: Optional[list[str]] = None
    for line in lines:
        if line.strip() in (INPUT1_MARKER, INPUT2_MARKER):
            if current is not None:
                segments.append("\n".join(current).strip("\n"))
            current = []
            continue
        if current is not None:
            if line.strip().lower().startswith(OBJECTIVES_LINE_PREFIX):
                continue
            current.append(line)
    if current is not None:
        segments.append("\n".join(current).strip("\n"))
    return segments


def load_bundled_synonyms() -> dict[str, list[str]]:
    raw = (resources.files("instructevo.data") / "synonyms.json").read_text(encoding="utf-8")
    return json.loads(raw)


class RateLimiter:
    """Sliding-window limiter: at most requests_per_minute admissions per 60s."""

    def __init__(self, requests_per_minute: int, clock=time.monotonic, sleep=time.sleep):
        if requests_per_minute < 1:
            raise GatewayConfigError("requests_per_minute must be >= 1")
        self.rpm = requests_per_minute
        self.clock = clock
        self.sleep = sleep
        self._admitted: list[float] = []

    def acquire(self):
        while True:
            now = self.clock()
            self._admitted = [t for t in self._admitted if now - t < 60.0]
            if len(self._admitted) < self.rpm:
                self._admitted.append(now)
                return
            self.sleep(60.0 - (now - self._admitted[0]))


class MockGateway:
    """Deterministic offline stand-in for the LLM.

    Modes:
      echo        return the last payload segment verbatim
      uppercase   return the first payload segment upper-cased
      splice      first half of segment 1 + second half of segment 2
      seeded-edit 1..3 seeded synonym substitutions on the first segment
    """

    MODES = ("echo", "uppercase", "splice", "seeded-edit")

    def __init__(
        self,
        mode: str = "seeded-edit",
        seed: int = 0,
        synonyms: Optional[dict[str, list[str]]] = None,
        on_event: Optional[EventSink] = None,
    ):
        if mode not in self.MODES:
            raise GatewayConfigError(f"unknown mock mode {mode!r}")
        self.mode = mode
        self.seed = seed
        self.synonyms = synonyms if synonyms is not None else load_bundled_synonyms()
        self.on_event = on_event
        self._ticks = 0

    def complete(self, prompt: str, params: CompletionParams) -> str:
        if not prompt:
            raise GatewayError("prompt must be non-empty")
        segments = split_payload_segments(prompt)
        if not segments:
            raise GatewayError("mock gateway found no payload segments in prompt")
        out = self._transform(segments, prompt)
        self._ticks += 1
        if self.on_event is not None:
            self.on_event(
                GatewayEvent(
                    timestamp=float(self._ticks),
                    prompt_chars=len(prompt),
                    response_chars=len(out),
                    latency_ms=0,
                    attempt=1,
                    backend="mock",
                )
            )
        return out

    def _transform(self, segments: list[str], prompt: str) -> str:
        if self.mode == "echo":
            return segments[-1]
        if self.mode == "uppercase":
            return segments[0].upper()
        if self.mode == "splice":
            a = segments[0]
            b = segments[1] if len(segments) > 1 else segments[0]
            return a[: len(a) // 2] + b[len(b) // 2 :]
        return self._seeded_edit(segments[0], prompt)

    def _seeded_edit(self, text: str, prompt: str) -> str:
        # per-call rng from (seed, call index, prompt): a replayed run sees the
        # same call sequence and therefore the same edits, while repeated
        # identical prompts within one run still vary
        digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
        rng = Random(f"{self.seed}:{self._ticks}:{digest}")
        matches = [m for m in re.finditer(r"[A-Za-z]+", text) if m.group().lower() in self.synonyms]
        if not matches:
            return text
        k = min(rng.randint(1, 3), len(matches))
        picked = sorted(rng.sample(range(len(matches)), k))
        out = text
        for idx in reversed(picked):
            m = matches[idx]
            word = m.group()
            repl = rng.choice(self.synonyms[word.lower()])
            if word.isupper():
                repl = repl.upper()
            elif word[0].isupper():
                repl = repl.capitalize()
            out = out[: m.start()] + repl + out[m.end() :]
        return out


class HttpGateway:
    """OpenAI-compatible chat-completions client with retries and rate limiting.

    Sends a single user message per call. The API key comes from an
    environment variable and is never logged.
    """

    TRANSIENT_STATUS = frozenset({429, 500, 502, 503, 504})

    def __init__(
        self,
        base_url: str,
        api_key_env: str = "OPENAI_API_KEY",
        max_retries: int = 4,
        backoff_base: float = 1.0,
        requests_per_minute: int = 60,
        timeout: float = 60.0,
        on_event: Optional[EventSink] = None,
        session=None,
        sleep=time.sleep,
        clock=time.monotonic,
        jitter_rng: Optional[Random] = None,
    ):
        import requests

        if not base_url:
            raise GatewayConfigError("base_url is required for the http backend")
        api_key = os.environ.get(api_key_env)
        if not api_key:
            raise GatewayConfigError(f"environment variable {api_key_env} is not set")
        self.base_url = base_url.rstrip("/")
        self._api_key = api_key
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.timeout = timeout
        self.on_event = on_event
        self.session = session or requests.Session()
        self.sleep = sleep
        self.limiter = RateLimiter(requests_per_minute, clock=clock, sleep=sleep)
        self.jitter_rng = jitter_rng or Random()
        self._requests = requests

    def complete(self, prompt: str, params: CompletionParams) -> str:
        if not prompt:
            raise GatewayError("prompt must be non-empty")
        body = {
            "model": params.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        url = self.base_url + "/chat/completions"
        headers = {"Authorization": f"Bearer {self._api_key}"}
        start = time.monotonic()
        last_error = "no attempt made"
        for attempt in range(1, self.max_retries + 2):
            self.limiter.acquire()
            try:
                resp = self.session.post(url, json=body, headers=headers, timeout=self.timeout)
            except self._requests.RequestException as exc:
                last_error = f"transport error: {exc}"
            else:
                if resp.status_code == 200:
                    try:
                        content = resp.json()["choices"][0]["message"]["content"]
                    except (KeyError, IndexError, ValueError) as exc:
                        raise GatewayError(f"malformed completion response: {exc}") from exc
                    self._emit(prompt, content, start, attempt)
                    return content
                if resp.status_code not in self.TRANSIENT_STATUS:
                    raise GatewayError(f"API error {resp.status_code}: {resp.text[:500]}")
                last_error = f"HTTP {resp.status_code}"
            if attempt <= self.max_retries:
                delay = self.backoff_base * (2 ** (attempt - 1))
                delay += self.jitter_rng.uniform(0, 0.1 * delay)
                self.sleep(delay)
        raise GatewayError(f"retries exhausted after {self.max_retries + 1} attempts ({last_error})")

    def _emit(self, prompt: str, content: str, start: float, attempt: int):
        if self.on_event is not None:
            self.on_event(
                GatewayEvent(
                    timestamp=time.time(),
                    prompt_chars=len(prompt),
                    response_chars=len(content),
                    latency_ms=int((time.monotonic() - start) * 1000),
                    attempt=attempt,
                    backend="http",
                )
            )

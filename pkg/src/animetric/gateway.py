"""Client for chat-completion-style VLM/LLM endpoints.

Every query runs at temperature 0, attaches a fixed number of uniformly
sampled video stills, and is cached on disk under a content digest, so a
warm cache replays a whole evaluation byte-identically with zero network
calls. Yes/no questions force the judge into a one-field JSON envelope;
an answer that fails to parse is re-asked once and then recorded as
``unparseable`` (scored as "no" downstream, with the raw text retained
for audit).
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import re
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import requests

YES_NO_INSTRUCTION = (
    'Answer with exactly one JSON object of the form {"answer": "yes"} '
    'or {"answer": "no"} and nothing else.'
)
YES_NO_REASK_SUFFIX = (
    " Your previous reply could not be parsed. Reply with ONLY the JSON object."
)
COUNT_INSTRUCTION = (
    'Answer with exactly one JSON object of the form {"count": <non-negative '
    "integer>} and nothing else."
)
LIST_INSTRUCTION = (
    "Answer with exactly one JSON array of question strings and nothing else."
)

_JSON_OBJECT_RE = re.compile(r"\{[^{}]*\}")


class GatewayError(RuntimeError):
    """Transport failed after all retries, or the endpoint rejected us."""


@dataclass(frozen=True)
class GatewayConfig:
    endpoint_url: str = ""
    model_name: str = "stub"
    api_key_env_var: str = "VLM_API_KEY"
    max_retries: int = 2
    timeout: float = 120.0
    frames_per_query: int = 8
    temperature: float = 0.0  # fixed; nonzero judges are not reproducible

    def __post_init__(self):
        if self.frames_per_query < 1:
            raise ValueError("frames_per_query must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    @classmethod
    def from_file(cls, path: str | Path) -> "GatewayConfig":
        doc = json.loads(Path(path).read_text())
        return cls(**doc)


@dataclass(frozen=True)
class QARequest:
    question: str
    system_context: str = ""
    frames: tuple[str, ...] = ()
    case_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.question:
            raise ValueError("question must be non-empty")
        if not self.frames:
            raise ValueError("a visual question needs at least one frame reference")


@dataclass(frozen=True)
class QAAnswer:
    verdict: str  # yes | no | unparseable
    raw_text: str
    from_cache: bool = False


@dataclass(frozen=True)
class Completion:
    text: str
    from_cache: bool = False


@dataclass(frozen=True)
class CountAnswer:
    count: int | None  # None when unparseable
    raw_text: str
    from_cache: bool = False


def cache_key(
    model_name: str,
    system_context: str,
    question: str,
    frame_hashes: Sequence[str],
) -> str:
    """Stable 64-hex digest over the semantic content of one query.

    Frame order is semantic (stills are temporally ordered), so permuting
    the hashes changes the key.
    """
    blob = json.dumps(
        [model_name, system_context, question, list(frame_hashes)],
        sort_keys=False,
        separators=(",", ":"),
        ensure_ascii=False,
    ).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def hash_frame(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def sample_frames(frames: Sequence[str], count: int) -> tuple[str, ...]:
    """Uniformly pick ``count`` stills, keeping temporal order."""
    if len(frames) <= count:
        return tuple(frames)
    if count == 1:
        return (frames[0],)
    picks = [round(i * (len(frames) - 1) / (count - 1)) for i in range(count)]
    return tuple(frames[i] for i in picks)


class ResponseCache:
    """Append-only on-disk store: one JSON file per cache key.

    Entries are written atomically (temp file + rename) and never mutated,
    so concurrent readers are always consistent.
    """

    def __init__(self, directory: str | Path | None):
        self.directory = Path(directory) if directory else None
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._memory: dict[str, str] = {}

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> str | None:
        if self.directory is None:
            return self._memory.get(key)
        path = self._path(key)
        if not path.exists():
            return None
        return json.loads(path.read_text())["response"]

    def put(self, key: str, response: str) -> None:
        if self.directory is None:
            self._memory[key] = response
            return
        path = self._path(key)
        if path.exists():
            return
        doc = json.dumps({"key": key, "response": response})
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(doc)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)


class Transport(Protocol):
    def __call__(
        self, config: GatewayConfig, system_context: str, user_text: str,
        frames: Sequence[str],
    ) -> str: ...


class HttpTransport:
    """POSTs an OpenAI-style chat completion with base64 image parts."""

    def __call__(
        self, config: GatewayConfig, system_context: str, user_text: str,
        frames: Sequence[str],
    ) -> str:
        content: list[dict] = [{"type": "text", "text": user_text}]
        for frame in frames:
            data = base64.b64encode(Path(frame).read_bytes()).decode("ascii")
            content.append(
                {
                    "type": "image_url",
                    "image_url": {"url": f"data:image/png;base64,{data}"},
                }
            )
        messages = []
        if system_context:
            messages.append({"role": "system", "content": system_context})
        messages.append({"role": "user", "content": content})
        body = {
            "model": config.model_name,
            "messages": messages,
            "temperature": config.temperature,
        }
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(config.api_key_env_var, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        response = requests.post(
            config.endpoint_url, json=body, headers=headers, timeout=config.timeout
        )
        if response.status_code in (401, 403):
            raise GatewayError(f"authentication failed ({response.status_code})")
        response.raise_for_status()
        doc = response.json()
        return doc["choices"][0]["message"]["content"]


class StubTransport:
    """Scripted transport for tests and offline runs.

    Rules match a substring of the system context or user text (first
    match wins); the default applies otherwise. Responses that are not
    strings are serialized to JSON, so a rule can script the judge
    envelope directly.
    """

    def __init__(self, rules: list[tuple[str, object]] | None = None,
                 default: object = '{"answer": "yes"}'):
        self.rules = list(rules or [])
        self.default = default
        self.calls = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "StubTransport":
        doc = json.loads(Path(path).read_text())
        rules = [(r["contains"], r["response"]) for r in doc.get("rules", [])]
        return cls(rules=rules, default=doc.get("default", '{"answer": "yes"}'))

    def __call__(self, config, system_context, user_text, frames) -> str:
        self.calls += 1
        haystack = f"{system_context}\n{user_text}"
        for pattern, response in self.rules:
            if pattern in haystack:
                return response if isinstance(response, str) else json.dumps(response)
        if isinstance(self.default, str):
            return self.default
        return json.dumps(self.default)


def extract_verdict(raw_text: str) -> str | None:
    """Pull a yes/no verdict out of judge output; None when unparseable."""
    for candidate in _JSON_OBJECT_RE.findall(raw_text):
        try:
            doc = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if isinstance(doc, dict) and "answer" in doc:
            answer = str(doc["answer"]).strip().lower()
            if answer in ("yes", "no"):
                return answer
    bare = raw_text.strip().strip(".").lower()
    if bare in ("yes", "no"):
        return bare
    return None


def extract_count(raw_text: str) -> int | None:
    for candidate in _JSON_OBJECT_RE.findall(raw_text):
        try:
            doc = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if isinstance(doc, dict) and "count" in doc:
            try:
                value = int(doc["count"])
            except (TypeError, ValueError):
                continue
            if value >= 0:
                return value
    return None


def extract_string_list(raw_text: str) -> list[str] | None:
    """Parse a JSON array of strings, tolerating surrounding prose."""
    decoder = json.JSONDecoder()
    for start in range(len(raw_text)):
        if raw_text[start] != "[":
            continue
        try:
            doc, _ = decoder.raw_decode(raw_text[start:])
        except json.JSONDecodeError:
            continue
        if isinstance(doc, list) and all(isinstance(s, str) for s in doc):
            return doc
    return None


class VlmGateway:
    """Cached, retrying front door to one judge model."""

    def __init__(
        self,
        config: GatewayConfig,
        cache_dir: str | Path | None = None,
        transport: Transport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.cache = ResponseCache(cache_dir)
        self.transport = transport or HttpTransport()
        self.sleep = sleep
        self.keys_seen: list[str] = []
        self._frame_hashes: dict[str, str] = {}

    # -- low-level cached query ------------------------------------------

    def _frame_hash(self, path: str) -> str:
        if path not in self._frame_hashes:
            self._frame_hashes[path] = hash_frame(path)
        return self._frame_hashes[path]

    def query(
        self, system_context: str, user_text: str, frames: Sequence[str] = ()
    ) -> tuple[str, bool]:
        """Return (raw model text, came_from_cache)."""
        frames = sample_frames(tuple(frames), self.config.frames_per_query)
        hashes = [self._frame_hash(f) for f in frames]
        key = cache_key(self.config.model_name, system_context, user_text, hashes)
        self.keys_seen.append(key)
        cached = self.cache.get(key)
        if cached is not None:
            return cached, True

        attempt = 0
        while True:
            try:
                raw = self.transport(self.config, system_context, user_text, frames)
                break
            except GatewayError:
                raise
            except Exception as exc:
                if attempt >= self.config.max_retries:
                    raise GatewayError(
                        f"transport failed after {attempt + 1} attempts: {exc}"
                    ) from exc
                self.sleep(2.0**attempt)
                attempt += 1
        self.cache.put(key, raw)
        return raw, False

    def cache_digest(self) -> str:
        """Digest of every cache key this gateway touched, for provenance."""
        blob = "\n".join(sorted(set(self.keys_seen))).encode("ascii")
        return hashlib.sha256(blob).hexdigest()

    # -- typed queries -----------------------------------------------------

    def ask_yes_no(self, request: QARequest) -> QAAnswer:
        """One structured yes/no question; unparseable output is re-asked once."""
        user_text = f"{request.question}\n{YES_NO_INSTRUCTION}"
        raw, cached = self.query(request.system_context, user_text, request.frames)
        verdict = extract_verdict(raw)
        if verdict is None:
            retry_text = user_text + YES_NO_REASK_SUFFIX
            raw, cached = self.query(request.system_context, retry_text, request.frames)
            verdict = extract_verdict(raw)
        if verdict is None:
            return QAAnswer(verdict="unparseable", raw_text=raw, from_cache=cached)
        return QAAnswer(verdict=verdict, raw_text=raw, from_cache=cached)

    def ask_count(self, request: QARequest) -> CountAnswer:
        """Ask for a non-negative integer in a JSON envelope."""
        user_text = f"{request.question}\n{COUNT_INSTRUCTION}"
        raw, cached = self.query(request.system_context, user_text, request.frames)
        count = extract_count(raw)
        if count is None:
            retry_text = user_text + YES_NO_REASK_SUFFIX
            raw, cached = self.query(request.system_context, retry_text, request.frames)
            count = extract_count(raw)
        return CountAnswer(count=count, raw_text=raw, from_cache=cached)

    def ask_question_list(
        self, system_context: str, user_text: str, frames: Sequence[str] = ()
    ) -> list[str]:
        """Ask for a JSON list of question strings; error after one re-ask."""
        full = f"{user_text}\n{LIST_INSTRUCTION}"
        raw, _ = self.query(system_context, full, frames)
        items = extract_string_list(raw)
        if items is None:
            raw, _ = self.query(system_context, full + YES_NO_REASK_SUFFIX, frames)
            items = extract_string_list(raw)
        if items is None:
            raise GatewayError(f"judge did not return a question list: {raw[:200]!r}")
        return items

    def complete_text(self, prompt: str) -> Completion:
        """Plain text completion with the same caching semantics."""
        if not prompt:
            raise ValueError("prompt must be non-empty")
        raw, cached = self.query("", prompt, ())
        return Completion(text=raw, from_cache=cached)


def ask_yes_no(
    config: GatewayConfig,
    request: QARequest,
    cache_dir: str | Path | None = None,
    transport: Transport | None = None,
) -> QAAnswer:
    return VlmGateway(config, cache_dir=cache_dir, transport=transport).ask_yes_no(request)


def complete_text(
    config: GatewayConfig,
    prompt: str,
    cache_dir: str | Path | None = None,
    transport: Transport | None = None,
) -> Completion:
    return VlmGateway(config, cache_dir=cache_dir, transport=transport).complete_text(prompt)

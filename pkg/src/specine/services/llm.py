import hashlib
import logging
import random
import threading
import time
from collections.abc import Callable
from enum import StrEnum
from pathlib import Path

import httpx
import msgspec

from specine.utils import (
    BackendUnavailableError,
    ChatRequest,
    ChatResponse,
    Logger,
    MalformedResponseError,
    ReplayCacheCorruptError,
    ReplayMissError,
    UnknownRunError,
    UsageStats,
)


class BackendKind(StrEnum):
    HTTP = "http"
    SCRIPTED = "scripted"


class CacheMode(StrEnum):
    OFF = "off"
    RECORD = "record"
    REPLAY = "replay"


class _RequestIdentity(msgspec.Struct, frozen=True):
    system: str | None
    messages: list[tuple[str, str]]
    model: str
    max_tokens: int
    temperature: float
    agent: str
    problem_id: str
    iteration: int
    attempt: int


def request_digest(request: ChatRequest) -> str:
    """Stable digest of everything that determines a completion.

    Timeouts and retry counts are excluded; the agent step and attempt are
    included so sampled retries are never served the same cached reply.
    """
    identity = _RequestIdentity(
        system=request.system,
        messages=[(m.role, m.content) for m in request.messages],
        model=request.config.model_name,
        max_tokens=request.config.max_tokens,
        temperature=request.config.temperature,
        agent=request.agent,
        problem_id=request.problem_id,
        iteration=request.iteration,
        attempt=request.attempt,
    )
    return hashlib.sha256(msgspec.json.encode(identity)).hexdigest()


class Backend:
    name = "backend"

    def send(self, request: ChatRequest) -> ChatResponse:
        raise NotImplementedError

    def close(self) -> None:
        pass


class _WireMessage(msgspec.Struct):
    content: str | None = None


class _WireChoice(msgspec.Struct):
    message: _WireMessage | None = None


class _WireUsage(msgspec.Struct):
    prompt_tokens: int = 0
    completion_tokens: int = 0


class _WireCompletion(msgspec.Struct):
    choices: list[_WireChoice] = msgspec.field(default_factory=list)
    usage: _WireUsage | None = None


class HttpBackend(Backend):
    """Chat-completion client for OpenAI-compatible endpoints."""

    name = "http"

    def __init__(
        self,
        api_base: str,
        api_key: str | None,
        log_level: int = logging.WARNING,
        backoff_base: float = 1.0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ) -> None:
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self.__client = httpx.Client(
            base_url=api_base.rstrip("/"), headers=headers, transport=transport
        )
        self.__backoff_base = backoff_base
        self.__sleep = sleep
        self.__rng = rng or random.Random()
        self.__logger = Logger.for_service("HttpBackend", log_level)

    def _payload(self, request: ChatRequest) -> bytes:
        messages = []
        if request.system:
            messages.append({"role": "system", "content": request.system})
        messages.extend(
            {"role": m.role, "content": m.content} for m in request.messages
        )
        return msgspec.json.encode({
            "model": request.config.model_name,
            "messages": messages,
            "max_tokens": request.config.max_tokens,
            "temperature": request.config.temperature,
        })

    def _parse(self, response: httpx.Response, latency: float) -> ChatResponse:
        try:
            payload = msgspec.json.decode(response.content, type=_WireCompletion)
        except (msgspec.DecodeError, msgspec.ValidationError) as ex:
            raise MalformedResponseError(
                f"undecodable completion payload: {ex}"
            ) from ex
        if not payload.choices or payload.choices[0].message is None:
            raise MalformedResponseError("completion payload has no choices")
        content = payload.choices[0].message.content
        if content is None:
            raise MalformedResponseError("completion payload has no message content")
        usage = payload.usage or _WireUsage()
        return ChatResponse(
            content=content,
            usage=UsageStats(
                prompt_tokens=max(usage.prompt_tokens, 0),
                completion_tokens=max(usage.completion_tokens, 0),
            ),
            latency=latency,
            backend=self.name,
        )

    def send(self, request: ChatRequest) -> ChatResponse:
        """Post a chat request, retrying transport failures with backoff.

        Connection errors, HTTP 429 and 5xx responses are retried up to
        `max_retries` times with exponential backoff and jitter; other 4xx
        responses fail immediately.

        Raises:
            BackendUnavailableError: When every attempt failed.
            MalformedResponseError: When the endpoint answered without a completion.

        Returns:
            ChatResponse: The first successful completion.
        """
        body = self._payload(request)
        attempts = request.config.max_retries + 1
        last_error = "no attempt made"
        for attempt in range(1, attempts + 1):
            start = time.perf_counter()
            try:
                response = self.__client.post(
                    "/chat/completions",
                    content=body,
                    timeout=request.config.request_timeout,
                )
            except httpx.TransportError as ex:
                last_error = f"{type(ex).__name__}: {ex}"
            else:
                latency = time.perf_counter() - start
                if response.status_code == 429 or response.status_code >= 500:
                    last_error = f"HTTP {response.status_code}"
                elif response.status_code >= 400:
                    raise BackendUnavailableError(
                        self.name,
                        attempt,
                        f"HTTP {response.status_code}: {response.text[:200]}",
                    )
                else:
                    return self._parse(response, latency)

            self.__logger.debug(
                f"{request.step} attempt {attempt}/{attempts} failed: {last_error}"
            )
            if attempt < attempts:
                delay = self.__backoff_base * 2 ** (attempt - 1)
                self.__sleep(delay + self.__rng.uniform(0, delay / 2))

        self.__logger.warning(f"{request.step} gave up after {attempts} attempt(s)")
        raise BackendUnavailableError(self.name, attempts, last_error)

    def close(self) -> None:
        self.__client.close()


class ScriptedEntry(msgspec.Struct, frozen=True):
    content: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None


type ScriptValue = str | ScriptedEntry | list[str | ScriptedEntry]


class Scenario(msgspec.Struct, frozen=True):
    """Canned completions keyed by problem id and "<agent>:<iteration>" step.

    A step maps to one entry or to a list indexed by attempt, the last entry
    repeating. Problem-specific steps take precedence over `default`.
    """

    default: dict[str, ScriptValue] = msgspec.field(default_factory=dict)
    problems: dict[str, dict[str, ScriptValue]] = msgspec.field(default_factory=dict)

    @classmethod
    def load(cls, path: Path) -> "Scenario":
        return msgspec.json.decode(path.read_bytes(), type=cls)

    def lookup(self, problem_id: str, step: str, attempt: int) -> ScriptedEntry | None:
        value = self.problems.get(problem_id, {}).get(step)
        if value is None:
            value = self.default.get(step)
        if value is None:
            return None
        if isinstance(value, list):
            if not value:
                return None
            value = value[min(attempt, len(value)) - 1]
        if isinstance(value, str):
            return ScriptedEntry(content=value)
        return value


class ScriptedBackend(Backend):
    """Deterministic backend replaying a scenario; records every request it sees."""

    name = "scripted"

    def __init__(self, scenario: Scenario, log_level: int = logging.WARNING) -> None:
        self.scenario = scenario
        self.__lock = threading.Lock()
        self.__transcript: list[ChatRequest] = []
        self.__logger = Logger.for_service("ScriptedBackend", log_level)

    @property
    def transcript(self) -> list[ChatRequest]:
        with self.__lock:
            return list(self.__transcript)

    def calls(self, agent: str) -> list[ChatRequest]:
        return [request for request in self.transcript if request.agent == agent]

    def send(self, request: ChatRequest) -> ChatResponse:
        with self.__lock:
            self.__transcript.append(request)
        entry = self.scenario.lookup(request.problem_id, request.step, request.attempt)
        if entry is None:
            self.__logger.debug(
                f"no scripted response for {request.problem_id}/{request.step}"
            )
            raise MalformedResponseError(
                f"no scripted response for {request.problem_id or '*'}/{request.step}"
            )
        prompt_words = sum(len(m.content.split()) for m in request.messages)
        if request.system:
            prompt_words += len(request.system.split())
        return ChatResponse(
            content=entry.content,
            usage=UsageStats(
                prompt_tokens=(
                    entry.prompt_tokens
                    if entry.prompt_tokens is not None
                    else prompt_words
                ),
                completion_tokens=(
                    entry.completion_tokens
                    if entry.completion_tokens is not None
                    else len(entry.content.split())
                ),
            ),
            backend=self.name,
        )


class ReplayRecord(msgspec.Struct, frozen=True):
    key: str
    request: ChatRequest
    response: ChatResponse


class ReplayCache:
    """Append-only record file of request/response pairs.

    Each record is a header line "<payload length> <sha256 of payload>" followed
    by the JSON payload and a newline.
    """

    def __init__(self, path: Path, log_level: int = logging.WARNING) -> None:
        self.path = path
        self.hits = 0
        self.misses = 0
        self.__lock = threading.Lock()
        self.__entries: dict[str, ChatResponse] = {}
        self.__logger = Logger.for_service("ReplayCache", log_level)
        if self.path.exists():
            self._load()

    def __len__(self) -> int:
        return len(self.__entries)

    def _load(self) -> None:
        data = self.path.read_bytes()
        offset = 0
        while offset < len(data):
            newline = data.find(b"\n", offset)
            if newline < 0:
                raise ReplayCacheCorruptError(offset, "truncated header")
            try:
                length_text, digest = data[offset:newline].decode("ascii").split(" ")
                length = int(length_text)
            except ValueError as ex:
                raise ReplayCacheCorruptError(offset, "unreadable header") from ex
            start = newline + 1
            payload = data[start : start + length]
            if len(payload) != length:
                raise ReplayCacheCorruptError(offset, "truncated payload")
            if hashlib.sha256(payload).hexdigest() != digest:
                raise ReplayCacheCorruptError(offset, "digest mismatch")
            try:
                record = msgspec.json.decode(payload, type=ReplayRecord)
            except (msgspec.DecodeError, msgspec.ValidationError) as ex:
                raise ReplayCacheCorruptError(offset, str(ex)) from ex
            self.__entries[record.key] = record.response
            offset = start + length + 1
        self.__logger.debug(
            f"loaded {len(self.__entries)} replay record(s) from {self.path!s}"
        )

    def get(self, key: str) -> ChatResponse | None:
        with self.__lock:
            response = self.__entries.get(key)
            if response is None:
                self.misses += 1
            else:
                self.hits += 1
            return response

    def put(self, key: str, request: ChatRequest, response: ChatResponse) -> None:
        payload = msgspec.json.encode(
            ReplayRecord(key=key, request=request, response=response)
        )
        digest = hashlib.sha256(payload).hexdigest()
        header = f"{len(payload)} {digest}\n".encode("ascii")
        with self.__lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("ab") as f:
                f.write(header + payload + b"\n")
            self.__entries[key] = response


class CachedBackend(Backend):
    """Serves recorded responses; records misses or refuses them in replay mode."""

    def __init__(
        self, inner: Backend | None, cache: ReplayCache, mode: CacheMode
    ) -> None:
        if inner is None and mode != CacheMode.REPLAY:
            raise ValueError("only replay mode may run without an inner backend")
        self.inner = inner
        self.cache = cache
        self.mode = mode
        self.name = f"{inner.name if inner else 'replay'}+cache"

    def send(self, request: ChatRequest) -> ChatResponse:
        key = request_digest(request)
        cached = self.cache.get(key)
        if cached is not None:
            return msgspec.structs.replace(cached, cached=True, latency=0.0)
        if self.mode == CacheMode.REPLAY or self.inner is None:
            raise ReplayMissError(key)
        response = self.inner.send(request)
        self.cache.put(key, request, response)
        return response

    def close(self) -> None:
        if self.inner is not None:
            self.inner.close()


class LedgerEntry(msgspec.Struct, frozen=True):
    run_id: str
    agent: str
    step: str
    request_key: str
    usage: UsageStats
    latency: float
    cached: bool = False


class LedgerTotals(msgspec.Struct, frozen=True):
    prompt_tokens: int = 0
    completion_tokens: int = 0
    wall_time: float = 0.0
    calls: int = 0
    cache_hits: int = 0

    @property
    def usage(self) -> UsageStats:
        return UsageStats(
            prompt_tokens=self.prompt_tokens, completion_tokens=self.completion_tokens
        )


class UsageLedger:
    """Thread-safe per-run record of every completion call."""

    def __init__(self, count_cached_usage: bool = False) -> None:
        self.count_cached_usage = count_cached_usage
        self.__lock = threading.Lock()
        self.__runs: dict[str, list[LedgerEntry]] = {}

    def open_run(self, run_id: str) -> None:
        with self.__lock:
            self.__runs.setdefault(run_id, [])

    def record(self, run_id: str, entry: LedgerEntry) -> None:
        with self.__lock:
            self.__runs.setdefault(run_id, []).append(entry)

    def entries(self, run_id: str) -> list[LedgerEntry]:
        with self.__lock:
            if run_id not in self.__runs:
                raise UnknownRunError(run_id)
            return list(self.__runs[run_id])

    def _sum(self, entries: list[LedgerEntry]) -> LedgerTotals:
        prompt = completion = hits = 0
        wall = 0.0
        for entry in entries:
            wall += entry.latency
            if entry.cached:
                hits += 1
                if not self.count_cached_usage:
                    continue
            prompt += entry.usage.prompt_tokens
            completion += entry.usage.completion_tokens
        return LedgerTotals(
            prompt_tokens=prompt,
            completion_tokens=completion,
            wall_time=wall,
            calls=len(entries),
            cache_hits=hits,
        )

    def totals(self, run_id: str) -> LedgerTotals:
        """Sum usage and latency over every call attributed to `run_id`.

        Raises:
            UnknownRunError: If the run was never opened or recorded to.
        """
        return self._sum(self.entries(run_id))

    def per_agent(self, run_id: str) -> dict[str, LedgerTotals]:
        grouped: dict[str, list[LedgerEntry]] = {}
        for entry in self.entries(run_id):
            grouped.setdefault(entry.agent, []).append(entry)
        return {agent: self._sum(items) for agent, items in sorted(grouped.items())}


class LLMService:
    def __init__(
        self,
        backend: Backend,
        ledger: UsageLedger | None = None,
        log_level: int = logging.WARNING,
        max_concurrency: int | None = None,
    ) -> None:
        self.backend = backend
        self.ledger = ledger or UsageLedger()
        self.__slots = (
            threading.BoundedSemaphore(max_concurrency) if max_concurrency else None
        )
        self.__logger = Logger.for_service("LLMService", log_level)

    def complete(self, request: ChatRequest, run_id: str) -> ChatResponse:
        """Send a chat request and record its usage against `run_id`.

        Raises:
            BackendUnavailableError: When the backend gave up after retries.
            MalformedResponseError: When the backend returned no completion.

        Returns:
            ChatResponse: The backend's completion.
        """
        key = request_digest(request)
        self.__logger.debug(f"[{run_id}] {request.step} attempt {request.attempt}")
        if self.__slots is None:
            response = self.backend.send(request)
        else:
            with self.__slots:
                response = self.backend.send(request)
        self.ledger.record(
            run_id,
            LedgerEntry(
                run_id=run_id,
                agent=request.agent,
                step=request.step,
                request_key=key,
                usage=response.usage,
                latency=response.latency,
                cached=response.cached,
            ),
        )
        return response

    def ledger_totals(self, run_id: str) -> LedgerTotals:
        return self.ledger.totals(run_id)

    def close(self) -> None:
        self.backend.close()


def build_backend(
    kind: BackendKind,
    *,
    api_base: str,
    api_key: str | None,
    backoff_base: float = 1.0,
    scenario_path: Path | None = None,
    cache_mode: CacheMode = CacheMode.OFF,
    cache_path: Path | None = None,
    log_level: int = logging.WARNING,
    transport: httpx.BaseTransport | None = None,
) -> Backend:
    """Build the configured backend, wrapped by the replay cache when enabled.

    Raises:
        ValueError: If a scripted backend has no scenario or a cache has no path.

    Returns:
        Backend: The backend to hand to LLMService.
    """
    inner: Backend | None
    if cache_mode == CacheMode.REPLAY:
        inner = None
    elif kind == BackendKind.SCRIPTED:
        if scenario_path is None:
            raise ValueError("the scripted backend needs a scenario file")
        inner = ScriptedBackend(Scenario.load(scenario_path), log_level=log_level)
    else:
        inner = HttpBackend(
            api_base,
            api_key,
            log_level=log_level,
            backoff_base=backoff_base,
            transport=transport,
        )

    if cache_mode == CacheMode.OFF:
        assert inner is not None
        return inner
    if cache_path is None:
        raise ValueError("the replay cache needs a file path")
    cache = ReplayCache(cache_path, log_level=log_level)
    return CachedBackend(inner, cache, cache_mode)

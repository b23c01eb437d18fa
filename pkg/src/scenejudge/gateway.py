"""Every language/vision-language model call goes through :class:`Gateway`.

The gateway renders templates, shapes images for the backend profile,
re-asks with a repair note when an answer cannot be parsed, limits
concurrency, and records one transcript per call.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol, Sequence

import httpx

from scenejudge import raster, style
from scenejudge.errors import GatewayError, ParseError, TemplateError, UnscriptedCallError
from scenejudge.prompts import REPAIR_SUFFIX, SYSTEM_PROMPT, PromptTemplate, get_template
from scenejudge.raster import ImageBuffer

log = logging.getLogger(__name__)

DEFAULT_MAX_ATTEMPTS = 3


@dataclass(frozen=True)
class ChatRequest:
    template_id: str
    variables: Mapping[str, str]
    images: tuple[ImageBuffer, ...] = ()
    temperature: float = 0.0
    max_attempts: int = DEFAULT_MAX_ATTEMPTS

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        object.__setattr__(self, "images", tuple(self.images))


@dataclass(frozen=True)
class BackendProfile:
    name: str
    target_resolution: int | None
    image_cap: int | None = None


REMOTE = BackendProfile("remote", 1200)
LOCAL = BackendProfile("local", 335, image_cap=4)
MOCK = BackendProfile("mock", None)
PROFILES = {p.name: p for p in (REMOTE, LOCAL, MOCK)}


def resize_for_backend(image: ImageBuffer, profile: BackendProfile) -> ImageBuffer:
    """Scale so the longest side matches the profile target (nearest neighbor)."""
    if profile.target_resolution is None:
        return image
    return raster.resize_longest(image, profile.target_resolution)


def concat_for_small_backend(images: Sequence[ImageBuffer], cap: int | None) -> list[ImageBuffer]:
    """Pair adjacent images side by side until at most ``cap`` remain.

    Each pass merges only as many leading pairs as needed, so 3 images with
    a cap of 2 become one composite plus the untouched third image.
    """
    out = list(images)
    if cap is None or cap < 1:
        return out
    while len(out) > cap:
        needed = len(out) - cap
        merged: list[ImageBuffer] = []
        i = 0
        while i < len(out):
            if needed > 0 and i + 1 < len(out):
                scale = style.label_scale(max(out[i].width, out[i].height))
                merged.append(raster.side_by_side([out[i], out[i + 1]], scale))
                needed -= 1
                i += 2
            else:
                merged.append(out[i])
                i += 1
        out = merged
    return out


# -- parsing ---------------------------------------------------------------------

_FENCE = re.compile(r"```(?:json)?\s*\n?(.*?)```", re.DOTALL)


def parse_answer(raw: str, required_keys: Sequence[str] = ()) -> dict[str, Any]:
    """Extract the JSON object from the last fenced block (or the whole reply)."""
    blocks = _FENCE.findall(raw or "")
    candidates = list(reversed(blocks)) + [raw or ""]
    for text in candidates:
        try:
            payload = json.loads(text.strip())
        except (json.JSONDecodeError, ValueError):
            continue
        if isinstance(payload, dict):
            missing = [k for k in required_keys if k not in payload]
            if missing:
                raise ParseError(f"answer is missing keys {missing}")
            return payload
    raise ParseError("no JSON object found in the answer")


def variables_hash(variables: Mapping[str, str]) -> str:
    blob = json.dumps(dict(variables), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def mock_key(template_id: str, variables: Mapping[str, str]) -> str:
    return f"{template_id}:{variables_hash(variables)}"


# -- backends ------------------------------------------------------------------------


@dataclass(frozen=True)
class BackendCall:
    template_id: str
    variables: Mapping[str, str]
    messages: tuple[dict[str, Any], ...]
    images: tuple[ImageBuffer, ...]
    temperature: float
    attempt: int


class Backend(Protocol):
    def complete(self, call: BackendCall) -> str: ...


def _as_reply(value: Any) -> str:
    if isinstance(value, str):
        return value
    return "```json\n" + json.dumps(value, sort_keys=True) + "\n```"


class MockBackend:
    """Scripted responses keyed by ``template_id:hash(variables)``.

    A script value may be a string, a JSON object (wrapped into a fenced
    block), a list of either (served in order, last one repeating), or
    ``{"error": "..."}`` to simulate a transport failure. A key of the form
    ``template_id:*`` answers any otherwise unscripted call to that template.
    Unscripted calls raise :class:`UnscriptedCallError`.
    """

    def __init__(self, script: Mapping[str, Any]):
        self.script = dict(script)
        self._served: dict[str, int] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> "MockBackend":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data.get("responses", data))

    def complete(self, call: BackendCall) -> str:
        key = mock_key(call.template_id, call.variables)
        if key not in self.script:
            key = f"{call.template_id}:*"
            if key not in self.script:
                raise UnscriptedCallError(f"no scripted response for {mock_key(call.template_id, call.variables)}")
        entry = self.script[key]
        if isinstance(entry, list):
            with self._lock:
                n = self._served.get(key, 0)
                self._served[key] = n + 1
            entry = entry[min(n, len(entry) - 1)]
        if isinstance(entry, dict) and set(entry) == {"error"}:
            raise GatewayError(f"scripted transport failure: {entry['error']}")
        return _as_reply(entry)


class HttpBackend:
    """OpenAI-compatible ``/chat/completions`` client with transport retries."""

    def __init__(
        self,
        model: str,
        base_url: str | None = None,
        api_key: str | None = None,
        *,
        timeout: float = 120.0,
        transport_attempts: int = 4,
        backoff: float = 1.0,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.model = model
        self.base_url = (base_url or os.environ.get("SJ_MODEL_BASE_URL") or "https://api.openai.com/v1").rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get("SJ_MODEL_API_KEY", "")
        self.transport_attempts = transport_attempts
        self.backoff = backoff
        self.client = client or httpx.Client(timeout=timeout)
        self.sleep = sleep

    @staticmethod
    def encode_messages(call: BackendCall) -> list[dict[str, Any]]:
        messages = [dict(m) for m in call.messages]
        if call.images:
            first_user = next(i for i, m in enumerate(messages) if m["role"] == "user")
            parts: list[dict[str, Any]] = [{"type": "text", "text": messages[first_user]["content"]}]
            for img in call.images:
                data = base64.b64encode(img.to_png()).decode("ascii")
                parts.append({"type": "image_url", "image_url": {"url": f"data:image/png;base64,{data}"}})
            messages[first_user] = {"role": "user", "content": parts}
        return messages

    def complete(self, call: BackendCall) -> str:
        body = {"model": self.model, "messages": self.encode_messages(call), "temperature": call.temperature}
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        last: Exception | None = None
        for attempt in range(self.transport_attempts):
            if attempt:
                self.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self.client.post(f"{self.base_url}/chat/completions", json=body, headers=headers)
            except httpx.HTTPError as exc:
                last = exc
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = GatewayError(f"HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise GatewayError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"] or ""
            except (KeyError, IndexError, ValueError) as exc:
                raise GatewayError(f"unexpected response shape: {exc}") from exc
        raise GatewayError(f"transport failed after {self.transport_attempts} attempts: {last}")


# -- rate limiting -------------------------------------------------------------------


class RateLimiter:
    """Caps in-flight requests and, optionally, the request start rate (token bucket)."""

    def __init__(self, max_in_flight: int = 4, rate_per_s: float | None = None, burst: int = 1):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self.rate = rate_per_s
        self.capacity = max(1, burst)
        self._tokens = float(self.capacity)
        self._stamp = time.monotonic()
        self._lock = threading.Lock()

    def _take_token(self) -> None:
        if not self.rate:
            return
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.capacity, self._tokens + (now - self._stamp) * self.rate)
                self._stamp = now
                if self._tokens >= 1:
                    self._tokens -= 1
                    return
                wait = (1 - self._tokens) / self.rate
            time.sleep(wait)

    def __enter__(self):
        self._take_token()
        self._slots.acquire()
        return self

    def __exit__(self, *exc):
        self._slots.release()
        return False


# -- gateway ---------------------------------------------------------------------------


@dataclass
class Transcript:
    seq: int
    template_id: str
    variables: dict[str, str]
    images: list[dict[str, Any]]
    temperature: float
    raw_response: str | None
    parsed: dict[str, Any] | None
    latency_ms: float
    attempts: int
    error: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "template_id": self.template_id,
            "variables": self.variables,
            "images": self.images,
            "temperature": self.temperature,
            "raw_response": self.raw_response,
            "parsed": self.parsed,
            "latency_ms": round(self.latency_ms, 3),
            "attempts": self.attempts,
            "error": self.error,
        }


Validator = Callable[[dict[str, Any]], Any]


@dataclass
class Gateway:
    backend: Any
    profile: BackendProfile = MOCK
    limiter: RateLimiter = field(default_factory=RateLimiter)
    transcript_path: Path | None = None

    def __post_init__(self):
        self.transcripts: list[Transcript] = []
        self._lock = threading.Lock()
        if self.transcript_path is not None:
            self.transcript_path = Path(self.transcript_path)
            self.transcript_path.parent.mkdir(parents=True, exist_ok=True)
            self.transcript_path.write_text("", encoding="utf-8")

    def prepare_images(self, images: Sequence[ImageBuffer]) -> tuple[ImageBuffer, ...]:
        shaped = [resize_for_backend(im, self.profile) for im in images]
        return tuple(concat_for_small_backend(shaped, self.profile.image_cap))

    def chat(self, request: ChatRequest, validate: Validator | None = None) -> Any:
        """Run one templated exchange and return the parsed answer.

        ``validate`` may reject a parsed answer by raising :class:`ParseError`
        (or a subclass); rejections consume attempts like parse failures, and
        the last error is re-raised once attempts run out. Its return value,
        when not None, replaces the parsed payload.
        """
        template = get_template(request.template_id)
        self._check_images(template, request)
        variables = {k: str(v) for k, v in request.variables.items()}
        prompt = template.render(variables)
        images = self.prepare_images(request.images)
        messages: list[dict[str, Any]] = [
            {"role": "system", "content": SYSTEM_PROMPT},
            {"role": "user", "content": prompt},
        ]
        started = time.perf_counter()
        raw: str | None = None
        last_error: ParseError | None = None
        attempt = 0
        try:
            for attempt in range(1, request.max_attempts + 1):
                call = BackendCall(
                    template.id, variables, tuple(messages), images, request.temperature, attempt
                )
                with self.limiter:
                    raw = self.backend.complete(call)
                try:
                    parsed = parse_answer(raw, template.required_keys)
                    payload: Any = parsed
                    if validate is not None:
                        replaced = validate(parsed)
                        if replaced is not None:
                            payload = replaced
                except ParseError as exc:
                    last_error = exc
                    log.debug("attempt %d of %s rejected: %s", attempt, template.id, exc)
                    messages += [
                        {"role": "assistant", "content": raw},
                        {"role": "user", "content": REPAIR_SUFFIX.replace("$problem", str(exc))},
                    ]
                    continue
                self._record(template, variables, images, request, raw, parsed, started, attempt, None)
                return payload
        except GatewayError as exc:
            self._record(template, variables, images, request, raw, None, started, attempt, f"{type(exc).__name__}: {exc}")
            raise
        assert last_error is not None
        self._record(
            template, variables, images, request, raw, None, started, attempt, f"{type(last_error).__name__}: {last_error}"
        )
        raise last_error

    def _check_images(self, template: PromptTemplate, request: ChatRequest) -> None:
        if template.expects_images is True and not request.images:
            raise TemplateError(f"template {template.id!r} requires images but none were given")
        if template.expects_images is False and request.images:
            raise TemplateError(f"template {template.id!r} does not accept images")

    def _record(self, template, variables, images, request, raw, payload, started, attempts, error):
        with self._lock:
            t = Transcript(
                seq=len(self.transcripts),
                template_id=template.id,
                variables=dict(variables),
                images=[{"label": im.label, "digest": im.digest(), "width": im.width, "height": im.height} for im in images],
                temperature=request.temperature,
                raw_response=raw,
                parsed=payload,
                latency_ms=(time.perf_counter() - started) * 1000.0,
                attempts=attempts,
                error=error,
            )
            self.transcripts.append(t)
            if self.transcript_path is not None:
                with self.transcript_path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(t.to_json(), sort_keys=True, ensure_ascii=False) + "\n")

    @property
    def call_count(self) -> int:
        return len(self.transcripts)

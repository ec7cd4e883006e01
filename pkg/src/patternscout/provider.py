"""Chat-completion and embedding backends behind one validating front.

Two backends ship: an HTTP backend speaking the OpenAI-compatible wire
format, and a deterministic mock with a scripted mode (fixture keyed by
request hash or schema id) and a keyword-oracle mode (rule-based answers
computed from profile keywords), which makes end-to-end runs reproducible
offline. Every exchange is schema-validated and appended to the trace log.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import threading
import time
from dataclasses import dataclass, field
from importlib import resources
from string import Template
from typing import TYPE_CHECKING, Any, Callable, Mapping, Sequence

import httpx

from .config import API_KEY_ENV_VAR, RunConfig
from .errors import ProviderError, ProviderSchemaError
from .scanner import parse_tree_paths
from .trace import TraceLog

if TYPE_CHECKING:
    from .profile import PatternProfile

SCHEMA_IDS = ("tree_filter", "plan", "investigation", "deliberation", "profile_gen")
MOCK_EMBED_DIM = 256
MAX_TRANSPORT_ATTEMPTS = 5
MAX_PARSE_ATTEMPTS = 3  # initial ask + repair re-ask + final re-ask
MAX_PLAN_CHARS = 4_000

_TOKEN_RE = re.compile(r"[a-z0-9_]+")


# ---------------------------------------------------------------------------
# request / response types


@dataclass(frozen=True)
class LlmRequest:
    """One chat exchange: prompt texts plus the expected response kind.

    ``context`` carries structured, non-wire hints (pattern name, visible
    paths, file content) so rule-based mock backends can answer without
    re-parsing prompt text; HTTP backends ignore it and it does not enter
    the request hash.
    """

    system_text: str
    user_text: str
    response_schema_id: str
    seed: int
    context: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.system_text or not self.user_text:
            raise ProviderError("request texts must be non-empty")
        if self.response_schema_id not in SCHEMA_IDS:
            raise ProviderError(f"unknown response schema {self.response_schema_id!r}")

    def sha256(self) -> str:
        canonical = json.dumps(
            {
                "schema": self.response_schema_id,
                "seed": self.seed,
                "system": self.system_text,
                "user": self.user_text,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.values):
            raise ProviderError("embedding contains non-finite entries")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))


@dataclass(frozen=True)
class TreeFilterEntry:
    path: str
    confidence: float


@dataclass(frozen=True)
class TreeFilterResult:
    entries: tuple[TreeFilterEntry, ...]


# ---------------------------------------------------------------------------
# prompt templates

_TEMPLATE_CACHE: dict[str, Template] = {}


def render_prompt(name: str, **values: Any) -> str:
    """Fill the named prompt template; templates live under ``prompts/``."""
    tmpl = _TEMPLATE_CACHE.get(name)
    if tmpl is None:
        text = resources.files("patternscout").joinpath("prompts", f"{name}.txt").read_text(encoding="utf-8")
        tmpl = Template(text)
        _TEMPLATE_CACHE[name] = tmpl
    return tmpl.substitute({k: str(v) for k, v in values.items()})


# ---------------------------------------------------------------------------
# response schema validation


class SchemaInvalid(ValueError):
    """Response parsed as JSON but does not fit the expected shape."""


def _expect(cond: bool, message: str) -> None:
    if not cond:
        raise SchemaInvalid(message)


def _num01(value: Any, what: str) -> float:
    _expect(isinstance(value, (int, float)) and not isinstance(value, bool), f"{what} must be a number")
    v = float(value)
    _expect(math.isfinite(v) and 0.0 <= v <= 1.0, f"{what} must lie in [0, 1]")
    return v


def _str_list(value: Any, what: str) -> list[str]:
    _expect(isinstance(value, list) and all(isinstance(x, str) for x in value), f"{what} must be a list of strings")
    return list(value)


def validate_schema(schema_id: str, data: Any) -> dict[str, Any]:
    """Normalize a parsed response body; raises SchemaInvalid on any misfit."""
    _expect(isinstance(data, dict), "response body must be a JSON object")

    if schema_id == "tree_filter":
        entries = data.get("entries")
        _expect(isinstance(entries, list), "'entries' must be a list")
        out = []
        for entry in entries:
            _expect(isinstance(entry, dict), "each entry must be an object")
            path = entry.get("path")
            _expect(isinstance(path, str) and path != "", "entry 'path' must be a non-empty string")
            out.append({"path": path, "confidence": _num01(entry.get("confidence"), "entry 'confidence'")})
        return {"entries": out}

    if schema_id == "plan":
        steps = _str_list(data.get("steps"), "'steps'")
        _expect(len(steps) >= 1 and all(s.strip() for s in steps), "'steps' must contain at least one non-empty step")
        hints = _str_list(data.get("focus_hints", []), "'focus_hints'")
        total = sum(len(s) for s in steps) + sum(len(h) for h in hints)
        _expect(total <= MAX_PLAN_CHARS, f"plan text exceeds {MAX_PLAN_CHARS} characters")
        return {"steps": steps, "focus_hints": hints}

    if schema_id == "investigation":
        found = data.get("found")
        _expect(isinstance(found, bool), "'found' must be a boolean")
        confidence = _num01(data.get("confidence"), "'confidence'")
        reasoning = data.get("reasoning", "")
        _expect(isinstance(reasoning, str), "'reasoning' must be a string")
        _expect(not found or reasoning.strip() != "", "'reasoning' must be non-empty when found is true")
        snippets = _str_list(data.get("snippets", []), "'snippets'")
        return {"found": found, "confidence": confidence, "reasoning": reasoning, "snippets": snippets}

    if schema_id == "deliberation":
        score = data.get("score")
        _expect(isinstance(score, int) and not isinstance(score, bool), "'score' must be an integer")
        _expect(0 <= score <= 10, "'score' must lie in [0, 10]")
        explanation = data.get("explanation", "")
        _expect(isinstance(explanation, str), "'explanation' must be a string")
        return {"score": score, "explanation": explanation}

    if schema_id == "profile_gen":
        name = data.get("name")
        _expect(isinstance(name, str) and name.strip() != "", "'name' must be a non-empty string")
        description = data.get("description")
        _expect(isinstance(description, str) and 1 <= len(description) <= 2_000, "'description' must be 1..2000 characters")
        catalog_url = data.get("catalog_url", "")
        _expect(isinstance(catalog_url, str), "'catalog_url' must be a string")
        globs = _str_list(data.get("globs", []), "'globs'")
        _expect(len(globs) >= 1, "'globs' must contain at least one glob")
        keywords = _str_list(data.get("keywords", []), "'keywords'")
        _expect(len(keywords) >= 1, "'keywords' must contain at least one keyword")
        examples = _str_list(data.get("examples", []), "'examples'")
        _expect(len(examples) <= 10, "at most 10 examples are allowed")
        _expect(all(len(e) <= 50_000 for e in examples), "each example must stay under 50000 characters")
        return {
            "name": name,
            "description": description,
            "catalog_url": catalog_url,
            "globs": globs,
            "keywords": keywords,
            "examples": examples,
        }

    raise SchemaInvalid(f"unknown schema id {schema_id!r}")


# ---------------------------------------------------------------------------
# backends


class RateLimited(Exception):
    def __init__(self, retry_after: float | None = None):
        self.retry_after = retry_after
        super().__init__("rate limited")


class TransportFailure(Exception):
    pass


class TokenBucket:
    """Simple token-bucket limiter; ``take`` blocks via the injected sleep."""

    def __init__(self, rate: float = 5.0, capacity: float = 10.0, sleep: Callable[[float], None] = time.sleep):
        self.rate = rate
        self.capacity = capacity
        self._tokens = capacity
        self._last = time.monotonic()
        self._lock = threading.Lock()
        self._sleep = sleep

    def take(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                needed = (1.0 - self._tokens) / self.rate
            self._sleep(needed)


class HttpBackend:
    """OpenAI-compatible chat-completions and embeddings endpoints.

    The API key comes from the environment, never from config files.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        embed_model: str,
        api_key: str | None = None,
        client: httpx.Client | None = None,
        timeout: float = 60.0,
        bucket: TokenBucket | None = None,
    ):
        key = api_key or os.environ.get(API_KEY_ENV_VAR) or os.environ.get("OPENAI_API_KEY")
        if not key:
            raise ProviderError(f"no API key: set {API_KEY_ENV_VAR} (or OPENAI_API_KEY)")
        self._key = key
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.embed_model = embed_model
        self._client = client or httpx.Client(timeout=timeout)
        self._bucket = bucket or TokenBucket()

    def _post(self, path: str, payload: dict[str, Any]) -> dict[str, Any]:
        self._bucket.take()
        try:
            response = self._client.post(
                self.endpoint + path,
                json=payload,
                headers={"Authorization": f"Bearer {self._key}"},
            )
        except httpx.HTTPError as exc:
            raise TransportFailure(str(exc)) from exc
        if response.status_code == 429:
            retry_after = response.headers.get("retry-after")
            raise RateLimited(float(retry_after) if retry_after else None)
        if response.status_code >= 500:
            raise TransportFailure(f"server error {response.status_code}")
        if response.status_code >= 400:
            raise ProviderError(f"request rejected ({response.status_code}): {response.text[:300]}")
        try:
            return response.json()
        except ValueError as exc:
            raise TransportFailure("response body is not JSON") from exc

    def complete(self, request: LlmRequest) -> str:
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
            "seed": request.seed,
            "response_format": {"type": "json_object"},
        }
        body = self._post("/chat/completions", payload)
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportFailure(f"malformed completion envelope: {exc}") from exc

    def embed_raw(self, texts: Sequence[str]) -> list[list[float]]:
        body = self._post("/embeddings", {"model": self.embed_model, "input": list(texts)})
        try:
            data = sorted(body["data"], key=lambda d: d["index"])
            return [[float(x) for x in item["embedding"]] for item in data]
        except (KeyError, TypeError) as exc:
            raise TransportFailure(f"malformed embeddings envelope: {exc}") from exc


def hash_embedding(text: str, dim: int = MOCK_EMBED_DIM) -> list[float]:
    """Deterministic bag-of-words embedding: token counts hashed into ``dim``
    buckets, L2-normalized. Order-insensitive by construction."""
    counts = [0.0] * dim
    for token in _TOKEN_RE.findall(text.casefold()):
        bucket = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "big") % dim
        counts[bucket] += 1.0
    norm = math.sqrt(sum(c * c for c in counts))
    if norm == 0.0:
        return counts
    return [c / norm for c in counts]


class _MockBackendBase:
    model = "mock-model"
    embed_model = "mock-embed"

    def __init__(self, embed_dim: int = MOCK_EMBED_DIM):
        self.embed_dim = embed_dim

    def embed_raw(self, texts: Sequence[str]) -> list[list[float]]:
        return [hash_embedding(t, self.embed_dim) for t in texts]

    def complete(self, request: LlmRequest) -> str:
        raise NotImplementedError


class ScriptedBackend(_MockBackendBase):
    """Answers strictly from a fixture script.

    Script keys are ``sha256:<request hash>`` for exact matches or
    ``schema:<schema_id>`` as a fallback. Values are one response or a list
    consumed in order (the last entry repeats once exhausted). String values
    are raw bodies; anything else is serialized to JSON.
    """

    def __init__(self, script: Mapping[str, Any], embed_dim: int = MOCK_EMBED_DIM):
        super().__init__(embed_dim)
        self._script: dict[str, list[Any]] = {
            key: list(value) if isinstance(value, list) else [value] for key, value in script.items()
        }
        self._cursor: dict[str, int] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str, embed_dim: int = MOCK_EMBED_DIM) -> "ScriptedBackend":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh), embed_dim=embed_dim)

    def complete(self, request: LlmRequest) -> str:
        for key in (f"sha256:{request.sha256()}", f"schema:{request.response_schema_id}"):
            responses = self._script.get(key)
            if responses:
                with self._lock:
                    index = min(self._cursor.get(key, 0), len(responses) - 1)
                    self._cursor[key] = index + 1
                entry = responses[index]
                return entry if isinstance(entry, str) else json.dumps(entry, sort_keys=True)
        raise ProviderError(
            f"no scripted response for schema {request.response_schema_id!r} "
            f"(request {request.sha256()[:12]}…)"
        )


class KeywordOracleBackend(_MockBackendBase):
    """Rule-based backend: deterministic answers computed from the profile
    keywords carried in the request context. Enables offline end-to-end runs."""

    TREE_CONFIDENCE = 0.9
    HIT_CONFIDENCE = 0.8
    MISS_CONFIDENCE = 0.1

    def complete(self, request: LlmRequest) -> str:
        handler = getattr(self, f"_{request.response_schema_id}")
        return json.dumps(handler(request.context), sort_keys=True)

    @staticmethod
    def _folded_keywords(ctx: Mapping[str, Any]) -> list[str]:
        return [str(k).casefold() for k in ctx.get("keywords", ())]

    def _tree_filter(self, ctx: Mapping[str, Any]) -> dict[str, Any]:
        keywords = self._folded_keywords(ctx)
        entries = []
        for path in ctx.get("paths", ()):
            low = str(path).casefold()
            if any(k in low for k in keywords):
                entries.append({"path": path, "confidence": self.TREE_CONFIDENCE})
        return {"entries": entries}

    def _plan(self, ctx: Mapping[str, Any]) -> dict[str, Any]:
        keywords = [str(k) for k in ctx.get("keywords", ())]
        pattern = str(ctx.get("pattern", "the pattern"))
        steps = [
            f"Search candidate files for the terms: {', '.join(keywords)}.",
            f"Inspect build, deployment, and configuration artifacts for signals of {pattern}.",
            "Collect per-file evidence and weigh it across the repository.",
        ]
        return {"steps": steps, "focus_hints": keywords}

    def _investigation(self, ctx: Mapping[str, Any]) -> dict[str, Any]:
        keywords = self._folded_keywords(ctx)
        content = str(ctx.get("content", ""))
        path = str(ctx.get("path", ""))
        for line in content.splitlines():
            low = line.casefold()
            hit = next((k for k in keywords if k in low), None)
            if hit is not None:
                return {
                    "found": True,
                    "confidence": self.HIT_CONFIDENCE,
                    "reasoning": f"The term {hit!r} appears in {path}.",
                    "snippets": [line],
                }
        return {
            "found": False,
            "confidence": self.MISS_CONFIDENCE,
            "reasoning": "No profile terms appear in the file.",
            "snippets": [],
        }

    def _deliberation(self, ctx: Mapping[str, Any]) -> dict[str, Any]:
        evidence = list(ctx.get("evidence", ()))
        found = [e for e in evidence if e.get("found")]
        if found:
            score = round(10 * max(float(e.get("confidence", 0.0)) for e in found))
            score = max(0, min(10, score))
        else:
            score = 1
        explanation = f"{len(found)} of {len(evidence)} analyzed files carry supporting evidence."
        return {"score": score, "explanation": explanation[:220]}

    def _profile_gen(self, ctx: Mapping[str, Any]) -> dict[str, Any]:
        name = str(ctx.get("name", "pattern"))
        description = str(ctx.get("description", ""))[:2_000] or name
        words = [w for w in _TOKEN_RE.findall(description.casefold()) if len(w) >= 4]
        keywords = list(dict.fromkeys(words))[:8] or _TOKEN_RE.findall(name.casefold()) or ["pattern"]
        return {
            "name": name,
            "description": description,
            "catalog_url": str(ctx.get("catalog_url", "")),
            "globs": ["**/*"],
            "keywords": keywords,
            "examples": [],
        }


# ---------------------------------------------------------------------------
# validating front


class Provider:
    """Retry, validate, and trace every exchange with the configured backend."""

    def __init__(
        self,
        backend,
        *,
        seed: int = 0,
        trace: TraceLog | None = None,
        max_inflight: int = 4,
        sleep: Callable[[float], None] = time.sleep,
        backoff_base: float = 0.5,
        backoff_cap: float = 8.0,
    ):
        self.backend = backend
        self.seed = seed
        self.trace = trace if trace is not None else TraceLog(None)
        self._gate = threading.BoundedSemaphore(max_inflight)
        self._sleep = sleep
        self._backoff_base = backoff_base
        self._backoff_cap = backoff_cap
        self._embed_dim: int | None = None

    @property
    def model(self) -> str:
        return self.backend.model

    # -- chat -----------------------------------------------------------

    def chat(self, request: LlmRequest) -> dict[str, Any]:
        """Run one schema-validated exchange, re-asking a bounded number of
        times when the body fails to parse or validate."""
        current = request
        last_raw = ""
        last_error = ""
        for attempt in range(1, MAX_PARSE_ATTEMPTS + 1):
            raw = self._exchange(current)
            last_raw = raw
            try:
                body = validate_schema(request.response_schema_id, json.loads(raw))
            except (json.JSONDecodeError, SchemaInvalid) as exc:
                last_error = str(exc)
                self._trace_call(request, response={"invalid": raw[:500], "error": last_error}, attempt=attempt)
                current = self._repair_request(request, last_error)
                continue
            self._trace_call(request, response=body, attempt=attempt)
            return body
        raise ProviderSchemaError(
            f"schema {request.response_schema_id!r} response invalid after "
            f"{MAX_PARSE_ATTEMPTS - 1} re-asks ({last_error})",
            raw=last_raw,
        )

    def _repair_request(self, request: LlmRequest, error: str) -> LlmRequest:
        note = (
            f"\n\nYour previous reply could not be used: {error}. "
            "Reply again with only one valid JSON object of the required form."
        )
        return LlmRequest(
            system_text=request.system_text,
            user_text=request.user_text + note,
            response_schema_id=request.response_schema_id,
            seed=request.seed,
            context=request.context,
        )

    def _exchange(self, request: LlmRequest) -> str:
        delay = self._backoff_base
        for attempt in range(1, MAX_TRANSPORT_ATTEMPTS + 1):
            try:
                with self._gate:
                    return self.backend.complete(request)
            except RateLimited as exc:
                if attempt == MAX_TRANSPORT_ATTEMPTS:
                    raise ProviderError(f"still rate limited after {attempt} attempts") from exc
                wait = exc.retry_after if exc.retry_after is not None else delay
                self.trace.warning(f"rate limited; waiting {wait:.2f}s", schema_id=request.response_schema_id)
                self._sleep(wait)
            except TransportFailure as exc:
                if attempt == MAX_TRANSPORT_ATTEMPTS:
                    raise ProviderError(f"transport failure after {attempt} attempts: {exc}") from exc
                self.trace.warning(f"transport failure: {exc}; retrying", schema_id=request.response_schema_id)
                self._sleep(delay)
            delay = min(delay * 2, self._backoff_cap)
        raise AssertionError("unreachable")

    def _trace_call(self, request: LlmRequest, *, response: Any, attempt: int) -> None:
        extras = {k: request.context[k] for k in ("pattern", "path") if k in request.context}
        self.trace.call(
            kind="chat",
            model=self.backend.model,
            schema_id=request.response_schema_id,
            request_sha256=request.sha256(),
            response=response,
            attempt=attempt,
            **extras,
        )

    # -- embeddings ------------------------------------------------------

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        """Embed texts in order; one vector per text, constant dimension."""
        items = list(texts)
        if not items:
            return []
        delay = self._backoff_base
        for attempt in range(1, MAX_TRANSPORT_ATTEMPTS + 1):
            try:
                with self._gate:
                    rows = self.backend.embed_raw(items)
                break
            except RateLimited as exc:
                if attempt == MAX_TRANSPORT_ATTEMPTS:
                    raise ProviderError(f"still rate limited after {attempt} attempts") from exc
                self._sleep(exc.retry_after if exc.retry_after is not None else delay)
            except TransportFailure as exc:
                if attempt == MAX_TRANSPORT_ATTEMPTS:
                    raise ProviderError(f"transport failure after {attempt} attempts: {exc}") from exc
                self.trace.warning(f"transport failure: {exc}; retrying", schema_id="embed")
                self._sleep(delay)
            delay = min(delay * 2, self._backoff_cap)
        if len(rows) != len(items):
            raise ProviderError(f"expected {len(items)} embeddings, got {len(rows)}")
        dims = {len(r) for r in rows}
        if len(dims) != 1:
            raise ProviderError(f"inconsistent embedding dimensions in one call: {sorted(dims)}")
        dim = dims.pop()
        if self._embed_dim is None:
            self._embed_dim = dim
        elif dim != self._embed_dim:
            raise ProviderError(f"embedding dimension changed across calls: {self._embed_dim} -> {dim}")
        digest = hashlib.sha256(json.dumps(items, ensure_ascii=False).encode("utf-8")).hexdigest()
        self.trace.call(
            kind="embed",
            model=self.backend.embed_model,
            schema_id="embed",
            request_sha256=digest,
            response={"count": len(rows), "dim": dim},
            attempt=1,
        )
        return [EmbeddingVector(tuple(row)) for row in rows]

    # -- tree filter -------------------------------------------------------

    def filter_file_tree(self, tree_text: str, profile: "PatternProfile") -> TreeFilterResult:
        """Ask which visible paths likely carry the pattern; hallucinated
        paths are dropped with a traced warning."""
        visible = parse_tree_paths(tree_text)
        request = LlmRequest(
            system_text="You locate files relevant to an architectural pattern within a repository file tree.",
            user_text=render_prompt(
                "tree_filter",
                pattern_name=profile.name,
                description=profile.description,
                globs=", ".join(profile.globs),
                keywords=", ".join(profile.keywords),
                tree=tree_text or "(empty repository)",
            ),
            response_schema_id="tree_filter",
            seed=self.seed,
            context={"pattern": profile.name, "keywords": list(profile.keywords), "paths": sorted(visible)},
        )
        body = self.chat(request)
        best: dict[str, float] = {}
        for entry in body["entries"]:
            path = entry["path"]
            if path not in visible:
                self.trace.warning(f"tree filter returned a path not in the tree: {path!r}", pattern=profile.name)
                continue
            best[path] = max(best.get(path, 0.0), float(entry["confidence"]))
        entries = tuple(TreeFilterEntry(path=p, confidence=best[p]) for p in sorted(best))
        return TreeFilterResult(entries=entries)


def make_provider(cfg: RunConfig, trace: TraceLog | None = None) -> Provider:
    """Build the configured provider (HTTP or mock) with shared limits."""
    pc = cfg.provider
    if pc.kind == "http":
        backend = HttpBackend(endpoint=pc.endpoint, model=pc.model, embed_model=pc.embed_model)
    elif pc.mock_mode == "scripted":
        backend = ScriptedBackend.from_file(pc.script_path) if pc.script_path else ScriptedBackend({})
    else:
        backend = KeywordOracleBackend()
    return Provider(backend, seed=pc.seed, trace=trace, max_inflight=pc.max_inflight)

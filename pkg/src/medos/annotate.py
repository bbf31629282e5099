"""Reference-summary annotation through a text-generation endpoint.

Two prompt kinds exist: ``GPT-R`` sees only the reviews, ``GPT-RDQ`` also
sees the description and question-answers. Endpoints are anything that maps
a prompt string to a completion string; tests use :class:`StubTransport`,
which reads canned responses from a fixture directory laid out as
``<fixture_dir>/<kind>/<product_id>.txt`` (a ``<product_id>.error`` file
makes that request fail).
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Protocol

from .corpus import Annotation, Corpus, Product, normalize_ws

logger = logging.getLogger(__name__)

API_KEY_ENV = "MEDOS_ANNOTATION_API_KEY"
KINDS = ("GPT-R", "GPT-RDQ")

_INSTRUCTION = (
    "Generate a summary of the opinions as a review itself with a word limit of under 100 words."
)
TEMPLATES = {
    "GPT-R": (
        "Following are the reviews for a product. " + _INSTRUCTION + " "
        "Use information from the given reviews only to generate the summary.\n"
        "reviews: {reviews}"
    ),
    "GPT-RDQ": (
        "Following are the reviews, description, and question-answers for a product. " + _INSTRUCTION + " "
        "Use information from the given reviews, description, and question-answers only to generate the summary.\n"
        "reviews: {reviews}\n"
        'description : "{description}"\n'
        "question-answers: {qa}"
    ),
}


def canonical_kind(kind: str) -> str:
    for k in KINDS:
        if kind.upper() == k:
            return k
    raise ValueError(f"unknown prompt kind {kind!r}; expected one of {KINDS}")


@dataclass(frozen=True)
class PromptTemplate:
    kind: str
    text: str

    @classmethod
    def for_kind(cls, kind: str) -> "PromptTemplate":
        kind = canonical_kind(kind)
        return cls(kind, TEMPLATES[kind])

    def render(self, reviews, description: str | None = None, qa=()) -> str:
        return self.text.format(
            reviews=json.dumps(list(reviews), ensure_ascii=False),
            description=description or "",
            qa=json.dumps(list(qa), ensure_ascii=False),
        )


def build_prompt(kind: str, p: Product) -> str:
    return PromptTemplate.for_kind(kind).render(p.review_texts, p.description, p.qa_texts)


class TransportFailure(RuntimeError):
    pass


class RateLimited(TransportFailure):
    def __init__(self, retry_after: float | None = None):
        super().__init__("rate limited")
        self.retry_after = retry_after


class Transport(Protocol):
    def complete(self, prompt: str, request_id: str) -> str: ...


class StubTransport:
    def __init__(self, fixture_dir):
        self.root = Path(fixture_dir)
        self.calls: list[str] = []
        self._lock = threading.Lock()

    def complete(self, prompt: str, request_id: str) -> str:
        with self._lock:
            self.calls.append(request_id)
        base = self.root / request_id
        err = base.parent / (base.name + ".error")
        if err.exists():
            raise TransportFailure(err.read_text(encoding="utf-8").strip() or "injected failure")
        path = base.parent / (base.name + ".txt")
        if not path.exists():
            raise TransportFailure(f"no stub response at {path}")
        return path.read_text(encoding="utf-8")


class LiveTransport:
    """OpenAI-style chat-completions endpoint; the key comes from ``MEDOS_ANNOTATION_API_KEY``."""

    def __init__(self, url: str, model: str, timeout: float):
        import httpx

        key = os.environ.get(API_KEY_ENV)
        if not key:
            raise TransportFailure(f"{API_KEY_ENV} is not set")
        self.url = url
        self.model = model
        self.client = httpx.Client(timeout=timeout, headers={"Authorization": f"Bearer {key}"})

    def complete(self, prompt: str, request_id: str) -> str:
        import httpx

        try:
            r = self.client.post(self.url, json={"model": self.model, "messages": [{"role": "user", "content": prompt}]})
        except httpx.HTTPError as exc:
            raise TransportFailure(str(exc)) from exc
        if r.status_code == 429:
            ra = r.headers.get("retry-after")
            raise RateLimited(float(ra) if ra else None)
        if r.status_code >= 400:
            raise TransportFailure(f"HTTP {r.status_code}: {r.text[:200]}")
        return r.json()["choices"][0]["message"]["content"]


@dataclass(frozen=True)
class AnnotationClientConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-3.5-turbo"
    max_retries: int = 3
    timeout: float = 60.0
    rate_limit: float = 30.0  # requests per minute
    transport: str = "stub"
    fixture_dir: str | None = None
    max_in_flight: int = 2
    backoff: float = 1.0

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.transport not in ("live", "stub"):
            raise ValueError("transport must be 'live' or 'stub'")
        if self.transport == "stub" and not self.fixture_dir:
            raise ValueError("stub transport needs a fixture directory")
        if self.rate_limit <= 0 or self.max_in_flight < 1:
            raise ValueError("rate_limit and max_in_flight must be positive")

    def make_transport(self) -> Transport:
        if self.transport == "stub":
            return StubTransport(self.fixture_dir)
        return LiveTransport(self.endpoint, self.model, self.timeout)


class RateLimiter:
    def __init__(self, per_minute: float, clock=time.monotonic, sleep=time.sleep):
        self.interval = 60.0 / per_minute
        self.clock = clock
        self.sleep = sleep
        self._next = 0.0
        self._lock = threading.Lock()

    def wait(self) -> None:
        with self._lock:
            now = self.clock()
            start = max(now, self._next)
            self._next = start + self.interval
        if start > now:
            self.sleep(start - now)


@dataclass
class AnnotationReport:
    kind: str
    annotated: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)


def _request(transport, prompt, request_id, cfg: AnnotationClientConfig, limiter: RateLimiter, sleep):
    last: Exception | None = None
    for attempt in range(1, cfg.max_retries + 2):
        limiter.wait()
        try:
            return transport.complete(prompt, request_id), attempt
        except RateLimited as exc:
            last = exc
            delay = exc.retry_after if exc.retry_after is not None else cfg.backoff * 2 ** (attempt - 1)
        except TransportFailure as exc:
            last = exc
            delay = cfg.backoff * 2 ** (attempt - 1)
        if attempt <= cfg.max_retries:
            sleep(delay)
    raise TransportFailure(f"{last} (after {cfg.max_retries} retries)")


def annotate_testset(
    corpus: Corpus,
    cfg: AnnotationClientConfig,
    kind: str,
    transport: Transport | None = None,
    provenance_log=None,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[Corpus, AnnotationReport]:
    """Add one ``kind`` annotation to every test product that lacks one.

    Products already annotated for ``kind`` are left alone, so re-running is
    a no-op. A product whose request still fails after ``max_retries`` is
    recorded in the report and the run moves on. Each successful request is
    appended to ``provenance_log`` (JSON lines) if given.
    """
    if corpus.split != "test":
        raise ValueError("annotation extends test splits only")
    kind = canonical_kind(kind)
    transport = transport or cfg.make_transport()
    limiter = RateLimiter(cfg.rate_limit, sleep=sleep)
    report = AnnotationReport(kind)
    log_lock = threading.Lock()

    def work(p: Product):
        prompt = build_prompt(kind, p)
        raw, attempts = _request(transport, prompt, f"{kind}/{p.product_id}", cfg, limiter, sleep)
        ann = Annotation(kind, normalize_ws(raw), raw, prompt, cfg.endpoint if cfg.transport == "live" else "stub", attempts)
        if provenance_log is not None:
            with log_lock, open(provenance_log, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"product_id": p.product_id, **ann.to_dict()}, ensure_ascii=False) + "\n")
        return ann

    todo = [p for p in corpus.products if p.annotation(kind) is None]
    report.skipped = [p.product_id for p in corpus.products if p.annotation(kind) is not None]
    results: dict[str, Annotation] = {}
    with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as pool:
        futures = {p.product_id: pool.submit(work, p) for p in todo}
        for pid, fut in futures.items():
            try:
                results[pid] = fut.result()
                report.annotated.append(pid)
            except TransportFailure as exc:
                logger.warning("%s: annotation failed: %s", pid, exc)
                report.failures.append({"product_id": pid, "error": str(exc)})

    products = tuple(
        replace(p, annotations=p.annotations + (results[p.product_id],)) if p.product_id in results else p
        for p in corpus.products
    )
    return Corpus(products, corpus.split, dict(corpus.provenance)), report


def as_reference_corpus(corpus: Corpus, kind: str) -> Corpus:
    """Test corpus whose gold summaries are the ``kind`` annotations."""
    kind = canonical_kind(kind)
    products = tuple(
        replace(p, gold_summaries=(p.annotation(kind).summary,))
        for p in corpus.products
        if p.annotation(kind) is not None
    )
    return Corpus(products, corpus.split, {**corpus.provenance, "references": kind})

"""Product data model and line-delimited corpus ingestion.

One product per line, JSON encoded::

    {"product_id": "B00X", "domain": "electronics",
     "reviews": [{"review_id": "r1", "text": "...", "rating": 5}, ...],
     "description": "..." | null,
     "qa": [{"question": "...", "answer": "..."}, ...],
     "summaries": ["...", ...]}

``reviews`` entries may also be bare strings, in which case ids are
assigned positionally (``r0``, ``r1``, ...).
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable

logger = logging.getLogger(__name__)

SPLITS = ("train", "dev", "test")
_WS = re.compile(r"\s+")


def normalize_ws(text: str) -> str:
    return _WS.sub(" ", text).strip()


@dataclass(frozen=True)
class Review:
    review_id: str
    text: str
    rating: int | None = None


@dataclass(frozen=True)
class QAPair:
    question: str
    answer: str

    @property
    def concatenated(self) -> str:
        return self.question + " " + self.answer


@dataclass(frozen=True)
class Annotation:
    """A generated reference summary plus the request/response that produced it."""

    kind: str
    summary: str
    raw_response: str
    prompt: str
    endpoint: str
    attempts: int

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "summary": self.summary,
            "raw_response": self.raw_response,
            "prompt": self.prompt,
            "endpoint": self.endpoint,
            "attempts": self.attempts,
        }


@dataclass(frozen=True)
class Product:
    product_id: str
    domain: str
    reviews: tuple[Review, ...]
    description: str | None = None
    qa_pairs: tuple[QAPair, ...] = ()
    gold_summaries: tuple[str, ...] | None = None
    annotations: tuple[Annotation, ...] = ()

    @property
    def review_texts(self) -> list[str]:
        return [r.text for r in self.reviews]

    @property
    def qa_texts(self) -> list[str]:
        return [q.concatenated for q in self.qa_pairs]

    def annotation(self, kind: str) -> Annotation | None:
        for a in self.annotations:
            if a.kind == kind:
                return a
        return None

    def to_record(self) -> dict:
        rec: dict[str, Any] = {
            "product_id": self.product_id,
            "domain": self.domain,
            "reviews": [
                {"review_id": r.review_id, "text": r.text, "rating": r.rating}
                for r in self.reviews
            ],
            "description": self.description,
            "qa": [{"question": q.question, "answer": q.answer} for q in self.qa_pairs],
            "summaries": list(self.gold_summaries) if self.gold_summaries is not None else None,
        }
        if self.annotations:
            rec["annotations"] = [a.to_dict() for a in self.annotations]
        return rec


@dataclass(frozen=True)
class Corpus:
    products: tuple[Product, ...]
    split: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")

    def __len__(self) -> int:
        return len(self.products)

    def __iter__(self):
        return iter(self.products)


@dataclass
class LoadReport:
    path: str
    n_lines: int = 0
    n_products: int = 0
    errors: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "n_lines": self.n_lines,
            "n_products": self.n_products,
            "errors": self.errors,
            "warnings": self.warnings,
        }


class RecordError(ValueError):
    pass


def product_from_record(rec: dict) -> Product:
    if not isinstance(rec, dict):
        raise RecordError("record is not an object")
    pid = rec.get("product_id")
    if not isinstance(pid, str) or not pid:
        raise RecordError("missing product_id")

    reviews = []
    seen = set()
    for i, r in enumerate(rec.get("reviews") or []):
        if isinstance(r, str):
            r = {"review_id": f"r{i}", "text": r}
        if not isinstance(r, dict) or not isinstance(r.get("text"), str):
            raise RecordError(f"review {i} has no text")
        text = normalize_ws(r["text"])
        if not text:
            raise RecordError(f"review {i} is empty")
        rid = str(r.get("review_id", f"r{i}"))
        if rid in seen:
            raise RecordError(f"duplicate review_id {rid!r}")
        seen.add(rid)
        rating = r.get("rating")
        if rating is not None and (not isinstance(rating, int) or not 1 <= rating <= 5):
            raise RecordError(f"review {rid!r} rating {rating!r} not in 1..5")
        reviews.append(Review(rid, text, rating))

    desc = rec.get("description")
    if desc is not None:
        if not isinstance(desc, str):
            raise RecordError("description must be a string or null")
        desc = normalize_ws(desc)

    qa = []
    for i, q in enumerate(rec.get("qa") or []):
        if not isinstance(q, dict):
            raise RecordError(f"qa {i} is not an object")
        question = normalize_ws(str(q.get("question") or ""))
        answer = normalize_ws(str(q.get("answer") or ""))
        if not question or not answer:
            raise RecordError(f"qa {i} has an empty question or answer")
        qa.append(QAPair(question, answer))

    summaries = rec.get("summaries")
    if summaries is not None:
        summaries = tuple(normalize_ws(s) for s in summaries)

    annotations = tuple(
        Annotation(**a) for a in rec.get("annotations") or []
    )
    return Product(
        product_id=pid,
        domain=str(rec.get("domain") or ""),
        reviews=tuple(reviews),
        description=desc,
        qa_pairs=tuple(qa),
        gold_summaries=summaries,
        annotations=annotations,
    )


def load_corpus(path, split: str, write_report: bool = False) -> tuple[Corpus, LoadReport]:
    """Read a line-delimited product file.

    Malformed lines are skipped and recorded in the returned report with
    their 1-based line number. A missing file raises ``FileNotFoundError``.
    When ``write_report`` is set the report is also written next to the
    input as ``<name>.load_report.json``.
    """
    path = Path(path)
    if split not in SPLITS:
        raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
    report = LoadReport(path=str(path))
    products = []
    ids = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            report.n_lines += 1
            if not line.strip():
                continue
            try:
                p = product_from_record(json.loads(line))
                if p.product_id in ids:
                    raise RecordError(f"duplicate product_id {p.product_id!r}")
            except (json.JSONDecodeError, RecordError, TypeError) as exc:
                report.errors.append({"line": lineno, "error": str(exc)})
                continue
            ids.add(p.product_id)
            products.append(p)
    report.n_products = len(products)
    if not products:
        report.warnings.append("no products loaded")
    if report.errors:
        logger.warning("%s: %d malformed line(s) skipped", path, len(report.errors))
    if write_report:
        report_path = path.with_name(path.name + ".load_report.json")
        report_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    corpus = Corpus(tuple(products), split, {"source": str(path)})
    return corpus, report


def write_corpus(corpus: Corpus | Iterable[Product], path) -> None:
    products = corpus.products if isinstance(corpus, Corpus) else corpus
    with Path(path).open("w", encoding="utf-8") as fh:
        for p in products:
            fh.write(json.dumps(p.to_record(), ensure_ascii=False, sort_keys=True) + "\n")


def validate_product(p: Product, cfg=None) -> list[str]:
    """Return invariant violations for ``p``; empty when the product is usable.

    With an SDC config, the product must also hold at least ``k + 1``
    reviews (one pseudo-summary plus ``k`` inputs) and no more QA pairs
    than ``cfg.m_cap``.
    """
    out = []
    if not p.reviews:
        out.append("empty reviews")
    ids = [r.review_id for r in p.reviews]
    if len(set(ids)) != len(ids):
        out.append("duplicate review ids")
    for r in p.reviews:
        if not normalize_ws(r.text):
            out.append(f"empty review text: {r.review_id}")
        if r.rating is not None and not 1 <= r.rating <= 5:
            out.append(f"rating out of range: {r.review_id}")
    for i, q in enumerate(p.qa_pairs):
        if not q.question or not q.answer:
            out.append(f"empty qa field: {i}")
    if cfg is not None:
        if p.reviews and len(p.reviews) < cfg.k + 1:
            out.append("insufficient reviews for SDC")
        if len(p.qa_pairs) > cfg.m_cap:
            out.append("qa pairs exceed m_cap")
    return out


def truncate_qa(p: Product, m_cap: int) -> Product:
    if m_cap < 1:
        raise ValueError("m_cap must be >= 1")
    if len(p.qa_pairs) <= m_cap:
        return p
    return replace(p, qa_pairs=p.qa_pairs[:m_cap])


def mask_sources(p: Product, description: bool = True, qa: bool = True) -> Product:
    """Drop description and/or QA, leaving the absent-source convention in place."""
    return replace(
        p,
        description=p.description if description else None,
        qa_pairs=p.qa_pairs if qa else (),
    )

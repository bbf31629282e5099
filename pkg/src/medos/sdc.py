"""Synthetic quadruplet construction from reviews, description and QA.

For each product a pseudo-summary review is picked by how close it is to
the description and the question-answers; the ``k`` reviews nearest to it
become the model input. Every ranking breaks ties by (score descending,
review index ascending), with scores compared after rounding to
``TIE_DECIMALS`` so values equal up to float noise tie deterministically.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import Product, truncate_qa, validate_product
from .embed import EmbeddingMatrix, cosine_sim

logger = logging.getLogger(__name__)

TIE_DECIMALS = 12
MODES = ("full", "reviews-only", "random")


class SdcError(ValueError):
    pass


@dataclass(frozen=True)
class SdcHyperparams:
    k: int = 8
    percentile: float = 85.0
    lambda1: float = 0.5
    lambda2: float = 0.5
    m_cap: int = 10

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        if not 0 < self.percentile <= 100:
            raise ValueError("percentile must lie in (0, 100]")
        if self.lambda1 < 0 or self.lambda2 < 0 or self.lambda1 + self.lambda2 <= 0:
            raise ValueError("lambdas must be non-negative with a positive sum")
        if self.m_cap < 1:
            raise ValueError("m_cap must be positive")


@dataclass(frozen=True)
class SimilarityMatrix:
    values: np.ndarray
    review_keys: tuple[str, ...]


@dataclass(frozen=True)
class ScoreVector:
    values: np.ndarray
    kind: str

    @property
    def absent(self) -> bool:
        return self.kind.endswith("-absent")


@dataclass(frozen=True)
class SyntheticQuadruplet:
    product_id: str
    input_reviews: tuple[str, ...]
    description: str | None
    qa: tuple[str, ...]
    pseudo_summary: str
    ss_score: float
    input_review_sims: tuple[float, ...]
    pseudo_summary_id: str = ""
    input_review_ids: tuple[str, ...] = ()
    mode: str = "full"

    def to_record(self) -> dict:
        return {
            "product_id": self.product_id,
            "mode": self.mode,
            "pseudo_summary_id": self.pseudo_summary_id,
            "pseudo_summary": self.pseudo_summary,
            "input_review_ids": list(self.input_review_ids),
            "input_reviews": list(self.input_reviews),
            "input_review_sims": [float(s) for s in self.input_review_sims],
            "description": self.description,
            "qa": list(self.qa),
            "ss_score": float(self.ss_score),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "SyntheticQuadruplet":
        return cls(
            product_id=rec["product_id"],
            input_reviews=tuple(rec["input_reviews"]),
            description=rec.get("description"),
            qa=tuple(rec.get("qa") or ()),
            pseudo_summary=rec["pseudo_summary"],
            ss_score=float(rec.get("ss_score", 0.0)),
            input_review_sims=tuple(rec.get("input_review_sims") or ()),
            pseudo_summary_id=rec.get("pseudo_summary_id", ""),
            input_review_ids=tuple(rec.get("input_review_ids") or ()),
            mode=rec.get("mode", "full"),
        )


def _rank_key(values: np.ndarray):
    rounded = np.round(np.asarray(values, dtype=np.float64), TIE_DECIMALS)
    return lambda i: (-rounded[i], i)


def review_similarity_matrix(e_r: EmbeddingMatrix) -> SimilarityMatrix:
    if e_r.rows < 2:
        raise SdcError("need at least 2 reviews to build a similarity matrix")
    sim = cosine_sim(e_r, e_r)
    sim = 0.5 * (sim + sim.T)
    np.fill_diagonal(sim, 0.0)
    return SimilarityMatrix(sim, e_r.row_keys)


def description_scores(e_r: EmbeddingMatrix, e_d: EmbeddingMatrix | None) -> ScoreVector:
    if e_d is None:
        return ScoreVector(np.zeros(e_r.rows), "ds-absent")
    if e_d.rows != 1:
        raise SdcError("description embedding must have exactly one row")
    return ScoreVector(cosine_sim(e_r, e_d)[:, 0], "ds")


def qa_scores(e_r: EmbeddingMatrix, e_q_list: Sequence[EmbeddingMatrix]) -> ScoreVector:
    """Per-review mean cosine similarity over the QA pairs."""
    if not e_q_list:
        return ScoreVector(np.zeros(e_r.rows), "qs-absent")
    acc = np.zeros(e_r.rows)
    for e_q in e_q_list:
        if e_q.rows != 1:
            raise SdcError("each QA embedding must have exactly one row")
        acc += cosine_sim(e_r, e_q)[:, 0]
    return ScoreVector(acc / len(e_q_list), "qs")


def combined_scores(ds: ScoreVector, qs: ScoreVector, lambda1: float, lambda2: float) -> ScoreVector:
    if ds.values.shape != qs.values.shape:
        raise SdcError("ds and qs differ in length")
    return ScoreVector(lambda1 * ds.values + lambda2 * qs.values, "ss")


def nearest_rank_threshold(values: np.ndarray, percentile: float) -> float:
    ordered = np.sort(np.round(np.asarray(values, dtype=np.float64), TIE_DECIMALS))
    rank = max(1, math.ceil(percentile / 100.0 * len(ordered)))
    return float(ordered[rank - 1])


def select_pseudo_summaries(ss: ScoreVector | np.ndarray, percentile: float) -> list[int]:
    values = ss.values if isinstance(ss, ScoreVector) else np.asarray(ss, dtype=np.float64)
    if len(values) < 2:
        raise SdcError("need at least 2 reviews")
    threshold = nearest_rank_threshold(values, percentile)
    rounded = np.round(values, TIE_DECIMALS)
    chosen = [i for i in range(len(values)) if rounded[i] >= threshold]
    return sorted(chosen, key=_rank_key(values))


def select_input_reviews(sim: SimilarityMatrix | np.ndarray, r_index: int, k: int) -> list[int]:
    values = sim.values if isinstance(sim, SimilarityMatrix) else np.asarray(sim)
    n = values.shape[0]
    if n < k + 1:
        raise SdcError(f"need at least k+1={k + 1} reviews, have {n}")
    if not 0 <= r_index < n:
        raise SdcError(f"r_index {r_index} out of range")
    row = values[r_index]
    candidates = [j for j in range(n) if j != r_index]
    return sorted(candidates, key=_rank_key(row))[:k]


@dataclass(frozen=True)
class ProductEmbeddings:
    reviews: EmbeddingMatrix
    description: EmbeddingMatrix | None = None
    qa: tuple[EmbeddingMatrix, ...] = ()

    def to_record(self) -> dict:
        return {
            "reviews": self.reviews.values.tolist(),
            "review_keys": list(self.reviews.row_keys),
            "description": None if self.description is None else self.description.values[0].tolist(),
            "qa": [q.values[0].tolist() for q in self.qa],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ProductEmbeddings":
        desc = rec.get("description")
        return cls(
            EmbeddingMatrix(np.asarray(rec["reviews"]), tuple(rec["review_keys"])),
            None if desc is None else EmbeddingMatrix(np.asarray(desc)[None, :], ("description",)),
            tuple(EmbeddingMatrix(np.asarray(q)[None, :], (f"qa{i}",)) for i, q in enumerate(rec.get("qa") or [])),
        )


def embed_product(embed_fn: Callable[[list[str], list[str]], EmbeddingMatrix], p: Product) -> ProductEmbeddings:
    """Embed all sources of ``p`` with one call to ``embed_fn(texts, keys)``."""
    texts = list(p.review_texts)
    keys = [f"{p.product_id}/review/{r.review_id}" for r in p.reviews]
    if p.description is not None:
        texts.append(p.description)
        keys.append(f"{p.product_id}/description")
    for i, q in enumerate(p.qa_texts):
        texts.append(q)
        keys.append(f"{p.product_id}/qa/{i}")
    m = embed_fn(texts, keys)
    n = len(p.reviews)
    vals = m.values
    reviews = EmbeddingMatrix(vals[:n], tuple(keys[:n]))
    pos = n
    desc = None
    if p.description is not None:
        desc = EmbeddingMatrix(vals[pos : pos + 1], (keys[pos],))
        pos += 1
    qa = tuple(EmbeddingMatrix(vals[i : i + 1], (keys[i],)) for i in range(pos, len(keys)))
    return ProductEmbeddings(reviews, desc, qa)


def product_rng(seed: int, product_id: str) -> np.random.Generator:
    digest = hashlib.sha256(product_id.encode("utf-8")).digest()
    return np.random.default_rng([seed, int.from_bytes(digest[:8], "little")])


def _quadruplet(p: Product, sim: SimilarityMatrix, r: int, k: int, score: float, qa: tuple[str, ...], mode: str):
    inputs = select_input_reviews(sim, r, k)
    return SyntheticQuadruplet(
        product_id=p.product_id,
        input_reviews=tuple(p.reviews[j].text for j in inputs),
        description=p.description,
        qa=qa,
        pseudo_summary=p.reviews[r].text,
        ss_score=float(score),
        input_review_sims=tuple(float(sim.values[r, j]) for j in inputs),
        pseudo_summary_id=p.reviews[r].review_id,
        input_review_ids=tuple(p.reviews[j].review_id for j in inputs),
        mode=mode,
    )


def build_quadruplets(
    p: Product,
    embeddings: ProductEmbeddings,
    hp: SdcHyperparams,
    mode: str = "full",
    seed: int = 0,
) -> list[SyntheticQuadruplet]:
    """Build the synthetic quadruplets of one product.

    ``mode`` selects how pseudo-summaries are chosen: ``full`` scores each
    review against description and QA; ``reviews-only`` uses the row mean
    of the review similarity matrix; ``random`` draws as many reviews as
    the percentile cut would keep on distinct scores, uniformly without
    replacement from a generator seeded by ``(seed, product_id)``.

    In ``full`` mode a product with neither description nor QA yields no
    quadruplets.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    problems = validate_product(p, hp)
    if problems:
        raise SdcError(f"{p.product_id}: {'; '.join(problems)}")
    if embeddings.reviews.rows != len(p.reviews):
        raise SdcError("review embeddings do not match the product's reviews")
    qa = tuple(p.qa_texts)
    sim = review_similarity_matrix(embeddings.reviews)

    if mode == "full":
        if p.description is None and not p.qa_pairs:
            logger.info("%s: skipped, no description and no QA", p.product_id)
            return []
        ds = description_scores(embeddings.reviews, embeddings.description)
        qs = qa_scores(embeddings.reviews, embeddings.qa)
        ss = combined_scores(ds, qs, hp.lambda1, hp.lambda2)
        picked = select_pseudo_summaries(ss, hp.percentile)
        scores = ss.values
    elif mode == "reviews-only":
        scores = sim.values.mean(axis=1)
        picked = select_pseudo_summaries(scores, hp.percentile)
    else:
        n = len(p.reviews)
        count = n - max(1, math.ceil(hp.percentile / 100.0 * n)) + 1
        picked = [int(i) for i in product_rng(seed, p.product_id).choice(n, size=count, replace=False)]
        scores = np.zeros(n)
    return [_quadruplet(p, sim, r, hp.k, scores[r], qa, mode) for r in picked]


@dataclass
class SdcReport:
    n_products: int = 0
    n_quadruplets: int = 0
    skipped: list[dict] = field(default_factory=list)


def build_corpus_quadruplets(
    products: Iterable[Product],
    embeddings: dict[str, ProductEmbeddings],
    hp: SdcHyperparams,
    mode: str = "full",
    seed: int = 0,
) -> tuple[list[SyntheticQuadruplet], SdcReport]:
    """Run SDC over many products; output is ordered by product id, then score.

    QA lists longer than ``hp.m_cap`` are cut to their first ``m_cap`` pairs
    (with the matching embeddings) before scoring.
    """
    report = SdcReport()
    out = []
    for p in sorted(products, key=lambda p: p.product_id):
        report.n_products += 1
        p = truncate_qa(p, hp.m_cap)
        problems = validate_product(p, hp)
        if problems:
            report.skipped.append({"product_id": p.product_id, "reason": "; ".join(problems)})
            continue
        if mode == "full" and p.description is None and not p.qa_pairs:
            report.skipped.append({"product_id": p.product_id, "reason": "no description and no QA"})
            continue
        if p.product_id not in embeddings:
            raise SdcError(f"{p.product_id}: no embeddings")
        emb = embeddings[p.product_id]
        emb = replace(emb, qa=emb.qa[: hp.m_cap])
        out.extend(build_quadruplets(p, emb, hp, mode, seed))
    report.n_quadruplets = len(out)
    return out, report


def write_quadruplets(quads: Iterable[SyntheticQuadruplet], path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for q in quads:
            fh.write(json.dumps(q.to_record(), ensure_ascii=False, sort_keys=True) + "\n")


def read_quadruplets(path) -> list[SyntheticQuadruplet]:
    with Path(path).open(encoding="utf-8") as fh:
        return [SyntheticQuadruplet.from_record(json.loads(line)) for line in fh if line.strip()]

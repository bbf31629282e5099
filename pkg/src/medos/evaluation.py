"""ROUGE scoring, significance testing, ablations and human-rating statistics.

Scores are kept in [0, 1]; tables render them multiplied by 100.
ROUGE normalisation lowercases and splits on non-alphanumeric characters,
with no stemming and no stopword removal.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .corpus import Product, mask_sources

VARIANTS = ("R1", "R2", "RL")
_SPLIT = re.compile(r"[^a-z0-9]+")


def rouge_tokens(text: str) -> list[str]:
    return [t for t in _SPLIT.split(text.lower()) if t]


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float
    variant: str

    @classmethod
    def from_counts(cls, overlap: int, n_cand: int, n_ref: int, variant: str) -> "RougeScore":
        if n_cand == 0 or n_ref == 0:
            return cls(0.0, 0.0, 0.0, variant)
        p = overlap / n_cand
        r = overlap / n_ref
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f, variant)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: str, reference: str, n: int) -> RougeScore:
    if n < 1:
        raise ValueError("n must be >= 1")
    cand = _ngrams(rouge_tokens(candidate), n)
    ref = _ngrams(rouge_tokens(reference), n)
    overlap = sum((cand & ref).values())
    return RougeScore.from_counts(overlap, sum(cand.values()), sum(ref.values()), f"R{n}")


def lcs_length(a: Sequence, b: Sequence) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> RougeScore:
    cand = rouge_tokens(candidate)
    ref = rouge_tokens(reference)
    return RougeScore.from_counts(lcs_length(cand, ref), len(cand), len(ref), "RL")


def score(candidate: str, reference: str, variant: str) -> RougeScore:
    if variant == "R1":
        return rouge_n(candidate, reference, 1)
    if variant == "R2":
        return rouge_n(candidate, reference, 2)
    if variant == "RL":
        return rouge_l(candidate, reference)
    raise ValueError(f"unknown ROUGE variant {variant!r}")


@dataclass
class EvalReport:
    """Per-product and corpus-level ROUGE F1 (plus P/R) for one or more variants."""

    per_product: dict[str, dict[str, dict[str, float]]] = field(default_factory=dict)
    corpus: dict[str, dict[str, float]] = field(default_factory=dict)
    reference_counts: dict[str, int] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def f1(self, variant: str) -> float:
        return self.corpus[variant]["f1"]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "corpus": self.corpus,
            "per_product": self.per_product,
            "reference_counts": self.reference_counts,
            "skipped": self.skipped,
        }

    def records(self) -> list[dict]:
        return [
            {"product_id": pid, "references": self.reference_counts[pid], **scores}
            for pid, scores in self.per_product.items()
        ]

    def table(self) -> str:
        lines = ["metric     P       R       F1"]
        for v, s in self.corpus.items():
            lines.append(f"{v:<6} {100 * s['precision']:7.2f} {100 * s['recall']:7.2f} {100 * s['f1']:7.2f}")
        return "\n".join(lines)


def _aggregate(scores: list[RougeScore], multi_ref: str, variant: str) -> RougeScore:
    if multi_ref == "max":
        return max(scores, key=lambda s: s.f1)
    if multi_ref == "mean":
        return RougeScore(
            float(np.mean([s.precision for s in scores])),
            float(np.mean([s.recall for s in scores])),
            float(np.mean([s.f1 for s in scores])),
            variant,
        )
    raise ValueError("multi_ref must be 'max' or 'mean'")


def corpus_rouge(
    summaries: Mapping[str, str],
    products: Iterable[Product],
    variants: str | Sequence[str] = VARIANTS,
    multi_ref: str = "max",
) -> EvalReport:
    """Score ``summaries`` (product id -> text) against each product's gold references.

    Per product, references are combined by ``max`` (best-matching
    reference by F1) or ``mean``; the corpus score is the mean over products.
    Products without a summary or without references are listed in
    ``skipped``.
    """
    if isinstance(variants, str):
        variants = [variants]
    report = EvalReport(config={"variants": list(variants), "multi_ref": multi_ref})
    for p in products:
        if p.product_id not in summaries:
            continue
        refs = list(p.gold_summaries or ())
        if not refs:
            report.skipped.append(p.product_id)
            continue
        cand = summaries[p.product_id]
        report.reference_counts[p.product_id] = len(refs)
        report.per_product[p.product_id] = {}
        for v in variants:
            s = _aggregate([score(cand, r, v) for r in refs], multi_ref, v)
            report.per_product[p.product_id][v] = {"precision": s.precision, "recall": s.recall, "f1": s.f1}
    for v in variants:
        rows = [scores[v] for scores in report.per_product.values()]
        report.corpus[v] = {
            k: (float(np.mean([r[k] for r in rows])) if rows else 0.0) for k in ("precision", "recall", "f1")
        }
    return report


# ---------------------------------------------------------------------------
# significance


@dataclass(frozen=True)
class TTestResult:
    t: float | None
    p: float | None
    df: int
    degenerate: str | None = None


def paired_t_test(scores_a: Sequence[float], scores_b: Sequence[float]) -> TTestResult:
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("score lists must be 1-D and of equal length")
    n = len(a)
    if n < 2:
        raise ValueError("need at least 2 paired scores")
    d = a - b
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        return TTestResult(None, None, n - 1, "degenerate: zero variance")
    t = float(np.mean(d)) / (sd / math.sqrt(n))
    p = float(2 * stats.t.sf(abs(t), n - 1))
    return TTestResult(t, p, n - 1)


# ---------------------------------------------------------------------------
# ablation and source coverage

ABLATION_ROWS = (
    ("w. Reviews + Description + QA", True, True),
    ("w. Reviews + Description", True, False),
    ("w. Reviews + QA", False, True),
    ("w. Reviews", False, False),
)


@dataclass
class AblationTable:
    rows: list[tuple[str, dict[str, float]]]
    summaries: dict[str, dict[str, str]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"rows": [{"config": label, **scores} for label, scores in self.rows]}

    def render(self) -> str:
        width = max(len(label) for label, _ in self.rows)
        out = [f"{'':<{width}}  " + "  ".join(f"{v:>6}" for v in VARIANTS)]
        for label, s in self.rows:
            out.append(f"{label:<{width}}  " + "  ".join(f"{100 * s[v]:6.2f}" for v in VARIANTS))
        return "\n".join(out)


def run_ablation(model, tok, products: Sequence[Product], gen_cfg=None, multi_ref: str = "max") -> AblationTable:
    """Summarise under the four source configurations and score each with ROUGE F1.

    Dropped sources are replaced by the absent-source convention, so one
    trained checkpoint serves every row.
    """
    from .generate import summarize_product

    products = list(products)
    if not any(p.description is not None or p.qa_pairs for p in products):
        raise ValueError("no product has a description or QA to mask")
    rows = []
    all_summaries = {}
    for label, keep_d, keep_q in ABLATION_ROWS:
        summaries = {}
        for p in products:
            text, _ = summarize_product(model, tok, mask_sources(p, keep_d, keep_q), gen_cfg)
            summaries[p.product_id] = text
        report = corpus_rouge(summaries, products, VARIANTS, multi_ref)
        rows.append((label, {v: report.f1(v) for v in VARIANTS}))
        all_summaries[label] = summaries
    return AblationTable(rows, all_summaries)


@dataclass
class SourceOverlap:
    """Mean ROUGE-1 of summaries against each input source.

    A source column is ``None`` when no product had that source.
    """

    means: dict[str, dict[str, float] | None]
    counts: dict[str, int]

    def to_dict(self) -> dict:
        return {"means": self.means, "counts": self.counts}


def source_overlap(summaries: Mapping[str, str], products: Iterable[Product]) -> SourceOverlap:
    acc: dict[str, list[RougeScore]] = {"reviews": [], "description": [], "qa": []}
    for p in products:
        s = summaries[p.product_id]
        acc["reviews"].append(rouge_n(s, " ".join(p.review_texts), 1))
        if p.description is not None:
            acc["description"].append(rouge_n(s, p.description, 1))
        if p.qa_pairs:
            acc["qa"].append(rouge_n(s, " ".join(p.qa_texts), 1))
    means: dict[str, dict[str, float] | None] = {}
    for src, scores in acc.items():
        means[src] = (
            {
                "precision": float(np.mean([x.precision for x in scores])),
                "recall": float(np.mean([x.recall for x in scores])),
                "f1": float(np.mean([x.f1 for x in scores])),
            }
            if scores
            else None
        )
    return SourceOverlap(means, {k: len(v) for k, v in acc.items()})


# ---------------------------------------------------------------------------
# human evaluation aggregates


@dataclass(frozen=True)
class Judgment:
    models: tuple[str, ...]
    best: str
    worst: str


def best_worst_scores(judgments: Iterable[Judgment | Mapping]) -> tuple[dict[str, float], list[dict]]:
    """Best-worst scaling: +1 for best, -1 for worst, 0 otherwise, averaged.

    Each model's score is ``(#best - #worst) / #judgments it appeared in``.
    Judgments naming the same model best and worst, or naming a model
    outside their set, are rejected and returned in the second element.
    """
    best: Counter = Counter()
    worst: Counter = Counter()
    seen: Counter = Counter()
    rejected = []
    for i, j in enumerate(judgments):
        if isinstance(j, Mapping):
            j = Judgment(tuple(j["models"]), j["best"], j["worst"])
        if len(set(j.models)) < 2:
            rejected.append({"index": i, "reason": "fewer than 2 models"})
            continue
        if j.best == j.worst:
            rejected.append({"index": i, "reason": "best equals worst"})
            continue
        if j.best not in j.models or j.worst not in j.models:
            rejected.append({"index": i, "reason": "best/worst not among judged models"})
            continue
        seen.update(set(j.models))
        best[j.best] += 1
        worst[j.worst] += 1
    scores = {m: (best[m] - worst[m]) / seen[m] for m in sorted(seen)}
    return scores, rejected


@dataclass(frozen=True)
class KappaResult:
    kappa: float | None
    p_bar: float
    p_e: float
    degenerate: str | None = None

    def __float__(self) -> float:
        if self.kappa is None:
            raise ValueError(self.degenerate)
        return self.kappa


def category_counts(ratings: Sequence[Sequence[Hashable]], categories: Sequence[Hashable] | None = None) -> np.ndarray:
    """Items x raters labels -> items x categories count table."""
    if categories is None:
        categories = sorted({c for row in ratings for c in row})
    index = {c: i for i, c in enumerate(categories)}
    counts = np.zeros((len(ratings), len(categories)), dtype=np.int64)
    for i, row in enumerate(ratings):
        for c in row:
            if c not in index:
                raise ValueError(f"rating {c!r} outside the declared categories")
            counts[i, index[c]] += 1
    return counts


def fleiss_kappa_counts(counts) -> KappaResult:
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 2 or counts.shape[0] < 1:
        raise ValueError("counts must be an items x categories table")
    n = counts.sum(axis=1)
    if not np.all(n == n[0]) or n[0] < 2:
        raise ValueError("every item needs the same number (>= 2) of raters")
    n = n[0]
    N = counts.shape[0]
    p_i = ((counts**2).sum(axis=1) - n) / (n * (n - 1))
    p_bar = float(p_i.mean())
    p_j = counts.sum(axis=0) / (N * n)
    p_e = float((p_j**2).sum())
    if math.isclose(p_e, 1.0, rel_tol=0.0, abs_tol=1e-15):
        return KappaResult(None, p_bar, p_e, "degenerate: no variance")
    return KappaResult((p_bar - p_e) / (1.0 - p_e), p_bar, p_e)


def fleiss_kappa(ratings: Sequence[Sequence[Hashable]], categories: Sequence[Hashable] | None = None) -> KappaResult:
    """Fleiss' kappa for an items x raters matrix of categorical ratings."""
    rows = [list(r) for r in ratings]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ValueError("every item must be rated by the same number of raters")
    return fleiss_kappa_counts(category_counts(rows, categories))


# ---------------------------------------------------------------------------
# prediction files


def read_predictions(path) -> dict[str, str]:
    out = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                out[rec["product_id"]] = rec["summary"]
    return out

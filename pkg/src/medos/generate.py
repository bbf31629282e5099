"""Beam-search decoding with an n-gram blocking constraint."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch

from .corpus import Product
from .model import Batch, EncoderStates, TokenizedSources, collate, decode_logprobs, memory, tokenize_sources
from .tokenizer import Tokenizer

# 100 words of output at roughly 1.3 pieces per word
DEFAULT_MAX_LENGTH = 130


@dataclass(frozen=True)
class GenerationConfig:
    """Decoding settings.

    ``length_penalty`` multiplies a hypothesis' probability by its value once
    per emitted token; 1.0 leaves raw log-probabilities untouched and larger
    values favour longer outputs. ``max_length`` counts emitted tokens
    including the end sentinel. Padding, start, separator and unknown
    tokens are never emitted.
    """

    beam_size: int = 5
    no_repeat_ngram: int = 3
    max_length: int = DEFAULT_MAX_LENGTH
    min_length: int = 0
    length_penalty: float = 1.0

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.no_repeat_ngram < 0:
            raise ValueError("no_repeat_ngram must be >= 0")
        if self.max_length < 1 or self.min_length < 0:
            raise ValueError("invalid length bounds")
        if self.length_penalty <= 0:
            raise ValueError("length_penalty must be positive")


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple[int, ...]  # emitted tokens, end sentinel included when finished
    logprob: float
    score: float
    truncated: bool = False


def banned_ngram_tokens(generated: list[int], n: int) -> set[int]:
    """Tokens that would complete an n-gram already present in ``generated``."""
    if n <= 0 or len(generated) + 1 < n:
        return set()
    if n == 1:
        return set(generated)
    prefix = tuple(generated[len(generated) - n + 1 :])
    return {
        generated[i + n - 1]
        for i in range(len(generated) - n + 1)
        if tuple(generated[i : i + n - 1]) == prefix
    }


def has_repeated_ngram(tokens, n: int) -> bool:
    if n <= 0:
        return False
    grams = [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]
    return len(grams) != len(set(grams))


def _step_logprobs(model, mem: EncoderStates, prefixes: list[list[int]]) -> torch.Tensor:
    ids = torch.tensor(prefixes, dtype=torch.long)
    with torch.no_grad():
        return decode_logprobs(model, mem, ids)[:, -1, :].to(torch.float64)


def _mask_step(logp: torch.Tensor, generated: list[list[int]], tok: Tokenizer, cfg: GenerationConfig) -> torch.Tensor:
    logp = logp.clone()
    logp[:, [tok.pad_id, tok.bos_id, tok.sep_id, tok.unk_id]] = -math.inf
    for i, gen in enumerate(generated):
        if len(gen) < cfg.min_length:
            logp[i, tok.eos_id] = -math.inf
        for t in banned_ngram_tokens(gen, cfg.no_repeat_ngram):
            logp[i, t] = -math.inf
    return logp


def _prepare(model, tok, sources) -> EncoderStates:
    batch = sources if isinstance(sources, Batch) else collate(tok, model.cfg, [sources])
    with torch.no_grad():
        return memory(model, batch)


def greedy_search(model, tok: Tokenizer, sources: TokenizedSources | Batch, cfg: GenerationConfig) -> Hypothesis:
    mem = _prepare(model, tok, sources)
    max_len = min(cfg.max_length, model.cfg.max_tgt_len)
    gen: list[int] = []
    total = 0.0
    for _ in range(max_len):
        logp = _mask_step(_step_logprobs(model, mem, [[tok.bos_id] + gen]), [gen], tok, cfg)[0]
        t = int(torch.argmax(logp))
        if not math.isfinite(float(logp[t])):
            break
        total += float(logp[t])
        gen.append(t)
        if t == tok.eos_id:
            return Hypothesis(tuple(gen), total, total + len(gen) * math.log(cfg.length_penalty))
    return Hypothesis(tuple(gen), total, total + len(gen) * math.log(cfg.length_penalty), truncated=True)


def beam_search(model, tok: Tokenizer, sources: TokenizedSources | Batch, cfg: GenerationConfig) -> Hypothesis:
    """Return the best finished hypothesis under length-penalised log-probability.

    At each step the candidates (every live hypothesis extended by every
    allowed token) are ranked by (score desc, hypothesis rank asc, token id
    asc). End-sentinel candidates ranked within the top ``beam_size`` are
    moved to the finished pool; the best ``beam_size`` other candidates stay
    live. Search stops once no live hypothesis can overtake the best finished
    one, or after ``max_length`` tokens, in which case the best live
    hypothesis is returned with ``truncated=True`` if nothing finished.
    """
    mem = _prepare(model, tok, sources)
    max_len = min(cfg.max_length, model.cfg.max_tgt_len)
    bonus = math.log(cfg.length_penalty)
    alive: list[tuple[list[int], float]] = [([], 0.0)]
    finished: list[Hypothesis] = []

    for step in range(max_len):
        logp = _step_logprobs(model, mem, [[tok.bos_id] + g for g, _ in alive])
        logp = _mask_step(logp, [g for g, _ in alive], tok, cfg)
        cand = []
        for i, (gen, lp) in enumerate(alive):
            row = logp[i].tolist()
            for t, v in enumerate(row):
                if v != -math.inf:
                    cand.append((lp + v, i, t))
        if not cand:
            break
        cand.sort(key=lambda c: (-c[0], c[1], c[2]))
        new_alive = []
        for rank, (lp, i, t) in enumerate(cand):
            gen = alive[i][0] + [t]
            if t == tok.eos_id:
                if rank < cfg.beam_size:
                    finished.append(Hypothesis(tuple(gen), lp, lp + bonus * len(gen)))
            elif len(new_alive) < cfg.beam_size:
                new_alive.append((gen, lp))
            if len(new_alive) >= cfg.beam_size and rank >= cfg.beam_size - 1:
                break
        alive = new_alive
        if not alive:
            break
        if finished:
            best = max(h.score for h in finished)
            remaining = max_len - step - 1
            bound = max(lp + bonus * (len(g) + remaining if bonus > 0 else len(g)) for g, lp in alive)
            if best >= bound:
                break

    if finished:
        # stable max keeps the earliest-found hypothesis on exact ties
        return max(finished, key=lambda h: h.score)
    gen, lp = max(alive, key=lambda a: a[1]) if alive else ([], 0.0)
    return Hypothesis(tuple(gen), lp, lp + bonus * len(gen), truncated=True)


def product_sources(tok: Tokenizer, model_cfg, p: Product) -> TokenizedSources:
    return tokenize_sources(tok, model_cfg, p.review_texts, p.description, p.qa_texts)


def summarize_product(model, tok: Tokenizer, p: Product, cfg: GenerationConfig | None = None) -> tuple[str, Hypothesis]:
    """Generate a summary from all of ``p``'s reviews, description and QA."""
    if not p.reviews:
        raise ValueError(f"{p.product_id}: no reviews to summarise")
    cfg = cfg or GenerationConfig()
    hyp = beam_search(model, tok, product_sources(tok, model.cfg, p), cfg)
    return tok.decode(hyp.tokens).strip(), hyp

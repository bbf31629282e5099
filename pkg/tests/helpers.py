"""Small builders shared by the test modules."""

import numpy as np
import torch

from medos.corpus import Product, QAPair, Review
from medos.generate import has_repeated_ngram
from medos.model import ModelConfig, build_model, collate, tokenize_sources
from medos.tokenizer import SPECIALS, Tokenizer

WORDS = "good bad battery screen fast slow light heavy cheap solid loud quiet warm bright soft".split()


def word_tokenizer(words=WORDS) -> Tokenizer:
    return Tokenizer(list(SPECIALS) + [" " + w for w in words] + list(words))


def random_text(rng, lo=1, hi=6, words=WORDS) -> str:
    return " ".join(rng.choice(words, size=int(rng.integers(lo, hi + 1))))


def tiny_model(vocab_size, seed=0, d=16, layers=1, heads=2, dtype=torch.float64, random_gates=False, **kw):
    cfg = ModelConfig(
        vocab_size=vocab_size, d_model=d, num_layers=layers, num_heads=heads,
        max_review_len=kw.pop("max_review_len", 48), max_desc_len=kw.pop("max_desc_len", 16),
        max_qa_len=kw.pop("max_qa_len", 32), max_tgt_len=kw.pop("max_tgt_len", 16), **kw,
    )
    model = build_model(cfg, seed=seed, dtype=dtype)
    if random_gates:
        g = torch.Generator().manual_seed(seed + 1000)
        with torch.no_grad():
            for w in (model.gate_alpha, model.gate_beta):
                w.copy_(torch.randn(w.shape, generator=g, dtype=dtype) * 0.5)
    return model


def random_batch(tok, cfg, rng, size=3, with_d=None, with_q=None):
    items = []
    for _ in range(size):
        d = rng.random() < 0.7 if with_d is None else with_d
        q = rng.random() < 0.7 if with_q is None else with_q
        items.append(tokenize_sources(
            tok, cfg,
            [random_text(rng) for _ in range(int(rng.integers(1, 4)))],
            random_text(rng) if d else None,
            [random_text(rng) for _ in range(int(rng.integers(1, 3)))] if q else [],
            random_text(rng, 2, 8),
        ))
    return collate(tok, cfg, items)


def product_from_quad(q) -> Product:
    qa = []
    for text in q.qa:
        question, answer = text.split("? ", 1)
        qa.append(QAPair(question + "?", answer))
    reviews = tuple(Review(rid, text, None) for rid, text in zip(q.input_review_ids, q.input_reviews))
    return Product(q.product_id, "", reviews, q.description, tuple(qa), (q.pseudo_summary,))


def assert_no_repeated_trigram(tokens):
    assert not has_repeated_ngram(list(tokens), 3), f"repeated trigram in {list(tokens)}"


def as_rng(seed):
    return np.random.default_rng(seed)

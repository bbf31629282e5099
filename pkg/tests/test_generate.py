import numpy as np
import pytest
import torch
from helpers import assert_no_repeated_trigram, tiny_model, word_tokenizer

from medos.corpus import Product, QAPair, Review
from medos.generate import (
    DEFAULT_MAX_LENGTH,
    GenerationConfig,
    banned_ngram_tokens,
    beam_search,
    greedy_search,
    has_repeated_ngram,
    summarize_product,
)
from medos.model import tokenize_sources

TOK = word_tokenizer()
WORDS = [w for w in TOK.vocab if w.isalpha()]


def _product(seed, description=True):
    rng = np.random.default_rng(seed)
    words = lambda n: " ".join(rng.choice(WORDS, n))  # noqa: E731
    return Product(
        product_id=f"G{seed}",
        domain="toys",
        reviews=tuple(Review(f"r{i}", words(5)) for i in range(3)),
        description=words(6) if description else None,
        qa_pairs=(QAPair(words(3), words(3)),),
    )


def _sharp_model(seed, **kw):
    model = tiny_model(len(TOK), seed=seed, random_gates=True, **kw)
    with torch.no_grad():
        model.embed.weight.mul_(4)
    return model


def test_config_validation():
    assert GenerationConfig().beam_size == 5 and GenerationConfig().no_repeat_ngram == 3
    assert GenerationConfig().max_length == DEFAULT_MAX_LENGTH
    for bad in ({"beam_size": 0}, {"no_repeat_ngram": -1}, {"max_length": 0}, {"length_penalty": 0}):
        with pytest.raises(ValueError):
            GenerationConfig(**bad)


def test_banned_ngram_tokens():
    assert banned_ngram_tokens([5, 6, 7, 5, 6], 3) == {7}
    assert banned_ngram_tokens([5, 6, 7], 3) == set()
    assert banned_ngram_tokens([5, 6], 1) == {5, 6}
    assert banned_ngram_tokens([5, 5, 5], 0) == set()
    assert banned_ngram_tokens([5], 3) == set()
    assert has_repeated_ngram([1, 2, 3, 1, 2, 3], 3) and not has_repeated_ngram([1, 2, 3, 1, 2, 4], 3)


def test_summaries_are_deterministic():
    model = _sharp_model(0)
    p = _product(0)
    cfg = GenerationConfig(beam_size=3, max_length=16)
    assert summarize_product(model, TOK, p, cfg) == summarize_product(model, TOK, p, cfg)


def test_constraints_hold_with_and_without_description():
    cfg = GenerationConfig(beam_size=4, max_length=16)
    for seed in range(6):
        model = _sharp_model(seed)
        for desc in (True, False):
            _, hyp = summarize_product(model, TOK, _product(seed, desc), cfg)
            assert_no_repeated_trigram(hyp.tokens)
            assert not {TOK.pad_id, TOK.bos_id, TOK.sep_id, TOK.unk_id} & set(hyp.tokens)
            assert len(hyp.tokens) <= 16


def test_no_reviews_rejected():
    p = Product(product_id="X", domain="toys", reviews=(), description="a")
    with pytest.raises(ValueError):
        summarize_product(_sharp_model(0), TOK, p)


def test_truncation_flag_and_min_length():
    model = _sharp_model(1)
    src = tokenize_sources(TOK, model.cfg, ["good battery"], None, [])
    hyp = beam_search(model, TOK, src, GenerationConfig(beam_size=2, max_length=3, min_length=3))
    assert hyp.truncated and len(hyp.tokens) == 3 and TOK.eos_id not in hyp.tokens
    ok = beam_search(model, TOK, src, GenerationConfig(beam_size=2, max_length=16, min_length=4))
    if not ok.truncated:
        assert ok.tokens[-1] == TOK.eos_id and len(ok.tokens) >= 5


def test_returned_score_is_logprob_when_no_length_penalty():
    model = _sharp_model(2)
    src = tokenize_sources(TOK, model.cfg, ["bad screen"], "light", [])
    hyp = beam_search(model, TOK, src, GenerationConfig(max_length=12))
    assert hyp.score == hyp.logprob
    longer = beam_search(model, TOK, src, GenerationConfig(max_length=12, length_penalty=50.0))
    assert len(longer.tokens) >= len(hyp.tokens)


def test_beam_one_score_equals_greedy_and_wider_beams_usually_win():
    # a wider beam is not guaranteed to beat greedy, but on these fixed seeds it never loses
    for seed in range(10):
        model = _sharp_model(seed)
        src = tokenize_sources(TOK, model.cfg, [_product(seed).reviews[0].text], None, [])
        g = greedy_search(model, TOK, src, GenerationConfig(max_length=10))
        b1 = beam_search(model, TOK, src, GenerationConfig(beam_size=1, max_length=10))
        b5 = beam_search(model, TOK, src, GenerationConfig(beam_size=5, max_length=10))
        assert b1.tokens == g.tokens and b1.score == pytest.approx(g.score)
        if not (b5.truncated or g.truncated):
            assert b5.score >= g.score - 1e-12

"""
A desk-scale summariser, end to end
===================================

Builds quadruplets from the bundled training split, fits a small fused
model for a couple hundred steps and scores its test summaries.
"""

import time

import torch

from medos import FIXTURE_CORPUS, ModelConfig, SdcHyperparams, TrainConfig, build_model, load_corpus, train
from medos.embed import EmbeddingProviderConfig, embed_texts
from medos.evaluation import corpus_rouge
from medos.generate import GenerationConfig, summarize_product
from medos.sdc import build_corpus_quadruplets, embed_product
from medos.tokenizer import Tokenizer

torch.set_num_threads(1)

train_split, _ = load_corpus(FIXTURE_CORPUS, "train")
test_split, _ = load_corpus(FIXTURE_CORPUS, "test")

ecfg = EmbeddingProviderConfig("fallback", dimension=256)
embeddings = {p.product_id: embed_product(lambda t, k: embed_texts(ecfg, t, k), p) for p in train_split.products}
quads, report = build_corpus_quadruplets(train_split.products, embeddings, SdcHyperparams(), mode="full")
print(len(quads), "quadruplets;", "skipped:", report.skipped)

texts = []
for q in quads:
    texts += [*q.input_reviews, q.description or "", *q.qa, q.pseudo_summary]
for p in test_split.products:
    texts += p.review_texts
tok = Tokenizer.build(texts)

# %%
cfg = ModelConfig(vocab_size=len(tok), d_model=32, num_layers=2, num_heads=4, max_review_len=256, max_tgt_len=48)
model = build_model(cfg, seed=0)
start = time.perf_counter()
model, log = train(model, tok, quads, TrainConfig(learning_rate=3e-3, batch_size=4, epochs=1, max_steps=200))
print(f"trained {log.total_steps} steps in {time.perf_counter() - start:.1f}s")
print("loss: first", round(log.loss_curve[0][1], 3), "last", round(log.loss_curve[-1][1], 3))

# the gates start closed and open only as far as the sources help
print("mean alpha/beta weight:", float(model.gate_alpha.abs().mean()), float(model.gate_beta.abs().mean()))

# %%
gen = GenerationConfig(beam_size=5, no_repeat_ngram=3, max_length=48)
summaries = {}
for p in test_split.products:
    summaries[p.product_id], _ = summarize_product(model, tok, p, gen)
    print(p.product_id, "->", summaries[p.product_id])

scores = corpus_rouge(summaries, test_split.products)
print(scores.table())

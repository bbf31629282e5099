"""
Picking pseudo-summaries with side information
==============================================

Walks one bundled product through synthetic dataset creation and compares
the three selection modes.
"""

import numpy as np

from medos import FIXTURE_CORPUS, SdcHyperparams, build_quadruplets, load_corpus
from medos.embed import EmbeddingProviderConfig, embed_texts
from medos.sdc import (
    combined_scores,
    description_scores,
    embed_product,
    qa_scores,
    review_similarity_matrix,
    select_pseudo_summaries,
)

corpus, _ = load_corpus(FIXTURE_CORPUS, "train")
product = corpus.products[0]
print(product.product_id, "has", len(product.reviews), "reviews")

# hashed character n-grams stand in for a sentence encoder offline
cfg = EmbeddingProviderConfig("fallback", dimension=256)
emb = embed_product(lambda texts, keys: embed_texts(cfg, texts, keys), product)

# %%
# How well each review agrees with the description and with the QA pairs
ds = description_scores(emb.reviews, emb.description)
qs = qa_scores(emb.reviews, emb.qa)
ss = combined_scores(ds, qs, 0.5, 0.5)
np.set_printoptions(precision=3, suppress=True)
print("description:", ds.values)
print("qa:         ", qs.values)
print("combined:   ", ss.values)

# Reviews at or above the 85th nearest-rank percentile become targets
picked = select_pseudo_summaries(ss, 85)
print("pseudo-summaries:", [product.reviews[i].review_id for i in picked])

sim = review_similarity_matrix(emb.reviews)
print("similarity row of the first pick:", sim.values[picked[0]])

# %%
# Same product under each mode
hp = SdcHyperparams(k=8, percentile=85)
for mode in ("full", "reviews-only", "random"):
    quads = build_quadruplets(product, emb, hp, mode=mode, seed=0)
    for q in quads:
        print(f"{mode:>12}  target={q.pseudo_summary_id}  inputs={','.join(q.input_review_ids)}")

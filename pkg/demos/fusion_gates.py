"""
What the fusion gates do
========================

With closed gates the fused states are the review states; opening one gate
mixes in the description. Absent sources contribute nothing either way.
"""

import torch

from medos.model import ModelConfig, build_model, collate, fused_states, review_states, tokenize_sources
from medos.tokenizer import Tokenizer

torch.manual_seed(0)
reviews = ["sturdy and quiet", "quiet but heavy", "heavy, sturdy, cheap"]
description = "a quiet steel fan"
qa = ["is it loud? no"]
tok = Tokenizer.build(reviews + [description] + qa)
model = build_model(ModelConfig(vocab_size=len(tok), d_model=16, num_layers=1, num_heads=2), seed=0, dtype=torch.float64)

with_sources = collate(tok, model.cfg, [tokenize_sources(tok, model.cfg, reviews, description, qa)])
reviews_only = collate(tok, model.cfg, [tokenize_sources(tok, model.cfg, reviews, None, [])])

with torch.no_grad():
    gap = (fused_states(model, with_sources).states - review_states(model, with_sources).states).abs().max()
print("closed gates, max |fused - reviews|:", float(gap))

# %%
with torch.no_grad():
    model.gate_alpha.normal_(0, 0.5)
    full = fused_states(model, with_sources).states
    bare = fused_states(model, reviews_only).states
    r = review_states(model, with_sources).states
    r_bare = review_states(model, reviews_only).states
print("alpha open, description present:", float((full - r).abs().max()))
print("alpha open, description absent: ", float((bare - r_bare).abs().max()))

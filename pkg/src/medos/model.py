"""Multi-encoder / single-decoder summariser with gated source fusion.

Reviews, description and question-answers each go through their own
transformer encoder. The description and QA states are aligned to the
review length and mixed into the review states through learned gates::

    alpha = relu(tanh([a_R ; a_D] @ W_alpha))
    beta  = relu(tanh([a_R ; a_Q] @ W_beta))
    a_f   = a_R + alpha * a_D + beta * a_Q

The decoder cross-attends to ``a_f`` under the review mask. ``ConcatModel``
is the single-encoder baseline that reads all three sources as one
separator-joined sequence.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .tokenizer import BOS, SPECIALS, Tokenizer

SOURCE_TAGS = ("R", "D", "Q")
CHECKPOINT_VERSION = 1
BOS_ID = SPECIALS.index(BOS)


class NonFiniteLossError(FloatingPointError):
    def __init__(self, message: str, batch_id=None):
        super().__init__(message if batch_id is None else f"{message} (batch {batch_id})")
        self.batch_id = batch_id


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 32
    num_layers: int = 2
    num_heads: int = 4
    ffn_dim: int = 0  # 0 -> 4 * d_model
    max_review_len: int = 256
    max_desc_len: int = 64
    max_qa_len: int = 128
    max_tgt_len: int = 64
    dropout: float = 0.0
    tie_embeddings: bool = True
    arch: str = "medos"

    def __post_init__(self):
        if self.d_model % self.num_heads:
            raise ValueError("d_model must be divisible by num_heads")
        for name in ("max_review_len", "max_desc_len", "max_qa_len", "max_tgt_len", "vocab_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.arch not in ("medos", "concat"):
            raise ValueError("arch must be 'medos' or 'concat'")

    @property
    def ffn(self) -> int:
        return self.ffn_dim or 4 * self.d_model

    @property
    def max_concat_len(self) -> int:
        return self.max_review_len + self.max_desc_len + self.max_qa_len

    def max_len(self, tag: str) -> int:
        return {
            "R": self.max_review_len,
            "D": self.max_desc_len,
            "Q": self.max_qa_len,
            "concat": self.max_concat_len,
        }[tag]


@dataclass
class EncoderStates:
    states: Tensor  # (B, L, d)
    mask: Tensor  # (B, L) bool, True = real token
    source_tag: str

    @property
    def length(self) -> int:
        return self.states.shape[1]


class Dropout(nn.Module):
    """Dropout drawing its masks from an explicitly attached generator."""

    def __init__(self, p: float):
        super().__init__()
        self.p = p
        self.generator: torch.Generator | None = None

    def forward(self, x: Tensor) -> Tensor:
        if not self.training or self.p == 0.0:
            return x
        keep = torch.rand(x.shape, generator=self.generator, dtype=x.dtype) >= self.p
        return x * keep / (1.0 - self.p)


class MultiHeadAttention(nn.Module):
    def __init__(self, d: int, heads: int, dropout: float):
        super().__init__()
        self.h = heads
        self.dk = d // heads
        self.q = nn.Linear(d, d)
        self.k = nn.Linear(d, d)
        self.v = nn.Linear(d, d)
        self.o = nn.Linear(d, d)
        self.drop = Dropout(dropout)

    def forward(self, x: Tensor, mem: Tensor, key_mask: Tensor | None, causal: bool = False) -> Tensor:
        B, Lq, d = x.shape
        Lk = mem.shape[1]
        q = self.q(x).view(B, Lq, self.h, self.dk).transpose(1, 2)
        k = self.k(mem).view(B, Lk, self.h, self.dk).transpose(1, 2)
        v = self.v(mem).view(B, Lk, self.h, self.dk).transpose(1, 2)
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.dk)
        allowed = torch.ones(B, 1, Lq, Lk, dtype=torch.bool)
        if key_mask is not None:
            allowed = allowed & key_mask[:, None, None, :]
        if causal:
            allowed = allowed & torch.ones(Lq, Lk, dtype=torch.bool).tril()
        # finite fill: a fully masked row (absent source) degrades to uniform attention
        scores = scores.masked_fill(~allowed, -1e9)
        attn = self.drop(torch.softmax(scores, dim=-1))
        out = (attn @ v).transpose(1, 2).reshape(B, Lq, d)
        return self.o(out)


class FeedForward(nn.Module):
    def __init__(self, d: int, hidden: int, dropout: float):
        super().__init__()
        self.w1 = nn.Linear(d, hidden)
        self.w2 = nn.Linear(hidden, d)
        self.drop = Dropout(dropout)

    def forward(self, x: Tensor) -> Tensor:
        return self.w2(self.drop(F.gelu(self.w1(x))))


class EncoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        d = cfg.d_model
        self.ln1 = nn.LayerNorm(d)
        self.attn = MultiHeadAttention(d, cfg.num_heads, cfg.dropout)
        self.ln2 = nn.LayerNorm(d)
        self.ffn = FeedForward(d, cfg.ffn, cfg.dropout)
        self.drop = Dropout(cfg.dropout)

    def forward(self, x: Tensor, mask: Tensor) -> Tensor:
        h = self.ln1(x)
        x = x + self.drop(self.attn(h, h, mask))
        return x + self.drop(self.ffn(self.ln2(x)))


class DecoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        d = cfg.d_model
        self.ln1 = nn.LayerNorm(d)
        self.self_attn = MultiHeadAttention(d, cfg.num_heads, cfg.dropout)
        self.ln2 = nn.LayerNorm(d)
        self.cross_attn = MultiHeadAttention(d, cfg.num_heads, cfg.dropout)
        self.ln3 = nn.LayerNorm(d)
        self.ffn = FeedForward(d, cfg.ffn, cfg.dropout)
        self.drop = Dropout(cfg.dropout)

    def forward(self, y: Tensor, mem: Tensor, mem_mask: Tensor) -> Tensor:
        h = self.ln1(y)
        y = y + self.drop(self.self_attn(h, h, None, causal=True))
        y = y + self.drop(self.cross_attn(self.ln2(y), mem, mem_mask))
        return y + self.drop(self.ffn(self.ln3(y)))


class Encoder(nn.Module):
    def __init__(self, cfg: ModelConfig, max_len: int):
        super().__init__()
        self.pos = nn.Embedding(max_len, cfg.d_model)
        self.layers = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.num_layers))
        self.ln = nn.LayerNorm(cfg.d_model)
        self.drop = Dropout(cfg.dropout)

    def forward(self, tok_emb: Tensor, mask: Tensor) -> Tensor:
        L = tok_emb.shape[1]
        x = self.drop(tok_emb + self.pos.weight[:L])
        for layer in self.layers:
            x = layer(x, mask)
        return self.ln(x)


class Decoder(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.pos = nn.Embedding(cfg.max_tgt_len, cfg.d_model)
        self.layers = nn.ModuleList(DecoderLayer(cfg) for _ in range(cfg.num_layers))
        self.ln = nn.LayerNorm(cfg.d_model)
        self.drop = Dropout(cfg.dropout)

    def forward(self, tok_emb: Tensor, mem: Tensor, mem_mask: Tensor) -> Tensor:
        T = tok_emb.shape[1]
        y = self.drop(tok_emb + self.pos.weight[:T])
        for layer in self.layers:
            y = layer(y, mem, mem_mask)
        return self.ln(y)


class _Seq2SeqBase(nn.Module):
    cfg: ModelConfig

    def _build_shared(self, cfg: ModelConfig):
        self.cfg = cfg
        self.embed = nn.Embedding(cfg.vocab_size, cfg.d_model)
        self.decoder = Decoder(cfg)
        self.out_proj = None if cfg.tie_embeddings else nn.Linear(cfg.d_model, cfg.vocab_size, bias=False)

    def logits(self, h: Tensor) -> Tensor:
        if self.out_proj is None:
            return h @ self.embed.weight.T
        return self.out_proj(h)

    def attach_generator(self, generator: torch.Generator | None) -> None:
        for m in self.modules():
            if isinstance(m, Dropout):
                m.generator = generator

    def init_params(self, generator: torch.Generator) -> None:
        """Deterministically initialise every parameter from ``generator``.

        Fusion gates start at zero, so a fresh model behaves exactly like
        its review-only encoder-decoder.
        """
        with torch.no_grad():
            for m in self.modules():
                if isinstance(m, nn.LayerNorm):
                    m.weight.fill_(1.0)
                    m.bias.zero_()
                elif isinstance(m, nn.Embedding):
                    nn.init.normal_(m.weight, 0.0, self.cfg.d_model**-0.5, generator=generator)
                elif isinstance(m, nn.Linear):
                    nn.init.xavier_uniform_(m.weight, generator=generator)
                    if m.bias is not None:
                        m.bias.zero_()
            for name, p in self.named_parameters(recurse=False):
                if name.startswith("gate_"):
                    p.zero_()


class MedosModel(_Seq2SeqBase):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self._build_shared(cfg)
        self.encoders = nn.ModuleDict({t: Encoder(cfg, cfg.max_len(t)) for t in SOURCE_TAGS})
        d = cfg.d_model
        self.gate_alpha = nn.Parameter(torch.zeros(2 * d, d))
        self.gate_beta = nn.Parameter(torch.zeros(2 * d, d))


class ConcatModel(_Seq2SeqBase):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self._build_shared(cfg)
        self.encoder = Encoder(cfg, cfg.max_concat_len)


def build_model(cfg: ModelConfig, seed: int = 0, dtype=torch.float32) -> MedosModel | ConcatModel:
    model = MedosModel(cfg) if cfg.arch == "medos" else ConcatModel(cfg)
    model.init_params(torch.Generator().manual_seed(seed))
    return model.to(dtype)


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())


# ---------------------------------------------------------------------------
# tokenised inputs


@dataclass
class TokenizedSources:
    review_tokens: list[int]
    description_tokens: list[int]
    qa_tokens: list[int]
    target_tokens: list[int] | None = None

    def source(self, tag: str) -> list[int]:
        return {"R": self.review_tokens, "D": self.description_tokens, "Q": self.qa_tokens}[tag]


def _join(tok: Tokenizer, texts: Sequence[str], max_len: int) -> list[int]:
    if not texts:
        return [tok.pad_id]
    body: list[int] = []
    for i, t in enumerate(texts):
        if i:
            body.append(tok.sep_id)
        body.extend(tok.encode(t))
    return [tok.bos_id] + body[: max(0, max_len - 2)] + [tok.eos_id]


def is_absent(tokens: Sequence[int], tok: Tokenizer) -> bool:
    return len(tokens) == 1 and tokens[0] == tok.pad_id


def tokenize_sources(
    tok: Tokenizer,
    cfg: ModelConfig,
    reviews: Sequence[str],
    description: str | None,
    qa: Sequence[str],
    target: str | None = None,
) -> TokenizedSources:
    """Pack each source into one sentinel-wrapped sequence.

    Multiple reviews / QA pairs are joined with ``<sep>`` and truncated from
    the tail; an absent source becomes the single-token ``[<pad>]``.
    """
    tgt = None
    if target is not None:
        tgt = [tok.bos_id] + tok.encode(target)[: cfg.max_tgt_len - 2] + [tok.eos_id]
    return TokenizedSources(
        _join(tok, list(reviews), cfg.max_review_len),
        _join(tok, [description] if description is not None else [], cfg.max_desc_len),
        _join(tok, list(qa), cfg.max_qa_len),
        tgt,
    )


def concat_tokens(tok: Tokenizer, cfg: ModelConfig, src: TokenizedSources) -> list[int]:
    """reviews <sep> description <sep> qa, one sequence for the single encoder."""

    def body(ids):
        return [] if is_absent(ids, tok) else ids[1:-1]

    seq = body(src.review_tokens) + [tok.sep_id] + body(src.description_tokens) + [tok.sep_id] + body(src.qa_tokens)
    return [tok.bos_id] + seq[: cfg.max_concat_len - 2] + [tok.eos_id]


@dataclass
class Batch:
    sources: dict[str, tuple[Tensor, Tensor]]  # tag -> (ids, mask)
    tgt_in: Tensor | None
    tgt_out: Tensor | None

    @property
    def size(self) -> int:
        return next(iter(self.sources.values()))[0].shape[0]


def _pad(seqs: list[list[int]], pad_id: int, absent_false: bool) -> tuple[Tensor, Tensor]:
    L = max(len(s) for s in seqs)
    ids = torch.full((len(seqs), L), pad_id, dtype=torch.long)
    mask = torch.zeros((len(seqs), L), dtype=torch.bool)
    for i, s in enumerate(seqs):
        ids[i, : len(s)] = torch.tensor(s, dtype=torch.long)
        if not (absent_false and len(s) == 1 and s[0] == pad_id):
            mask[i, : len(s)] = True
    return ids, mask


def collate(tok: Tokenizer, cfg: ModelConfig, items: Sequence[TokenizedSources]) -> Batch:
    if not items:
        raise ValueError("empty batch")
    if cfg.arch == "concat":
        sources = {"concat": _pad([concat_tokens(tok, cfg, s) for s in items], tok.pad_id, False)}
    else:
        sources = {t: _pad([s.source(t) for s in items], tok.pad_id, True) for t in SOURCE_TAGS}
    tgt_in = tgt_out = None
    if items[0].target_tokens is not None:
        tgt_in, _ = _pad([s.target_tokens[:-1] for s in items], tok.pad_id, False)
        out_ids, out_mask = _pad([s.target_tokens[1:] for s in items], tok.pad_id, False)
        tgt_out = out_ids.masked_fill(~out_mask, -100)
    return Batch(sources, tgt_in, tgt_out)


def quadruplet_sources(tok: Tokenizer, cfg: ModelConfig, q, with_target: bool = True) -> TokenizedSources:
    return tokenize_sources(
        tok, cfg, q.input_reviews, q.description, q.qa, q.pseudo_summary if with_target else None
    )


def collate_quadruplets(tok: Tokenizer, cfg: ModelConfig, quads) -> Batch:
    return collate(tok, cfg, [quadruplet_sources(tok, cfg, q) for q in quads])


# ---------------------------------------------------------------------------
# forward pieces


def encode_source(model, tokens: Tensor, mask: Tensor | None, source_tag: str) -> EncoderStates:
    """Self-attended encoder states for one source (``concat`` for the baseline)."""
    if tokens.dim() == 1:
        tokens = tokens[None, :]
        mask = None if mask is None else mask[None, :]
    if mask is None:
        mask = torch.ones_like(tokens, dtype=torch.bool)
    if tokens.numel() and (int(tokens.min()) < 0 or int(tokens.max()) >= model.cfg.vocab_size):
        raise ValueError("token id out of vocabulary")
    if tokens.shape[1] > model.cfg.max_len(source_tag):
        raise ValueError(f"{source_tag} sequence longer than {model.cfg.max_len(source_tag)}")
    encoder = model.encoder if source_tag == "concat" else model.encoders[source_tag]
    states = encoder(model.embed(tokens), mask)
    return EncoderStates(states, mask, source_tag)


def align_states(x: EncoderStates, target_len: int) -> EncoderStates:
    """Truncate or zero-pad to ``target_len`` rows; masked rows become zero."""
    if target_len < 1:
        raise ValueError("target_len must be >= 1")
    states, mask = x.states, x.mask
    L = states.shape[1]
    if L >= target_len:
        states, mask = states[:, :target_len], mask[:, :target_len]
    else:
        B, _, d = states.shape
        states = torch.cat([states, states.new_zeros(B, target_len - L, d)], dim=1)
        mask = torch.cat([mask, mask.new_zeros(B, target_len - L)], dim=1)
    states = states * mask[..., None].to(states.dtype)
    return EncoderStates(states, mask, x.source_tag)


def gate_activation(x: Tensor) -> Tensor:
    # ReLU(tanh(x)), but with slope 1 at exactly 0: zero-initialised gate
    # weights would otherwise never receive a gradient
    t = torch.tanh(x)
    return torch.where(t >= 0, t, torch.zeros_like(t))


def compute_gate(a_r: EncoderStates, a_x: EncoderStates, w: Tensor) -> Tensor:
    if a_r.states.shape != a_x.states.shape:
        raise ValueError(f"gate inputs differ in shape: {tuple(a_r.states.shape)} vs {tuple(a_x.states.shape)}")
    d = a_r.states.shape[-1]
    if tuple(w.shape) != (2 * d, d):
        raise ValueError(f"gate weight must be {(2 * d, d)}, got {tuple(w.shape)}")
    return gate_activation(torch.cat([a_r.states, a_x.states], dim=-1) @ w)


def fuse(a_r: EncoderStates, a_d: EncoderStates, a_q: EncoderStates, alpha: Tensor, beta: Tensor) -> EncoderStates:
    shape = a_r.states.shape
    for t in (a_d.states, a_q.states, alpha, beta):
        if t.shape != shape:
            raise ValueError(f"fusion inputs must all have shape {tuple(shape)}")
    return EncoderStates(a_r.states + alpha * a_d.states + beta * a_q.states, a_r.mask, "fused")


def fused_states(model: MedosModel, batch: Batch) -> EncoderStates:
    ids, mask = batch.sources["R"]
    a_r = align_states(encode_source(model, ids, mask, "R"), ids.shape[1])
    L = a_r.length
    a_d = align_states(encode_source(model, *batch.sources["D"], "D"), L)
    a_q = align_states(encode_source(model, *batch.sources["Q"], "Q"), L)
    alpha = compute_gate(a_r, a_d, model.gate_alpha)
    beta = compute_gate(a_r, a_q, model.gate_beta)
    return fuse(a_r, a_d, a_q, alpha, beta)


def review_states(model: MedosModel, batch: Batch) -> EncoderStates:
    """The review encoder alone, i.e. the review-only encoder-decoder path."""
    ids, mask = batch.sources["R"]
    return align_states(encode_source(model, ids, mask, "R"), ids.shape[1])


def concat_states(model: ConcatModel, batch: Batch) -> EncoderStates:
    ids, mask = batch.sources["concat"]
    return align_states(encode_source(model, ids, mask, "concat"), ids.shape[1])


def memory(model, batch: Batch) -> EncoderStates:
    if isinstance(model, ConcatModel):
        return concat_states(model, batch)
    return fused_states(model, batch)


def decode_logprobs(model, fused: EncoderStates, prefix: Tensor) -> Tensor:
    """Next-token log-distributions, shape (B, T, V), for every prefix position."""
    if prefix.dim() == 1:
        prefix = prefix[None, :]
    if prefix.shape[1] == 0 or bool((prefix[:, 0] != BOS_ID).any()):
        raise ValueError("prefix must begin with the start sentinel")
    if prefix.shape[1] > model.cfg.max_tgt_len:
        raise ValueError("prefix longer than max_tgt_len")
    mem = fused.states
    if mem.shape[0] == 1 and prefix.shape[0] > 1:
        mem = mem.expand(prefix.shape[0], -1, -1)
        mask = fused.mask.expand(prefix.shape[0], -1)
    else:
        mask = fused.mask
    h = model.decoder(model.embed(prefix), mem, mask)
    return torch.log_softmax(model.logits(h), dim=-1)


def _nll(model, mem: EncoderStates, batch: Batch, batch_id=None) -> tuple[Tensor, int]:
    if batch.tgt_in is None:
        raise ValueError("batch has no targets")
    logp = decode_logprobs(model, mem, batch.tgt_in)
    ntok = int((batch.tgt_out != -100).sum())
    loss = F.nll_loss(logp.reshape(-1, logp.shape[-1]), batch.tgt_out.reshape(-1), ignore_index=-100, reduction="sum") / ntok
    if not torch.isfinite(loss):
        raise NonFiniteLossError("non-finite loss", batch_id)
    return loss, ntok


def _as_batch(model, batch, tok):
    if isinstance(batch, Batch):
        return batch
    batch = list(batch)
    if not batch:
        raise ValueError("empty batch")
    return collate_quadruplets(tok, model.cfg, batch)


def forward_loss(model, batch, tok: Tokenizer | None = None, batch_id=None) -> tuple[Tensor, int]:
    """Teacher-forced mean negative log-likelihood over non-pad target tokens.

    ``batch`` is a :class:`Batch` or a sequence of quadruplets (then ``tok``
    is required). Returns the loss and the number of target tokens.
    """
    batch = _as_batch(model, batch, tok)
    return _nll(model, memory(model, batch), batch, batch_id)


def review_only_loss(model: MedosModel, batch, tok: Tokenizer | None = None) -> tuple[Tensor, int]:
    batch = _as_batch(model, batch, tok)
    return _nll(model, review_states(model, batch), batch)


def concat_baseline_forward(model: ConcatModel, quadruplets, tok: Tokenizer | None = None) -> Tensor:
    if not isinstance(model, ConcatModel):
        raise TypeError("concat_baseline_forward needs a ConcatModel")
    return forward_loss(model, quadruplets, tok)[0]


def sequence_logprob(model, batch: Batch) -> Tensor:
    """Total target log-likelihood per batch row."""
    logp = decode_logprobs(model, memory(model, batch), batch.tgt_in)
    tgt = batch.tgt_out.clamp(min=0)
    picked = logp.gather(-1, tgt[..., None])[..., 0]
    return (picked * (batch.tgt_out != -100)).sum(dim=1)


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, model, tok: Tokenizer, extra: dict | None = None) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "model_config": asdict(model.cfg),
        "dtype": str(next(model.parameters()).dtype).replace("torch.", ""),
        "tokenizer": tok.to_dict(),
        "state_dict": {k: v.detach().clone() for k, v in model.state_dict().items()},
        "extra": extra or {},
    }
    torch.save(payload, path)


def load_checkpoint(path):
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')!r}")
    cfg = ModelConfig(**payload["model_config"])
    model = MedosModel(cfg) if cfg.arch == "medos" else ConcatModel(cfg)
    model = model.to(getattr(torch, payload["dtype"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, Tokenizer.from_dict(payload["tokenizer"]), payload.get("extra", {})

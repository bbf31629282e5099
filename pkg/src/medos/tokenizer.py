"""Reversible word-level tokenizer built from a training corpus.

Text is split into pieces that carry their leading whitespace (``" great"``,
``"."``), so decoding is plain concatenation. Pieces outside the vocabulary
are spelled out character by character; characters never seen at build time
map to ``<unk>``.
"""

from __future__ import annotations

import re
from collections import Counter
from typing import Iterable, Sequence

PAD, BOS, EOS, SEP, UNK = "<pad>", "<s>", "</s>", "<sep>", "<unk>"
SPECIALS = (PAD, BOS, EOS, SEP, UNK)

_PIECE = re.compile(r" ?[^\W_]+| ?[^\w\s]|\s+|_")


class Tokenizer:
    def __init__(self, vocab: Sequence[str]):
        if tuple(vocab[: len(SPECIALS)]) != SPECIALS:
            raise ValueError(f"vocabulary must start with {SPECIALS}")
        self.vocab = list(vocab)
        self.index = {t: i for i, t in enumerate(self.vocab)}
        if len(self.index) != len(self.vocab):
            raise ValueError("duplicate vocabulary entries")
        self.pad_id, self.bos_id, self.eos_id, self.sep_id, self.unk_id = range(len(SPECIALS))

    @classmethod
    def build(cls, texts: Iterable[str], min_count: int = 1, max_size: int | None = None) -> "Tokenizer":
        pieces: Counter[str] = Counter()
        chars: set[str] = set()
        for t in texts:
            pieces.update(_PIECE.findall(t))
            chars.update(t)
        words = sorted((p for p, c in pieces.items() if c >= min_count), key=lambda p: (-pieces[p], p))
        if max_size is not None:
            words = words[: max(0, max_size - len(SPECIALS) - len(chars))]
        vocab = list(SPECIALS) + sorted(chars)
        seen = set(vocab)
        vocab += [w for w in words if w not in seen]
        return cls(vocab)

    def __len__(self) -> int:
        return len(self.vocab)

    def encode(self, text: str) -> list[int]:
        ids = []
        for piece in _PIECE.findall(text):
            i = self.index.get(piece)
            if i is not None:
                ids.append(i)
            else:
                ids.extend(self.index.get(ch, self.unk_id) for ch in piece)
        return ids

    def decode(self, ids: Iterable[int]) -> str:
        out = []
        for i in ids:
            i = int(i)
            if i in (self.pad_id, self.bos_id):
                continue
            if i == self.eos_id:
                break
            out.append(" " if i == self.sep_id else self.vocab[i])
        return "".join(out)

    def to_dict(self) -> dict:
        return {"kind": "word-piece", "vocab": self.vocab}

    @classmethod
    def from_dict(cls, d: dict) -> "Tokenizer":
        return cls(d["vocab"])

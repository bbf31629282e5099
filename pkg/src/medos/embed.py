"""Sentence embeddings and cosine similarity.

Three backends:

* ``fallback``: deterministic hashed character 2/3-gram counts, L2
  normalised. Needs no weights and no network.
* ``precomputed``: vectors read from a line-delimited ``{"key", "vector"}``
  file.
* ``external``: a sentence-transformers checkpoint (``all-MiniLM-L12-v2``
  by default, 384 dims).
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

PROVIDER_KINDS = ("external", "precomputed", "fallback")
DEFAULT_CHECKPOINT = "all-MiniLM-L12-v2"
_HASH_SEED = b"medos-ngram-v1"


class EmbeddingError(RuntimeError):
    pass


class MissingKeyError(EmbeddingError, KeyError):
    pass


class TransportError(EmbeddingError):
    def __init__(self, message: str, retries: int):
        super().__init__(f"{message} (after {retries} retries)")
        self.retries = retries


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    provider_kind: str = "fallback"
    checkpoint_name: str = DEFAULT_CHECKPOINT
    dimension: int = 256
    precomputed_path: str | None = None
    max_retries: int = 2

    def __post_init__(self):
        if self.provider_kind not in PROVIDER_KINDS:
            raise ValueError(f"provider_kind must be one of {PROVIDER_KINDS}")
        if self.dimension <= 0:
            raise ValueError("dimension must be positive")


@dataclass(frozen=True)
class EmbeddingMatrix:
    values: np.ndarray
    row_keys: tuple[str, ...] = field(default=())

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2:
            raise ValueError("embedding values must be 2-D")
        if not np.all(np.isfinite(v)):
            raise ValueError("embedding values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        keys = tuple(self.row_keys) or tuple(str(i) for i in range(v.shape[0]))
        if len(keys) != v.shape[0]:
            raise ValueError("row_keys must align with rows")
        object.__setattr__(self, "row_keys", keys)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    def row(self, i: int) -> "EmbeddingMatrix":
        return EmbeddingMatrix(self.values[i : i + 1], (self.row_keys[i],))


def _ngram_bucket(gram: str, dim: int) -> int:
    h = hashlib.blake2b(gram.encode("utf-8"), digest_size=8, key=_HASH_SEED)
    return int.from_bytes(h.digest(), "little") % dim


def hashed_ngram_vector(text: str, dim: int) -> np.ndarray:
    padded = "^" + text.lower() + "$"
    vec = np.zeros(dim, dtype=np.float64)
    for n in (2, 3):
        for i in range(len(padded) - n + 1):
            vec[_ngram_bucket(padded[i : i + n], dim)] += 1.0
    return vec / np.linalg.norm(vec)


def read_precomputed(path) -> dict[str, np.ndarray]:
    table = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                table[rec["key"]] = np.asarray(rec["vector"], dtype=np.float64)
    return table


def write_precomputed(path, keys: Sequence[str], vectors: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in zip(keys, np.asarray(vectors, dtype=np.float64)):
            fh.write(json.dumps({"key": k, "vector": [float(x) for x in v]}) + "\n")


_external_models: dict[str, object] = {}


def _load_sentence_model(name: str):
    from sentence_transformers import SentenceTransformer

    return SentenceTransformer(name)


def _external_encode(cfg: EmbeddingProviderConfig, texts: list[str]) -> np.ndarray:
    last = None
    for attempt in range(cfg.max_retries + 1):
        try:
            model = _external_models.get(cfg.checkpoint_name)
            if model is None:
                model = _load_sentence_model(cfg.checkpoint_name)
                _external_models[cfg.checkpoint_name] = model
            return np.asarray(model.encode(texts, batch_size=64), dtype=np.float64)
        except Exception as exc:  # network / missing weights
            last = exc
            if attempt < cfg.max_retries:
                time.sleep(0.5 * 2**attempt)
    raise TransportError(f"embedding checkpoint {cfg.checkpoint_name!r} unavailable: {last}", cfg.max_retries)


def embed_texts(
    cfg: EmbeddingProviderConfig,
    texts: Sequence[str],
    keys: Sequence[str] | None = None,
) -> EmbeddingMatrix:
    """Embed ``texts`` into one row each, in input order.

    ``keys`` label the rows; for the precomputed backend they are also the
    lookup keys (default: the texts themselves).
    """
    texts = list(texts)
    if not texts:
        raise ValueError("texts must be non-empty")
    keys = list(keys) if keys is not None else list(texts)
    if len(keys) != len(texts):
        raise ValueError("keys must align with texts")

    if cfg.provider_kind == "fallback":
        values = np.stack([hashed_ngram_vector(t, cfg.dimension) for t in texts])
    elif cfg.provider_kind == "precomputed":
        if cfg.precomputed_path is None:
            raise ValueError("precomputed provider needs precomputed_path")
        table = read_precomputed(cfg.precomputed_path)
        missing = [k for k in keys if k not in table]
        if missing:
            raise MissingKeyError(f"no stored vector for key {missing[0]!r}")
        values = np.stack([table[k] for k in keys])
    else:
        values = _external_encode(cfg, texts)
    return EmbeddingMatrix(values, tuple(keys))


def cosine_sim(a: EmbeddingMatrix, b: EmbeddingMatrix) -> np.ndarray:
    if a.dimension != b.dimension:
        raise ValueError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    na = np.linalg.norm(a.values, axis=1)
    nb = np.linalg.norm(b.values, axis=1)
    for m, norms in ((a, na), (b, nb)):
        zero = np.flatnonzero(norms == 0)
        if zero.size:
            raise ValueError(f"zero-norm row {m.row_keys[zero[0]]!r}")
    sim = (a.values / na[:, None]) @ (b.values / nb[:, None]).T
    return np.clip(sim, -1.0, 1.0)


class EmbeddingCache:
    """On-disk cache of embedding rows keyed by backend and text content.

    Each entry is one ``.npy`` file named by the SHA-256 of
    ``(provider_kind, checkpoint_name, dimension, text)``; writes go through
    a temporary file and ``os.replace`` so readers never see partial files.
    Unreadable entries are treated as misses and recomputed.
    """

    def __init__(self, root, cfg: EmbeddingProviderConfig):
        self.root = Path(root)
        self.cfg = cfg
        self.hits = 0
        self.misses = 0

    def _key(self, text: str) -> str:
        h = hashlib.sha256()
        for part in (self.cfg.provider_kind, self.cfg.checkpoint_name, str(self.cfg.dimension), text):
            h.update(part.encode("utf-8"))
            h.update(b"\0")
        return h.hexdigest()

    def path_for(self, text: str) -> Path:
        key = self._key(text)
        return self.root / key[:2] / f"{key}.npy"

    def get(self, text: str) -> np.ndarray | None:
        p = self.path_for(text)
        try:
            v = np.load(p, allow_pickle=False)
        except (OSError, ValueError):
            return None
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            return None
        return v

    def put(self, text: str, vector: np.ndarray) -> None:
        p = self.path_for(text)
        p.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=p.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                np.save(fh, np.asarray(vector, dtype=np.float64), allow_pickle=False)
            os.replace(tmp, p)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def embed(self, texts: Sequence[str], keys: Sequence[str] | None = None) -> EmbeddingMatrix:
        texts = list(texts)
        keys = list(keys) if keys is not None else list(texts)
        rows: list[np.ndarray | None] = [self.get(t) for t in texts]
        todo = [i for i, r in enumerate(rows) if r is None]
        self.hits += len(texts) - len(todo)
        self.misses += len(todo)
        if todo:
            fresh = embed_texts(self.cfg, [texts[i] for i in todo], [keys[i] for i in todo])
            for j, i in enumerate(todo):
                rows[i] = fresh.values[j]
                self.put(texts[i], fresh.values[j])
        return EmbeddingMatrix(np.stack(rows), tuple(keys))

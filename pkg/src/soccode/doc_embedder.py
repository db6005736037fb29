"""Paragraph vectors (PV-DBOW) trained with negative sampling.

Each document owns a trainable vector that is pushed towards the output
("context") vector of every token it contains and away from tokens drawn from
the unigram distribution raised to 0.75. Inference for unseen text repeats
the same updates with the context vectors frozen.

All randomness inside the training loops comes from a 48-bit linear
congruential generator seeded from ``EmbedConfig.seed``, so single-threaded
training is bitwise reproducible.
"""

from __future__ import annotations

import io
import json
import struct
import zlib
from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np
from numba import njit

from .text_vectorizer import tokenize

MAGIC = b"SOCPVDB\x00"
FORMAT_VERSION = 1
MIN_LEARNING_RATE = 0.0001
NEG_POWER = 0.75


@dataclass(frozen=True)
class EmbedConfig:
    dim: int = 100
    window: int = 5
    epochs: int = 20
    negative_samples: int = 5
    initial_learning_rate: float = 0.025
    min_learning_rate: float = MIN_LEARNING_RATE
    min_token_count: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.negative_samples < 1:
            raise ValueError("negative_samples must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")


class EmptyVocabularyError(ValueError):
    pass


@njit(cache=True)
def _lcg(state):
    return state * np.uint64(25214903917) + np.uint64(11)


@njit(cache=True)
def _draw(state, cum):
    # 32 high-ish bits of the LCG state -> uniform in [0, 1)
    u = ((state >> np.uint64(16)) & np.uint64(0xFFFFFFFF)) / 4294967296.0
    return np.searchsorted(cum, u * cum[-1], side="right")


@njit(cache=True)
def _sigmoid(x):
    if x > 30.0:
        return 1.0
    if x < -30.0:
        return 0.0
    return 1.0 / (1.0 + np.exp(-x))


@njit(cache=True)
def _train_doc(docvec, tokens, ctx, cum, negative, lr, state, update_ctx, work):
    """One pass of negative-sampling updates for a single document."""
    dim = docvec.shape[0]
    for pos in range(tokens.shape[0]):
        target = tokens[pos]
        for d in range(dim):
            work[d] = 0.0
        for s in range(negative + 1):
            if s == 0:
                w = target
                label = 1.0
            else:
                state = _lcg(state)
                w = _draw(state, cum)
                if w == target:
                    continue
                label = 0.0
            dot = 0.0
            for d in range(dim):
                dot += docvec[d] * ctx[w, d]
            g = (label - _sigmoid(dot)) * lr
            for d in range(dim):
                work[d] += g * ctx[w, d]
            if update_ctx:
                for d in range(dim):
                    ctx[w, d] += g * docvec[d]
        for d in range(dim):
            docvec[d] += work[d]
    return state


@njit(cache=True)
def _train_corpus(docvecs, flat, offsets, ctx, cum, negative, epochs, lr0, lr_min, state):
    n_docs = offsets.shape[0] - 1
    total = flat.shape[0] * epochs
    done = 0
    work = np.zeros(docvecs.shape[1], dtype=np.float32)
    for epoch in range(epochs):
        for i in range(n_docs):
            lr = lr0 - (lr0 - lr_min) * done / total
            if lr < lr_min:
                lr = lr_min
            toks = flat[offsets[i]:offsets[i + 1]]
            state = _train_doc(docvecs[i], toks, ctx, cum, negative, lr, state, True, work)
            done += toks.shape[0]
    return state


@njit(cache=True)
def _infer(docvec, tokens, ctx, cum, negative, epochs, lr0, lr_min, state):
    work = np.zeros(docvec.shape[0], dtype=np.float32)
    for epoch in range(epochs):
        lr = lr0 - (lr0 - lr_min) * epoch / epochs
        state = _train_doc(docvec, tokens, ctx, cum, negative, lr, state, False, work)
    return state


def _expected_loss(docvecs, flat, offsets, ctx, cum, negative) -> float:
    """Mean negative-sampling cross-entropy over all (doc, token) pairs.

    The negative term is the exact expectation over the noise distribution
    rather than a sample, so the value is deterministic.
    """
    q = np.diff(np.concatenate([[0.0], cum])) / cum[-1]
    scores = docvecs.astype(np.float64) @ ctx.astype(np.float64).T
    lengths = np.diff(offsets)
    doc_of = np.repeat(np.arange(len(lengths)), lengths)
    positive = np.logaddexp(0.0, -scores[doc_of, flat]).sum()
    negative_term = negative * (lengths * (np.logaddexp(0.0, scores) @ q)).sum()
    return float((positive + negative_term) / max(flat.size, 1))


def _seed_state(*parts: int) -> np.uint64:
    h = zlib.crc32(struct.pack(f"<{len(parts)}q", *parts))
    return np.uint64((h << 16) | 0x330E)


def _init_rows(n: int, dim: int, seed: int, salt: int) -> np.ndarray:
    rng = np.random.default_rng([seed, salt])
    return ((rng.random((n, dim)) - 0.5) / dim).astype(np.float32)


@dataclass(frozen=True, eq=False)
class EmbeddingModel:
    tokens: tuple[str, ...]
    counts: np.ndarray
    doc_vectors: np.ndarray
    context_vectors: np.ndarray
    config: EmbedConfig

    def __post_init__(self):
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})
        weights = self.counts.astype(np.float64) ** NEG_POWER
        object.__setattr__(self, "unigram_table", np.cumsum(weights))

    @property
    def dim(self) -> int:
        return self.config.dim

    @property
    def token_vocab(self) -> dict[str, int]:
        return dict(self._index)

    def encode(self, text: str) -> np.ndarray:
        return np.array([self._index[t] for t in tokenize(text) if t in self._index], dtype=np.int64)

    def infer_vector(self, text: str) -> np.ndarray:
        return infer_vector(self, text)

    def transform_many(self, texts) -> np.ndarray:
        return np.vstack([infer_vector(self, t) for t in texts]).astype(np.float64)

    def training_loss(self, texts) -> float:
        """Expected negative-sampling loss of the stored doc vectors on their training texts."""
        flat, offsets = _pack([self.encode(t) for t in texts])
        if len(texts) != self.doc_vectors.shape[0]:
            raise ValueError("need exactly one text per training document")
        return _expected_loss(self.doc_vectors, flat, offsets, self.context_vectors,
                              self.unigram_table, self.config.negative_samples)

    def to_bytes(self) -> bytes:
        """Versioned little-endian container: header, token table, float32 matrices."""
        header = json.dumps({
            "version": FORMAT_VERSION,
            "config": asdict(self.config),
            "n_docs": int(self.doc_vectors.shape[0]),
            "n_tokens": len(self.tokens),
            "dim": self.config.dim,
        }).encode("utf-8")
        buf = io.BytesIO()
        buf.write(MAGIC)
        buf.write(struct.pack("<I", len(header)))
        buf.write(header)
        for tok, cnt in zip(self.tokens, self.counts.tolist()):
            raw = tok.encode("utf-8")
            buf.write(struct.pack("<IQ", len(raw), cnt))
            buf.write(raw)
        buf.write(np.ascontiguousarray(self.doc_vectors, dtype="<f4").tobytes())
        buf.write(np.ascontiguousarray(self.context_vectors, dtype="<f4").tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "EmbeddingModel":
        view = memoryview(data)
        if bytes(view[:8]) != MAGIC:
            raise ValueError("not a paragraph-vector model")
        (hlen,) = struct.unpack_from("<I", view, 8)
        header = json.loads(bytes(view[12:12 + hlen]))
        if header["version"] != FORMAT_VERSION:
            raise ValueError(f"unsupported embedding model version {header['version']!r}")
        pos = 12 + hlen
        tokens, counts = [], []
        for _ in range(header["n_tokens"]):
            n, cnt = struct.unpack_from("<IQ", view, pos)
            pos += 12
            tokens.append(bytes(view[pos:pos + n]).decode("utf-8"))
            counts.append(cnt)
            pos += n
        dim, n_docs = header["dim"], header["n_docs"]
        size = n_docs * dim * 4
        docs = np.frombuffer(view[pos:pos + size], dtype="<f4").reshape(n_docs, dim).astype(np.float32)
        pos += size
        size = len(tokens) * dim * 4
        ctx = np.frombuffer(view[pos:pos + size], dtype="<f4").reshape(len(tokens), dim).astype(np.float32)
        if pos + size != len(data):
            raise ValueError("embedding model payload has unexpected length")
        return cls(tuple(tokens), np.array(counts, dtype=np.int64), docs, ctx, EmbedConfig(**header["config"]))


def _pack(seqs: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(len(seqs) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(s) for s in seqs])
    flat = np.concatenate(seqs).astype(np.int64) if seqs else np.zeros(0, dtype=np.int64)
    return flat, offsets


def fit(corpus, cfg: EmbedConfig | None = None, loss_history: list | None = None) -> EmbeddingModel:
    """Train PV-DBOW document vectors on a Dataset or a list of strings.

    If ``loss_history`` is given, the expected training loss is
    appended after every epoch. Training then runs one epoch per call on the
    same linear learning-rate schedule.
    """
    cfg = cfg or EmbedConfig()
    texts = corpus.descriptions if hasattr(corpus, "descriptions") else list(corpus)
    if not texts:
        raise ValueError("cannot fit an embedding on an empty corpus")
    docs = [tokenize(t) for t in texts]
    freq = Counter(t for d in docs for t in d)
    vocab = sorted(t for t, c in freq.items() if c >= cfg.min_token_count)
    if not vocab:
        raise EmptyVocabularyError(f"no token occurs at least {cfg.min_token_count} times")
    index = {t: i for i, t in enumerate(vocab)}
    counts = np.array([freq[t] for t in vocab], dtype=np.int64)
    encoded = [np.array([index[t] for t in d if t in index], dtype=np.int64) for d in docs]
    flat, offsets = _pack(encoded)

    docvecs = _init_rows(len(docs), cfg.dim, cfg.seed, 1)
    ctx = np.zeros((len(vocab), cfg.dim), dtype=np.float32)
    cum = np.cumsum(counts.astype(np.float64) ** NEG_POWER)
    state = _seed_state(cfg.seed, 2)
    lr0, lr_min = cfg.initial_learning_rate, cfg.min_learning_rate

    if loss_history is None:
        _train_corpus(docvecs, flat, offsets, ctx, cum, cfg.negative_samples, cfg.epochs, lr0, lr_min, state)
    else:
        # Split the linear schedule across per-epoch calls.
        span = (lr0 - lr_min) / cfg.epochs
        for epoch in range(cfg.epochs):
            state = np.uint64(_train_corpus(docvecs, flat, offsets, ctx, cum, cfg.negative_samples, 1,
                                            lr0 - span * epoch, lr0 - span * (epoch + 1), state))
            loss_history.append(_expected_loss(docvecs, flat, offsets, ctx, cum, cfg.negative_samples))
    return EmbeddingModel(tuple(vocab), counts, docvecs, ctx, cfg)


def infer_vector(m: EmbeddingModel, text: str) -> np.ndarray:
    """Vector for unseen text; zero vector when no token is in the vocabulary."""
    cfg = m.config
    toks = m.encode(text)
    if toks.size == 0:
        return np.zeros(cfg.dim, dtype=np.float32)
    salt = zlib.crc32(" ".join(m.tokens[t] for t in toks).encode("utf-8"))
    vec = _init_rows(1, cfg.dim, cfg.seed, 1_000_003 + salt)[0]
    _infer(vec, toks, m.context_vectors, m.unigram_table, cfg.negative_samples, cfg.epochs,
           cfg.initial_learning_rate, cfg.min_learning_rate, _seed_state(cfg.seed, salt))
    return vec


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))

"""TF-IDF n-gram features.

Vocabulary construction is level-wise: an n-gram can only reach a document
frequency of ``min_df`` if both of its (n-1)-gram sub-sequences do, so longer
n-grams are only counted when their prefix and suffix survived the previous
level. The result is identical to counting every n-gram up to ``n_max``.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

FORMAT_VERSION = 1

_TOKEN_RE = re.compile(r"[^\W_]+")


class EmptyVocabularyError(ValueError):
    """No n-gram survived document-frequency pruning."""


@dataclass(frozen=True)
class VectorizerConfig:
    n_min: int = 1
    n_max: int = 10
    min_df: float = 0.10
    max_df: float = 0.90
    lowercase: bool = True

    def __post_init__(self):
        if not 1 <= self.n_min <= self.n_max:
            raise ValueError(f"need 1 <= n_min <= n_max, got {self.n_min}, {self.n_max}")
        if not 0.0 <= self.min_df <= self.max_df <= 1.0:
            raise ValueError(f"need 0 <= min_df <= max_df <= 1, got {self.min_df}, {self.max_df}")


@dataclass(frozen=True, eq=False)
class SparseVector:
    indices: np.ndarray
    weights: np.ndarray
    dim: int

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.weights
        return out

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.weights.tolist()))

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.weights, self.weights)))


def tokenize(text: str, cfg: VectorizerConfig | None = None) -> list[str]:
    """Maximal runs of letters and digits; everything else separates tokens."""
    if cfg is None or cfg.lowercase:
        text = text.lower()
    return _TOKEN_RE.findall(text)


def extract_ngrams(tokens: Sequence[str], n_min: int, n_max: int) -> list[str]:
    out = []
    for n in range(n_min, min(n_max, len(tokens)) + 1):
        out.extend(" ".join(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
    return out


def _in_range(df: int, n_docs: int, cfg: VectorizerConfig) -> bool:
    return cfg.min_df <= df / n_docs <= cfg.max_df


def count_document_frequencies(docs: Sequence[Sequence[str]], cfg: VectorizerConfig) -> dict[tuple[str, ...], int]:
    """Document frequency of every n-gram that could satisfy ``min_df``."""
    n_docs = len(docs)
    frequent: set[tuple[str, ...]] | None = None
    result: dict[tuple[str, ...], int] = {}
    for n in range(1, cfg.n_max + 1):
        df: Counter = Counter()
        for toks in docs:
            if len(toks) < n:
                continue
            grams = {tuple(toks[i:i + n]) for i in range(len(toks) - n + 1)}
            if frequent is not None:
                grams = {g for g in grams if g[:-1] in frequent and g[1:] in frequent}
            df.update(grams)
        frequent = {g for g, c in df.items() if c / n_docs >= cfg.min_df}
        if n >= cfg.n_min:
            result.update((g, df[g]) for g in frequent)
        if not frequent:
            break
    return result


@dataclass(frozen=True, eq=False)
class TfidfModel:
    ngrams: tuple[str, ...]
    df: np.ndarray
    idf: np.ndarray
    corpus_size: int
    config: VectorizerConfig

    def __post_init__(self):
        object.__setattr__(self, "_index", {g: i for i, g in enumerate(self.ngrams)})
        object.__setattr__(self, "_longest", max((g.count(" ") + 1 for g in self.ngrams), default=0))

    @property
    def dim(self) -> int:
        return len(self.ngrams)

    @property
    def ngram_to_index(self) -> dict[str, int]:
        return dict(self._index)

    def transform(self, text: str) -> SparseVector:
        return transform(self, text)

    def transform_many(self, texts: Iterable[str]) -> np.ndarray:
        """Dense row-per-document matrix of TF-IDF vectors."""
        texts = list(texts)
        out = np.zeros((len(texts), self.dim))
        for row, text in enumerate(texts):
            v = transform(self, text)
            out[row, v.indices] = v.weights
        return out

    def to_json(self) -> str:
        return json.dumps({
            "format": "tfidf",
            "version": FORMAT_VERSION,
            "config": asdict(self.config),
            "corpus_size": self.corpus_size,
            "ngrams": list(self.ngrams),
            "df": self.df.tolist(),
            "idf": self.idf.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "TfidfModel":
        doc = json.loads(text)
        if doc.get("format") != "tfidf":
            raise ValueError("not a TF-IDF model document")
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported TF-IDF model version {doc.get('version')!r}")
        return cls(
            ngrams=tuple(doc["ngrams"]),
            df=np.asarray(doc["df"], dtype=np.int64),
            idf=np.asarray(doc["idf"], dtype=np.float64),
            corpus_size=int(doc["corpus_size"]),
            config=VectorizerConfig(**doc["config"]),
        )


def fit(corpus, cfg: VectorizerConfig | None = None) -> TfidfModel:
    """Build the pruned n-gram vocabulary and smoothed IDF weights.

    ``corpus`` is a Dataset or a sequence of description strings.
    """
    cfg = cfg or VectorizerConfig()
    texts = corpus.descriptions if hasattr(corpus, "descriptions") else list(corpus)
    if not texts:
        raise ValueError("cannot fit a vectorizer on an empty corpus")
    docs = [tokenize(t, cfg) for t in texts]
    n_docs = len(docs)
    counts = count_document_frequencies(docs, cfg)
    kept = sorted((" ".join(g), c) for g, c in counts.items() if _in_range(c, n_docs, cfg))
    if not kept:
        raise EmptyVocabularyError(
            f"no n-gram with document frequency in [{cfg.min_df}, {cfg.max_df}] among {n_docs} documents")
    ngrams = tuple(g for g, _ in kept)
    df = np.array([c for _, c in kept], dtype=np.int64)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    return TfidfModel(ngrams=ngrams, df=df, idf=idf, corpus_size=n_docs, config=cfg)


def transform(m: TfidfModel, text: str) -> SparseVector:
    tokens = tokenize(text, m.config)
    hi = min(m.config.n_max, m._longest)
    counts = Counter()
    index = m._index
    for gram in extract_ngrams(tokens, m.config.n_min, hi) if hi >= m.config.n_min else ():
        j = index.get(gram)
        if j is not None:
            counts[j] += 1
    if not counts:
        return SparseVector(np.zeros(0, dtype=np.int64), np.zeros(0), m.dim)
    idx = np.array(sorted(counts), dtype=np.int64)
    w = np.array([counts[j] for j in idx], dtype=np.float64) * m.idf[idx]
    w /= math.sqrt(float(np.dot(w, w)))
    return SparseVector(idx, w, m.dim)

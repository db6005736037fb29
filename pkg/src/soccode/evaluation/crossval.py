"""k-fold cross-validation of (representation, classifier) combinations."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from .. import doc_embedder, text_vectorizer
from ..classifiers import ALGORITHMS, ClassifierSpec
from ..corpus import CvConfig, Dataset, LabelMap, kfold_split
from .metrics import all_metrics

logger = logging.getLogger(__name__)

REPRESENTATIONS = ("tfidf", "doc2vec")
METRICS = ("accuracy", "precision_macro", "recall_macro", "f1_macro", "train_time_s")


class FoldError(ValueError):
    """A training slice cannot support the full label set."""


@dataclass(frozen=True)
class FoldMetrics:
    fold_index: int
    accuracy: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    train_time_s: float


def fit_representation(representation: str, texts: list[str],
                       vectorizer_cfg: text_vectorizer.VectorizerConfig | None = None,
                       embed_cfg: doc_embedder.EmbedConfig | None = None):
    """Fit a vectorizer on ``texts``; returns (model, training feature matrix)."""
    if representation == "tfidf":
        model = text_vectorizer.fit(texts, vectorizer_cfg or text_vectorizer.VectorizerConfig())
        return model, model.transform_many(texts)
    if representation == "doc2vec":
        model = doc_embedder.fit(texts, embed_cfg or doc_embedder.EmbedConfig())
        return model, model.doc_vectors.astype(np.float64)
    raise ValueError(f"unknown representation {representation!r}; choose from {', '.join(REPRESENTATIONS)}")


def _check_fold(y_train: np.ndarray, labels: LabelMap, fold: int) -> None:
    missing = sorted(set(range(labels.n_classes)) - set(np.unique(y_train).tolist()))
    if missing:
        raise FoldError(f"fold {fold}: training slice has no examples of {', '.join(labels.decode(missing))}")


@dataclass
class _PreparedFold:
    index: int
    train: np.ndarray
    test: np.ndarray
    X_train: np.ndarray
    X_test: np.ndarray
    vectorizer_time: float


def _prepare(d: Dataset, representation: str, folds, labels: LabelMap, y: np.ndarray,
             vectorizer_cfg, embed_cfg) -> Iterable[_PreparedFold]:
    texts = d.descriptions
    for k, (train, test) in enumerate(folds):
        _check_fold(y[train], labels, k)
        train_texts = [texts[i] for i in train]
        start = time.perf_counter()
        model, X_train = fit_representation(representation, train_texts, vectorizer_cfg, embed_cfg)
        elapsed = time.perf_counter() - start
        X_test = model.transform_many([texts[i] for i in test])
        yield _PreparedFold(k, train, test, X_train, X_test, elapsed)


def _evaluate(spec: ClassifierSpec, fold: _PreparedFold, y: np.ndarray, n_classes: int) -> FoldMetrics:
    model = spec.build()
    start = time.perf_counter()
    model.fit(fold.X_train, y[fold.train], n_classes)
    elapsed = time.perf_counter() - start
    pred = model.predict(fold.X_test)
    scores = all_metrics(y[fold.test].tolist(), pred.tolist(), list(range(n_classes)))
    return FoldMetrics(fold_index=fold.index, train_time_s=fold.vectorizer_time + elapsed, **scores)


def cross_validate(d: Dataset, representation: str, spec: ClassifierSpec | str, cfg: CvConfig | None = None,
                   vectorizer_cfg=None, embed_cfg=None) -> list[FoldMetrics]:
    """Per-fold metrics; vectorizers are refit on each training slice only.

    Training time is vectorizer fitting (including featurising the training
    slice) plus classifier fitting; prediction is not timed.
    """
    cfg = cfg or CvConfig()
    spec = ClassifierSpec(spec) if isinstance(spec, str) else spec
    labels = LabelMap.from_labels(d.codes)
    if labels.n_classes < 2:
        raise ValueError("cross-validation needs at least 2 classes")
    y = labels.encode(d.codes)
    folds = kfold_split(d, cfg)
    return [_evaluate(spec, f, y, labels.n_classes)
            for f in _prepare(d, representation, folds, labels, y, vectorizer_cfg, embed_cfg)]


@dataclass
class BenchmarkRow:
    representation: str
    algorithm: str
    folds: list[FoldMetrics] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and bool(self.folds)

    def mean(self, metric: str) -> float:
        values = [getattr(f, metric) for f in self.folds]
        return sum(values) / len(values)

    def means(self) -> dict[str, float]:
        return {m: self.mean(m) for m in METRICS} if self.ok else {}


@dataclass
class BenchmarkReport:
    rows: list[BenchmarkRow]
    config: dict
    fingerprint: dict

    def row(self, representation: str, algorithm: str) -> BenchmarkRow:
        for r in self.rows:
            if r.representation == representation and r.algorithm == algorithm:
                return r
        raise KeyError((representation, algorithm))

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "dataset": self.fingerprint,
            "rows": [{
                "representation": r.representation,
                "algorithm": r.algorithm,
                "error": r.error,
                "means": r.means(),
                "folds": [asdict(f) for f in r.folds],
            } for r in self.rows],
        }


def parse_row(text: str) -> tuple[str, str]:
    """``"tfidf:svc_rbf"`` -> ("tfidf", "svc_rbf")."""
    rep, sep, alg = text.partition(":")
    if not sep or rep not in REPRESENTATIONS or alg not in ALGORITHMS:
        raise ValueError(f"expected representation:algorithm, e.g. tfidf:knn; got {text!r}")
    return rep, alg


def default_rows() -> list[tuple[str, ClassifierSpec]]:
    return [(rep, ClassifierSpec(alg)) for rep in REPRESENTATIONS for alg in ALGORITHMS]


def benchmark_all(d: Dataset, cfg: CvConfig | None = None, specs=None, vectorizer_cfg=None, embed_cfg=None,
                  progress: Callable[[str], None] | None = None) -> BenchmarkReport:
    """Cross-validate every (representation, classifier) row on shared folds.

    ``specs`` restricts or overrides the default 14 rows; it is an iterable
    of (representation, ClassifierSpec or algorithm name) pairs. Each
    vectorizer is fitted once per fold and shared by the rows that use it;
    its fit time is charged to every one of those rows. A failing row keeps
    its error message and does not stop the others.
    """
    cfg = cfg or CvConfig()
    rows_spec = default_rows() if specs is None else [
        (rep, ClassifierSpec(s) if isinstance(s, str) else s) for rep, s in specs]
    labels = LabelMap.from_labels(d.codes)
    if labels.n_classes < 2:
        raise ValueError("benchmark needs at least 2 classes")
    y = labels.encode(d.codes)
    folds = kfold_split(d, cfg)
    vectorizer_cfg = vectorizer_cfg or text_vectorizer.VectorizerConfig()
    embed_cfg = embed_cfg or doc_embedder.EmbedConfig()

    rows = [BenchmarkRow(rep, spec.algorithm) for rep, spec in rows_spec]
    for rep in [r for r in REPRESENTATIONS if any(x == r for x, _ in rows_spec)]:
        members = [(row, spec) for row, (x, spec) in zip(rows, rows_spec) if x == rep]
        try:
            for fold in _prepare(d, rep, folds, labels, y, vectorizer_cfg, embed_cfg):
                for row, spec in members:
                    if row.error is not None:
                        continue
                    try:
                        row.folds.append(_evaluate(spec, fold, y, labels.n_classes))
                    except Exception as exc:  # recorded per row
                        logger.exception("%s/%s failed on fold %d", rep, row.algorithm, fold.index)
                        row.error = f"fold {fold.index}: {type(exc).__name__}: {exc}"
                if progress:
                    progress(f"{rep}: fold {fold.index + 1}/{cfg.fold_count} done")
        except Exception as exc:
            logger.exception("%s vectorization failed", rep)
            for row, _ in members:
                row.error = row.error or f"{type(exc).__name__}: {exc}"

    config = {
        "cv": asdict(cfg),
        "vectorizer": asdict(vectorizer_cfg),
        "embedding": asdict(embed_cfg),
        "classifiers": [{"representation": rep, "algorithm": s.algorithm, "hyperparameters": s.resolved()}
                        for rep, s in rows_spec],
    }
    return BenchmarkReport(rows=rows, config=config, fingerprint=d.fingerprint())

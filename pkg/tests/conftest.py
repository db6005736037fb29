import pytest

from soccode import corpus, pipeline
from soccode.classifiers import ClassifierSpec
from soccode.doc_embedder import EmbedConfig

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def synthetic():
    """The 5-class, 2,000-document benchmark corpus."""
    return corpus.generate_synthetic(5, 400, 20, 0.2, seed=0)


@pytest.fixture(scope="session")
def small_synthetic():
    return corpus.generate_synthetic(3, 40, 12, 0.2, seed=1)


@pytest.fixture(scope="session")
def tfidf_forest(small_synthetic):
    p, _ = pipeline.train_pipeline(small_synthetic, "tfidf", ClassifierSpec("forest", {"n_estimators": 15}))
    return p


@pytest.fixture(scope="session")
def doc2vec_svc(small_synthetic):
    p, _ = pipeline.train_pipeline(small_synthetic, "doc2vec", "svc_rbf", embed_cfg=EmbedConfig(epochs=10))
    return p


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def two_clusters():
    """50 seeded documents over two disjoint 15-word vocabularies; returns (texts, cluster ids)."""
    import numpy as np

    rng = np.random.default_rng(42)
    vocab = [[f"alpha{i}" for i in range(15)], [f"beta{i}" for i in range(15)]]
    texts, groups = [], []
    for doc in range(50):
        g = doc % 2
        n = int(rng.integers(20, 41))
        texts.append(" ".join(rng.choice(vocab[g], size=n)))
        groups.append(g)
    return texts, groups

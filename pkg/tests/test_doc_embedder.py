import numpy as np
import pytest

from soccode import doc_embedder as de
from soccode.doc_embedder import EmbedConfig


def mean_similarities(vectors, groups):
    within, across = [], []
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            s = de.cosine_similarity(vectors[i], vectors[j])
            (within if groups[i] == groups[j] else across).append(s)
    return float(np.mean(within)), float(np.mean(across))


@pytest.fixture(scope="module")
def trained(two_clusters):
    texts, _ = two_clusters
    history = []
    model = de.fit(texts, EmbedConfig(seed=0), loss_history=history)
    return model, history


def test_cosine_examples():
    v = np.array([0.3, -1.0, 2.0])
    assert de.cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-15)
    assert de.cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0
    expected = 32 / (np.sqrt(14) * np.sqrt(77))
    assert de.cosine_similarity([1, 2, 3], [4, 5, 6]) == pytest.approx(expected, abs=1e-15)
    assert de.cosine_similarity([1, 2, 3], [4, 5, 6]) == pytest.approx(0.9746318, abs=1e-7)
    assert de.cosine_similarity([0, 0], [1, 2]) == 0.0
    with pytest.raises(ValueError):
        de.cosine_similarity([1, 2], [1, 2, 3])


def test_config_invariants():
    with pytest.raises(ValueError):
        EmbedConfig(dim=0)
    with pytest.raises(ValueError):
        EmbedConfig(epochs=0)


def test_shapes_small():
    m = de.fit(["apple pie apple", "pie crust pie"], EmbedConfig(dim=4, epochs=1))
    assert m.doc_vectors.shape == (2, 4)
    assert m.context_vectors.shape == (len(m.tokens), 4)
    assert m.infer_vector("apple pie").shape == (4,)


def test_default_dimension(trained):
    model, _ = trained
    assert model.doc_vectors.shape == (50, 100)
    assert model.dim == 100


def test_empty_vocabulary():
    with pytest.raises(de.EmptyVocabularyError):
        de.fit(["one", "two"], EmbedConfig(min_token_count=2))
    with pytest.raises(ValueError):
        de.fit([])


def test_seed_determinism(two_clusters):
    texts, _ = two_clusters
    cfg = EmbedConfig(dim=16, epochs=3, seed=5)
    a, b = de.fit(texts, cfg), de.fit(texts, cfg)
    assert a.doc_vectors.tobytes() == b.doc_vectors.tobytes()
    assert a.context_vectors.tobytes() == b.context_vectors.tobytes()
    c = de.fit(texts, EmbedConfig(dim=16, epochs=3, seed=6))
    assert not np.array_equal(a.doc_vectors, c.doc_vectors)


def test_clusters_separate(trained, two_clusters):
    model, _ = trained
    within, across = mean_similarities(model.doc_vectors, two_clusters[1])
    assert within > across


def test_loss_decreases(trained):
    _, history = trained
    assert len(history) == 20
    assert all(b < a for a, b in zip(history, history[1:]))


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_final_loss_below_first_epoch(two_clusters, seed):
    history = []
    de.fit(two_clusters[0], EmbedConfig(seed=seed), loss_history=history)
    assert history[-1] < history[0]
    assert all(np.isfinite(history))


def test_training_loss_matches_history(trained, two_clusters):
    model, history = trained
    assert model.training_loss(two_clusters[0]) == pytest.approx(history[-1], rel=1e-12)


def test_vectors_finite_on_synthetic(small_synthetic):
    m = de.fit(small_synthetic)
    assert np.isfinite(m.doc_vectors).all() and np.isfinite(m.context_vectors).all()


def test_infer_vector(trained, two_clusters):
    model, _ = trained
    texts, _ = two_clusters
    sims = [de.cosine_similarity(model.infer_vector(t), model.doc_vectors[i]) for i, t in enumerate(texts)]
    assert np.median(sims) >= 0.6
    a, b = model.infer_vector(texts[3]), model.infer_vector(texts[3])
    assert a.tobytes() == b.tobytes()
    zero = model.infer_vector("entirely unknown words")
    assert zero.shape == (100,) and not zero.any()


def test_binary_roundtrip(trained, two_clusters):
    model, _ = trained
    data = model.to_bytes()
    back = de.EmbeddingModel.from_bytes(data)
    assert back.tokens == model.tokens and back.config == model.config
    assert np.array_equal(back.doc_vectors, model.doc_vectors)
    assert np.array_equal(back.context_vectors, model.context_vectors)
    text = two_clusters[0][7]
    assert back.infer_vector(text).tobytes() == model.infer_vector(text).tobytes()
    assert back.to_bytes() == data
    with pytest.raises(ValueError):
        de.EmbeddingModel.from_bytes(b"garbage!" + data[8:])
    with pytest.raises(ValueError):
        de.EmbeddingModel.from_bytes(data[:-4])

import hashlib
import json
import struct

import numpy as np
import pytest

from soccode import pipeline
from soccode.classifiers import ClassifierSpec
from soccode.pipeline import ChecksumError, PipelineError, VersionError, load_pipeline, predict_one, save_pipeline


def probes(d, n, seed=0):
    rng = np.random.default_rng(seed)
    words = " ".join(d.descriptions).split()
    return [" ".join(rng.choice(words, size=int(rng.integers(1, 40)))) for _ in range(n)]


def rewrite_manifest(path, edit):
    data = path.read_bytes()
    magic, mlen, _ = struct.unpack_from("<8sI32s", data)
    manifest = json.loads(data[44:44 + mlen])
    edit(manifest)
    raw = json.dumps(manifest, sort_keys=True).encode("utf-8")
    path.write_bytes(struct.pack("<8sI32s", magic, len(raw), hashlib.sha256(raw).digest()) + raw + data[44 + mlen:])


def test_roundtrip_tfidf_forest(tmp_path, tfidf_forest, small_synthetic):
    path = save_pipeline(tfidf_forest, tmp_path / "m.socpipe")
    back = load_pipeline(path)
    assert back.representation == "tfidf"
    texts = probes(small_synthetic, 100)
    assert back.predict_many(texts) == tfidf_forest.predict_many(texts)
    again = load_pipeline(path)
    assert again.metadata == back.metadata
    assert again.predict_many(texts) == back.predict_many(texts)


def test_roundtrip_doc2vec_svc(tmp_path, doc2vec_svc, small_synthetic):
    back = load_pipeline(save_pipeline(doc2vec_svc, tmp_path / "m.socpipe"))
    assert back.representation == "doc2vec" and back.dim == 100
    texts = probes(small_synthetic, 100, seed=1)
    assert back.predict_many(texts) == doc2vec_svc.predict_many(texts)


def test_save_is_byte_stable(tmp_path, tfidf_forest):
    a = save_pipeline(tfidf_forest, tmp_path / "a").read_bytes()
    b = save_pipeline(load_pipeline(tmp_path / "a"), tmp_path / "b").read_bytes()
    assert a == b


def test_truncated_file_names_checksum(tmp_path, tfidf_forest):
    path = save_pipeline(tfidf_forest, tmp_path / "m")
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(ChecksumError, match="payload 'classifier/"):
        load_pipeline(path)


def test_flipped_payload_byte(tmp_path, tfidf_forest):
    path = save_pipeline(tfidf_forest, tmp_path / "m")
    manifest, _ = pipeline.read_manifest(path)
    data = bytearray(path.read_bytes())
    data[-len(_) + 5] ^= 0xFF  # inside the vectorizer payload
    path.write_bytes(bytes(data))
    with pytest.raises(ChecksumError, match="'vectorizer'"):
        load_pipeline(path)


def test_corrupt_manifest(tmp_path, tfidf_forest):
    path = save_pipeline(tfidf_forest, tmp_path / "m")
    data = bytearray(path.read_bytes())
    data[50] ^= 0x01
    path.write_bytes(bytes(data))
    with pytest.raises(ChecksumError, match="manifest"):
        load_pipeline(path)
    (tmp_path / "junk").write_bytes(b"not a model at all, just bytes" * 3)
    with pytest.raises(PipelineError):
        load_pipeline(tmp_path / "junk")


def test_version_bump_refused_before_payloads(tmp_path, tfidf_forest, monkeypatch):
    path = save_pipeline(tfidf_forest, tmp_path / "m")
    rewrite_manifest(path, lambda m: m.update(format_version=pipeline.FORMAT_VERSION + 1))

    def forbidden(*a, **k):
        raise AssertionError("payload decoded despite version mismatch")

    monkeypatch.setattr(pipeline.text_vectorizer.TfidfModel, "from_json", forbidden)
    with pytest.raises(VersionError, match="version"):
        load_pipeline(path)


def test_schema_violation(tmp_path, tfidf_forest):
    path = save_pipeline(tfidf_forest, tmp_path / "m")
    rewrite_manifest(path, lambda m: m.pop("labels"))
    with pytest.raises(PipelineError, match="schema"):
        load_pipeline(path)


def test_predict_one(tfidf_forest, small_synthetic):
    d = small_synthetic
    for r in d.records[:20]:
        x = tfidf_forest.featurize([r.job_description])
        expected = tfidf_forest.labels.label(int(tfidf_forest.classifier.predict(x)[0]))
        assert predict_one(tfidf_forest, r.job_description) == expected
    origin = tfidf_forest.labels.label(int(tfidf_forest.classifier.predict(np.zeros((1, tfidf_forest.dim)))[0]))
    assert predict_one(tfidf_forest, "qqq www eee") == origin
    with pytest.raises(ValueError):
        predict_one(tfidf_forest, "   ")


def test_training_documents_classified_as_their_class(small_synthetic):
    p, timing = pipeline.train_pipeline(small_synthetic, "tfidf", "logreg")
    assert timing["vectorizer_s"] > 0 and timing["classifier_s"] > 0
    hits = [predict_one(p, r.job_description) == r.soc_code for r in small_synthetic.records]
    assert np.mean(hits) == 1.0


def test_metadata_and_version(tfidf_forest, small_synthetic):
    meta = tfidf_forest.metadata
    assert meta["dataset"] == small_synthetic.fingerprint()
    assert meta["config"]["classifier"]["hyperparameters"]["n_estimators"] == 15
    assert tfidf_forest.model_version.startswith("tfidf-forest-")
    p2, _ = pipeline.train_pipeline(small_synthetic, "tfidf", ClassifierSpec("forest", {"n_estimators": 15}))
    assert p2.model_version == tfidf_forest.model_version
    assert pipeline.content_checksum(p2) == pipeline.content_checksum(tfidf_forest)


def test_dimension_invariant(tfidf_forest, doc2vec_svc):
    with pytest.raises(PipelineError):
        pipeline.Pipeline("tfidf", tfidf_forest.vectorizer, doc2vec_svc.classifier, tfidf_forest.labels)

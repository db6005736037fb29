import http.client
import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from soccode.pipeline import predict_one, save_pipeline
from soccode.service import PredictionService


def request(svc, method, path, body=None, raw=None, headers=None):
    conn = http.client.HTTPConnection(svc.host, svc.port, timeout=10)
    try:
        data = raw if raw is not None else (None if body is None else json.dumps(body).encode("utf-8"))
        conn.request(method, path, body=data, headers={"Content-Type": "application/json", **(headers or {})})
        resp = conn.getresponse()
        return resp.status, json.loads(resp.read())
    finally:
        conn.close()


@pytest.fixture()
def service(tfidf_forest):
    with PredictionService(tfidf_forest, port=0, max_body=4096) as svc:
        yield svc


def random_descriptions(d, n, seed):
    rng = np.random.default_rng(seed)
    words = " ".join(d.descriptions).split() + ["unseen", "Ünïcode", "C++", "naïve"]
    return [" ".join(rng.choice(words, size=int(rng.integers(1, 60)))) for _ in range(n)]


def test_predict_equals_in_process(service, tfidf_forest, small_synthetic):
    for text in random_descriptions(small_synthetic, 30, 0):
        status, body = request(service, "POST", "/predict", {"description": text})
        assert status == 200
        assert body == {"soc_code": predict_one(tfidf_forest, text), "model_version": tfidf_forest.model_version}


def test_healthz(service, tfidf_forest):
    status, body = request(service, "GET", "/healthz")
    assert status == 200
    assert body["model_version"] == tfidf_forest.model_version
    assert body["representation"] == "tfidf" and body["classes"] == list(tfidf_forest.labels.labels)


@pytest.mark.parametrize("kwargs, fragment", [
    ({"body": {}}, "description"),
    ({"body": {"description": "  "}}, "description"),
    ({"body": {"description": 7}}, "description"),
    ({"raw": b"{not json"}, "malformed JSON"),
    ({"raw": b"[1, 2]"}, "object"),
    ({"raw": b"\xff\xfe"}, "malformed JSON"),
])
def test_bad_requests(service, kwargs, fragment):
    status, body = request(service, "POST", "/predict", **kwargs)
    assert status == 400
    assert set(body) == {"error"} and fragment in body["error"]


def test_oversized_body(service):
    status, body = request(service, "POST", "/predict", {"description": "x" * 5000})
    assert status == 413 and "exceeds" in body["error"]


def test_unknown_routes(service):
    assert request(service, "GET", "/nope")[0] == 404
    assert request(service, "GET", "/predict")[0] == 405


def test_concurrent_identical_requests(service, small_synthetic):
    text = small_synthetic.descriptions[3]
    with ThreadPoolExecutor(max_workers=20) as pool:
        results = list(pool.map(lambda _: request(service, "POST", "/predict", {"description": text}), range(100)))
    assert len(results) == 100 and all(r == results[0] for r in results)
    assert results[0][0] == 200


def test_admin_reload(tmp_path, service, doc2vec_svc, small_synthetic):
    path = save_pipeline(doc2vec_svc, tmp_path / "new.socpipe")
    status, body = request(service, "POST", "/admin/reload", {"path": str(path)})
    assert status == 200 and body["model_version"] == doc2vec_svc.model_version
    text = small_synthetic.descriptions[0]
    status, body = request(service, "POST", "/predict", {"description": text})
    assert body == {"soc_code": predict_one(doc2vec_svc, text), "model_version": doc2vec_svc.model_version}
    status, body = request(service, "POST", "/admin/reload", {"path": str(tmp_path / "missing")})
    assert status == 400 and "cannot load" in body["error"]
    assert service.pipeline.model_version == doc2vec_svc.model_version


def test_reload_can_be_disabled(tfidf_forest):
    with PredictionService(tfidf_forest, port=0, allow_reload=False) as svc:
        assert request(svc, "POST", "/admin/reload", {"path": "x"})[0] == 404


def test_port_in_use(service, tfidf_forest):
    with pytest.raises(OSError):
        PredictionService(tfidf_forest, host=service.host, port=service.port)

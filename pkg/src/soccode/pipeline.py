"""Fitted vectorizer + classifier + label map, and its single-file container.

Container layout::

    8 bytes   magic b"SOCPIPE\\0"
    4 bytes   manifest length (little-endian u32)
    32 bytes  SHA-256 of the manifest
    manifest  UTF-8 JSON: format_version, tags, configs, label map, metadata,
              and for every payload its name, offset, length and SHA-256
    payloads  concatenated; offsets are relative to the end of the manifest

Classifier arrays are stored as ``.npy`` blobs; the vectorizer is stored in
its own format (JSON for TF-IDF, the binary container for paragraph vectors).
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import io
import json
import os
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import classifiers, doc_embedder, text_vectorizer
from .classifiers import Classifier, ClassifierSpec
from .corpus import Dataset, LabelMap

MAGIC = b"SOCPIPE\x00"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sI32s")


class PipelineError(ValueError):
    pass


class ChecksumError(PipelineError):
    pass


class VersionError(PipelineError):
    pass


@dataclass(frozen=True, eq=False)
class Pipeline:
    representation: str
    vectorizer: text_vectorizer.TfidfModel | doc_embedder.EmbeddingModel
    classifier: Classifier
    labels: LabelMap
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.representation not in ("tfidf", "doc2vec"):
            raise PipelineError(f"unknown representation {self.representation!r}")
        if self.classifier.dim_ != self.vectorizer.dim:
            raise PipelineError(
                f"classifier expects {self.classifier.dim_} features, vectorizer yields {self.vectorizer.dim}")
        if self.classifier.n_classes_ > self.labels.n_classes:
            raise PipelineError("label map does not cover every classifier output")

    @property
    def model_version(self) -> str:
        return self.metadata.get("model_version", "unversioned")

    @property
    def dim(self) -> int:
        return self.vectorizer.dim

    def featurize(self, texts: list[str]) -> np.ndarray:
        return self.vectorizer.transform_many(texts)

    def predict_many(self, descriptions: list[str]) -> list[str]:
        for text in descriptions:
            _require_text(text)
        return self.labels.decode(self.classifier.predict(self.featurize(descriptions)).tolist())


def _require_text(description) -> None:
    if not isinstance(description, str) or not description.strip():
        raise ValueError("description must be a non-empty string")


def predict_one(p: Pipeline, description: str) -> str:
    """SOC code for one description.

    Text with no known n-gram or token maps to the zero vector; the result is
    then whatever the classifier decides at the origin.
    """
    _require_text(description)
    x = p.featurize([description])
    return p.labels.label(int(p.classifier.predict(x)[0]))


def train_pipeline(d: Dataset, representation: str, spec: ClassifierSpec | str,
                   vectorizer_cfg: text_vectorizer.VectorizerConfig | None = None,
                   embed_cfg: doc_embedder.EmbedConfig | None = None) -> tuple[Pipeline, dict]:
    """Fit on the whole dataset; returns the pipeline and fit timings in seconds."""
    import time

    from .evaluation.crossval import fit_representation

    spec = ClassifierSpec(spec) if isinstance(spec, str) else spec
    labels = LabelMap.from_labels(d.codes)
    y = labels.encode(d.codes)
    t0 = time.perf_counter()
    vectorizer, X = fit_representation(representation, d.descriptions, vectorizer_cfg, embed_cfg)
    t1 = time.perf_counter()
    model = spec.build().fit(X, y, labels.n_classes)
    t2 = time.perf_counter()
    config = {"classifier": {"algorithm": spec.algorithm, "hyperparameters": spec.resolved()}}
    config["vectorizer" if representation == "tfidf" else "embedding"] = asdict(vectorizer.config)
    metadata = {
        "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": config,
        "dataset": d.fingerprint(),
    }
    p = Pipeline(representation, vectorizer, model, labels, metadata)
    metadata["model_version"] = f"{representation}-{spec.algorithm}-{content_checksum(p)[:12]}"
    return p, {"vectorizer_s": t1 - t0, "classifier_s": t2 - t1}


def _npy(a: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.save(buf, np.asarray(a), allow_pickle=False)
    return buf.getvalue()


def _payloads(p: Pipeline) -> tuple[dict, list[tuple[str, bytes]]]:
    if p.representation == "tfidf":
        vec = ("vectorizer", p.vectorizer.to_json().encode("utf-8"))
    else:
        vec = ("vectorizer", p.vectorizer.to_bytes())
    meta, arrays = p.classifier.get_state()
    blobs = [vec] + [(f"classifier/{k}", _npy(v)) for k, v in sorted(arrays.items())]
    return meta, blobs


def content_checksum(p: Pipeline) -> str:
    """SHA-256 over the labels, classifier state and all payloads (not the metadata)."""
    meta, blobs = _payloads(p)
    h = hashlib.sha256()
    h.update(json.dumps({"representation": p.representation, "labels": list(p.labels.labels),
                         "classifier": meta}, sort_keys=True).encode("utf-8"))
    for name, data in blobs:
        h.update(name.encode("utf-8"))
        h.update(hashlib.sha256(data).digest())
    return h.hexdigest()


def save_pipeline(p: Pipeline, path: str | Path) -> Path:
    path = Path(path)
    meta, blobs = _payloads(p)
    entries, offset = [], 0
    for name, data in blobs:
        entries.append({"name": name, "offset": offset, "length": len(data),
                        "sha256": hashlib.sha256(data).hexdigest()})
        offset += len(data)
    manifest = json.dumps({
        "format_version": FORMAT_VERSION,
        "representation": p.representation,
        "labels": list(p.labels.labels),
        "classifier": meta,
        "metadata": p.metadata,
        "content_checksum": content_checksum(p),
        "payloads": entries,
    }, sort_keys=True).encode("utf-8")
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, len(manifest), hashlib.sha256(manifest).digest()))
        fh.write(manifest)
        for _, data in blobs:
            fh.write(data)
    os.replace(tmp, path)
    return path


def read_manifest(path: str | Path) -> tuple[dict, bytes]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise PipelineError(f"{path}: file too short to be a pipeline container")
    magic, mlen, digest = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise PipelineError(f"{path}: not a pipeline container")
    raw = data[_HEADER.size:_HEADER.size + mlen]
    if len(raw) != mlen or hashlib.sha256(raw).digest() != digest:
        raise ChecksumError(f"{path}: checksum mismatch for manifest")
    try:
        manifest = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise PipelineError(f"{path}: manifest is not valid JSON: {exc}") from None
    return manifest, data[_HEADER.size + mlen:]


def load_pipeline(path: str | Path) -> Pipeline:
    manifest, body = read_manifest(path)
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(f"{path}: unsupported pipeline format version {version!r} "
                           f"(this build reads version {FORMAT_VERSION})")
    try:
        blobs = {}
        for entry in manifest["payloads"]:
            chunk = body[entry["offset"]:entry["offset"] + entry["length"]]
            if len(chunk) != entry["length"] or hashlib.sha256(chunk).hexdigest() != entry["sha256"]:
                raise ChecksumError(f"{path}: checksum mismatch for payload {entry['name']!r}")
            blobs[entry["name"]] = chunk
        representation = manifest["representation"]
        if representation == "tfidf":
            vectorizer = text_vectorizer.TfidfModel.from_json(blobs["vectorizer"].decode("utf-8"))
        elif representation == "doc2vec":
            vectorizer = doc_embedder.EmbeddingModel.from_bytes(blobs["vectorizer"])
        else:
            raise PipelineError(f"{path}: unknown representation {representation!r}")
        arrays = {name.split("/", 1)[1]: np.load(io.BytesIO(data), allow_pickle=False)
                  for name, data in blobs.items() if name.startswith("classifier/")}
        clf = classifiers.load_state(manifest["classifier"], arrays)
        labels = LabelMap(tuple(manifest["labels"]))
        p = Pipeline(representation, vectorizer, clf, labels, manifest["metadata"])
    except (KeyError, TypeError) as exc:
        raise PipelineError(f"{path}: manifest schema violation: {exc!r}") from None
    return p

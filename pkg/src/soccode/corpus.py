"""Labeled job-description data: loading, label filtering, fold splitting and
synthetic generation."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

COLUMNS = ("job_title", "job_description", "company_name", "soc_code", "soc_occupation")
REQUIRED_COLUMNS = ("job_description", "soc_code")


class DataError(ValueError):
    """Raised for unreadable or schema-violating input data."""


@dataclass(frozen=True)
class Record:
    job_description: str
    soc_code: str
    job_title: str = ""
    company_name: str = ""
    soc_occupation: str = ""

    def __post_init__(self):
        if not self.job_description.strip():
            raise DataError("job_description is empty")
        if not self.soc_code.strip():
            raise DataError("soc_code is empty")

    def as_row(self) -> dict[str, str]:
        return {name: getattr(self, name) for name in COLUMNS}


@dataclass(frozen=True)
class Dataset:
    records: tuple[Record, ...]
    dropped: int = 0

    def __init__(self, records: Iterable[Record], dropped: int = 0):
        object.__setattr__(self, "records", tuple(records))
        object.__setattr__(self, "dropped", dropped)

    @property
    def n(self) -> int:
        return len(self.records)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def labels(self) -> frozenset[str]:
        return frozenset(r.soc_code for r in self.records)

    @property
    def descriptions(self) -> list[str]:
        return [r.job_description for r in self.records]

    @property
    def codes(self) -> list[str]:
        return [r.soc_code for r in self.records]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(self.records[i] for i in indices)

    def class_counts(self) -> dict[str, int]:
        return dict(sorted(Counter(self.codes).items()))

    def fingerprint(self) -> dict:
        """Size, class counts and a content hash identifying this dataset."""
        h = hashlib.sha256()
        for r in self.records:
            h.update(r.job_description.encode("utf-8"))
            h.update(b"\x1f")
            h.update(r.soc_code.encode("utf-8"))
            h.update(b"\x1e")
        return {"n": self.n, "class_counts": self.class_counts(), "sha256": h.hexdigest()}


@dataclass(frozen=True)
class LabelMap:
    """Dense integer encoding of SOC codes, ordered lexicographically."""

    labels: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate labels in LabelMap")
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "LabelMap":
        return cls(tuple(sorted(set(labels))))

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self._index[label]

    def label(self, index: int) -> str:
        return self.labels[index]

    def encode(self, labels: Iterable[str]) -> np.ndarray:
        return np.array([self._index[lab] for lab in labels], dtype=np.int64)

    def decode(self, indices: Iterable[int]) -> list[str]:
        return [self.labels[i] for i in indices]


@dataclass(frozen=True)
class CvConfig:
    fold_count: int = 10
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.fold_count < 2:
            raise ValueError(f"fold_count must be >= 2, got {self.fold_count}")


def _read_csv(path: Path) -> tuple[list[dict], list[str]]:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: missing header row")
        header = list(reader.fieldnames)
        rows = []
        for row in reader:
            if None in row:
                raise DataError(f"{path}: malformed row {reader.line_num}: too many fields")
            rows.append(row)
        return rows, header


def _read_jsonl(path: Path) -> tuple[list[dict], list[str]]:
    rows, keys = [], set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: malformed row {lineno}: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise DataError(f"{path}: malformed row {lineno}: expected an object")
            keys.update(obj)
            rows.append(obj)
    # JSONL has no header; missing keys are caught per row below
    return rows, sorted(keys) if rows else list(REQUIRED_COLUMNS)


def load_dataset(path: str | Path, format: str | None = None) -> Dataset:
    """Read a CSV or JSONL file of job descriptions.

    Rows with an empty description or SOC code are dropped; the number dropped
    is kept on ``Dataset.dropped`` and logged.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    fmt = format or ("jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv")
    if fmt == "csv":
        rows, header = _read_csv(path)
    elif fmt == "jsonl":
        rows, header = _read_jsonl(path)
    else:
        raise ValueError(f"unsupported format {fmt!r}")

    if fmt == "csv":
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise DataError(f"{path}: missing required column(s): {', '.join(missing)}")

    records, dropped = [], 0
    for rowno, row in enumerate(rows, start=1):
        if fmt == "jsonl":
            missing = [c for c in REQUIRED_COLUMNS if c not in row]
            if missing:
                raise DataError(f"{path}: row {rowno} missing required key(s): {', '.join(missing)}")
        values = {}
        for name in COLUMNS:
            value = row.get(name) or ""
            if not isinstance(value, str):
                raise DataError(f"{path}: malformed row {rowno}: {name} is not a string")
            values[name] = value
        if not values["job_description"].strip() or not values["soc_code"].strip():
            dropped += 1
            continue
        values["soc_code"] = values["soc_code"].strip()
        records.append(Record(**values))
    if dropped:
        logger.warning("%s: dropped %d row(s) with empty description or soc_code", path, dropped)
    return Dataset(records, dropped=dropped)


def save_dataset(d: Dataset, path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    fmt = format or ("jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv")
    if fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=COLUMNS, quoting=csv.QUOTE_MINIMAL)
            writer.writeheader()
            for r in d.records:
                writer.writerow(r.as_row())
    elif fmt == "jsonl":
        with path.open("w", encoding="utf-8") as fh:
            for r in d.records:
                fh.write(json.dumps(r.as_row(), ensure_ascii=False) + "\n")
    else:
        raise ValueError(f"unsupported format {fmt!r}")


def top_k_labels(d: Dataset, k: int) -> list[str]:
    """The k most frequent codes; equal counts are ordered lexicographically."""
    counts = Counter(d.codes)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [label for label, _ in ranked[:k]]


def filter_top_k_labels(d: Dataset, k: int) -> Dataset:
    if k < 1:
        raise ValueError("k must be >= 1")
    if k >= len(d.labels):
        return d
    keep = set(top_k_labels(d, k))
    return Dataset(r for r in d.records if r.soc_code in keep)


def kfold_split(d: Dataset | int, cfg: CvConfig) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffle indices once, then cut them into ``fold_count`` contiguous slices.

    The first ``n % fold_count`` slices get one extra element. Train indices
    are returned sorted.
    """
    n = d if isinstance(d, int) else d.n
    if cfg.fold_count > n:
        raise ValueError(f"fold_count={cfg.fold_count} exceeds dataset size {n}")
    perm = np.random.default_rng(cfg.shuffle_seed).permutation(n)
    base, extra = divmod(n, cfg.fold_count)
    folds, start = [], 0
    for i in range(cfg.fold_count):
        size = base + (1 if i < extra else 0)
        test = np.sort(perm[start:start + size])
        mask = np.ones(n, dtype=bool)
        mask[test] = False
        folds.append((np.flatnonzero(mask), test))
        start += size
    return folds


# A handful of real, frequently petitioned codes; further classes get synthetic codes.
_SOC_CODES = (
    ("15-1132", "Software Developers, Applications"),
    ("15-1121", "Computer Systems Analysts"),
    ("15-1133", "Software Developers, Systems Software"),
    ("15-1199", "Computer Occupations, All Other"),
    ("17-2072", "Electronics Engineers, Except Computer"),
    ("13-1111", "Management Analysts"),
    ("15-2041", "Statisticians"),
    ("11-3021", "Computer and Information Systems Managers"),
)

_SYLLABLES = ("ba", "ko", "ri", "te", "mu", "sa", "ne", "lo", "vi", "da", "pe", "zu")


def _word(rng: np.random.Generator, used: set[str]) -> str:
    while True:
        w = "".join(_SYLLABLES[i] for i in rng.integers(0, len(_SYLLABLES), size=rng.integers(2, 5)))
        if w not in used:
            used.add(w)
            return w


def generate_synthetic(
    class_count: int,
    docs_per_class: int,
    vocab_per_class: int,
    noise_rate: float,
    seed: int,
    noise_vocab_size: int | None = None,
    min_length: int = 30,
    max_length: int = 80,
) -> Dataset:
    """Schema-compatible stand-in corpus with one keyword vocabulary per class.

    Each document has 30-80 tokens; ``round(noise_rate * length)`` of them come
    from a shared noise vocabulary (``vocab_per_class`` words unless given),
    the rest from the document's class vocabulary.
    """
    if min(class_count, docs_per_class, vocab_per_class) < 1:
        raise ValueError("class_count, docs_per_class and vocab_per_class must be positive")
    if not 0.0 <= noise_rate <= 1.0:
        raise ValueError("noise_rate must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    used: set[str] = set()
    class_vocab = [[_word(rng, used) for _ in range(vocab_per_class)] for _ in range(class_count)]
    noise_vocab = [_word(rng, used) for _ in range(noise_vocab_size or vocab_per_class)]

    codes = []
    for c in range(class_count):
        if c < len(_SOC_CODES):
            codes.append(_SOC_CODES[c])
        else:
            codes.append((f"{19 + c // 1000:02d}-{1000 + c % 1000:04d}", f"Synthetic Occupation {c}"))

    records = []
    for c in range(class_count):
        code, occupation = codes[c]
        vocab = class_vocab[c]
        for j in range(docs_per_class):
            length = int(rng.integers(min_length, max_length + 1))
            n_noise = int(round(noise_rate * length))
            tokens = [vocab[i] for i in rng.integers(0, len(vocab), size=length - n_noise)]
            tokens += [noise_vocab[i] for i in rng.integers(0, len(noise_vocab), size=n_noise)]
            order = rng.permutation(length)
            text = " ".join(tokens[i] for i in order)
            records.append(Record(
                job_description=text,
                soc_code=code,
                job_title=f"{vocab[j % len(vocab)].title()} Specialist",
                company_name=f"Company {int(rng.integers(0, 500))}",
                soc_occupation=occupation,
            ))
    return Dataset(records)

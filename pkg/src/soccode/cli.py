"""Command-line entry point: ``soccode {data,train,benchmark,predict,serve}``.

Options may also come from a JSON config file (``--config``) whose keys are
option names with dashes replaced by underscores; explicit flags win over the
file, which wins over built-in defaults. ``serve`` additionally reads
SOCCODE_MODEL, SOCCODE_HOST and SOCCODE_PORT (flags > environment > defaults).

Exit codes: 0 success, 2 usage, 3 data, 4 I/O, 5 internal.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
import threading
import time
from pathlib import Path

from . import corpus, doc_embedder, text_vectorizer
from .classifiers import ALGORITHMS, DEFAULTS, ClassifierSpec
from .evaluation import METRICS, FoldError, benchmark_all, emit_report, parse_row
from .pipeline import PipelineError, content_checksum, load_pipeline, predict_one, save_pipeline, train_pipeline

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO, EXIT_INTERNAL = 0, 2, 3, 4, 5

log = logging.getLogger("soccode")


class UsageError(Exception):
    pass


# -- option groups ---------------------------------------------------------

def _add_data_options(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--data", required=required, help="dataset file (CSV with header, or JSONL)")
    p.add_argument("--format", choices=("csv", "jsonl"), default=None,
                   help="dataset format (default: from file extension)")
    p.add_argument("--top-k", type=int, default=None,
                   help="keep only the K most frequent SOC codes, e.g. 5")


def _add_vectorizer_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("TF-IDF n-grams")
    g.add_argument("--ngram-min", type=int, default=1, help="smallest n-gram length")
    g.add_argument("--ngram-max", type=int, default=10, help="largest n-gram length")
    g.add_argument("--min-df", type=float, default=0.10, help="minimum document-frequency proportion (inclusive)")
    g.add_argument("--max-df", type=float, default=0.90, help="maximum document-frequency proportion (inclusive)")


def _add_embedding_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("paragraph vectors (doc2vec, PV-DBOW)")
    g.add_argument("--dim", type=int, default=100, help="embedding dimensionality")
    g.add_argument("--window", type=int, default=5, help="context window (kept for compatibility; PV-DBOW ignores it)")
    g.add_argument("--epochs", type=int, default=20, help="training and inference epochs")
    g.add_argument("--negative", type=int, default=5, help="negative samples per token")
    g.add_argument("--learning-rate", type=float, default=0.025, help="initial learning rate, decayed linearly")
    g.add_argument("--min-count", type=int, default=2, help="minimum token frequency")
    g.add_argument("--embed-seed", type=int, default=0, help="embedding seed")


def _add_classifier_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("classifiers")
    g.add_argument("--k", type=int, default=3, help="neighbours for knn")
    g.add_argument("--n-estimators", type=int, default=100, help="trees in the random forest")
    g.add_argument("--seed", type=int, default=0, help="seed for linear_svm, tree and forest")
    g.add_argument("--param", action="append", default=[], metavar="ALG.NAME=VALUE",
                   help="any other hyperparameter, e.g. svc_rbf.C=10 (value parsed as JSON when possible)")


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _classifier_params(args) -> dict[str, dict]:
    params = {alg: {} for alg in ALGORITHMS}
    params["knn"]["k"] = args.k
    params["forest"]["n_estimators"] = args.n_estimators
    for alg in ("linear_svm", "tree", "forest"):
        params[alg]["seed"] = args.seed
    for item in args.param:
        key, sep, raw = item.partition("=")
        alg, dot, name = key.partition(".")
        if not sep or not dot or alg not in params:
            raise UsageError(f"--param expects ALG.NAME=VALUE with ALG in {', '.join(ALGORITHMS)}; got {item!r}")
        if name not in DEFAULTS[alg]:
            raise UsageError(f"unknown hyperparameter {name!r} for {alg}")
        params[alg][name] = _parse_value(raw)
    return params


def _spec(alg: str, args) -> ClassifierSpec:
    try:
        return ClassifierSpec(alg, _classifier_params(args)[alg])
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _vectorizer_cfg(args) -> text_vectorizer.VectorizerConfig:
    try:
        return text_vectorizer.VectorizerConfig(args.ngram_min, args.ngram_max, args.min_df, args.max_df)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _embed_cfg(args) -> doc_embedder.EmbedConfig:
    try:
        return doc_embedder.EmbedConfig(dim=args.dim, window=args.window, epochs=args.epochs,
                                        negative_samples=args.negative, initial_learning_rate=args.learning_rate,
                                        min_token_count=args.min_count, seed=args.embed_seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(args) -> corpus.Dataset:
    d = corpus.load_dataset(args.data, args.format)
    if args.top_k is not None:
        if args.top_k < 1:
            raise UsageError("--top-k must be >= 1")
        d = corpus.filter_top_k_labels(d, args.top_k)
    return d


def _emit(args, payload: dict, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


# -- subcommands -----------------------------------------------------------

def cmd_data_synth(args) -> int:
    d = corpus.generate_synthetic(args.classes, args.docs_per_class, args.vocab_per_class,
                                  args.noise_rate, args.seed)
    corpus.save_dataset(d, args.out, args.format)
    print(f"wrote {d.n} records, {len(d.labels)} classes to {args.out}")
    return EXIT_OK


def cmd_data_inspect(args) -> int:
    d = _load(args)
    fp = d.fingerprint()
    fp["dropped"] = d.dropped
    lines = [f"records: {d.n} (dropped {d.dropped})", f"classes: {len(d.labels)}", f"sha256: {fp['sha256']}"]
    lines += [f"  {code}\t{count}" for code, count in sorted(fp["class_counts"].items(), key=lambda kv: (-kv[1], kv[0]))]
    _emit(args, fp, "\n".join(lines))
    return EXIT_OK


def cmd_train(args) -> int:
    spec = _spec(args.algorithm, args)
    vcfg, ecfg = _vectorizer_cfg(args), _embed_cfg(args)
    d = _load(args)
    if len(d.labels) < 1:
        raise corpus.DataError("dataset has no records")
    p, timing = train_pipeline(d, args.representation, spec, vcfg, ecfg)
    save_pipeline(p, args.out)
    summary = {
        "model": str(args.out),
        "model_version": p.model_version,
        "checksum": content_checksum(p),
        "representation": p.representation,
        "algorithm": spec.algorithm,
        "records": d.n,
        "classes": list(p.labels.labels),
        "dim": p.dim,
        "timing_s": timing,
    }
    _emit(args, summary, "\n".join([
        f"saved {args.out} ({p.model_version})",
        f"records: {d.n}  classes: {p.labels.n_classes}  dim: {p.dim}",
        f"fit time: vectorizer {timing['vectorizer_s']:.3f}s, classifier {timing['classifier_s']:.3f}s",
    ]))
    return EXIT_OK


def _format_table(report) -> str:
    head = f"{'representation':<15}{'algorithm':<12}" + "".join(f"{m:>17}" for m in METRICS)
    lines = [head, "-" * len(head)]
    for r in report.rows:
        if r.ok:
            lines.append(f"{r.representation:<15}{r.algorithm:<12}" + "".join(f"{r.mean(m):>17.6f}" for m in METRICS))
        else:
            lines.append(f"{r.representation:<15}{r.algorithm:<12}  FAILED: {r.error}")
    return "\n".join(lines)


def cmd_benchmark(args) -> int:
    cv = corpus.CvConfig(args.folds, args.cv_seed)
    if args.only:
        try:
            rows = [parse_row(item) for chunk in args.only for item in chunk.split(",") if item]
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        specs = [(rep, _spec(alg, args)) for rep, alg in rows]
    else:
        specs = [(rep, _spec(alg, args)) for rep in ("tfidf", "doc2vec") for alg in ALGORITHMS]
    vcfg, ecfg = _vectorizer_cfg(args), _embed_cfg(args)
    formats = [f for f in args.formats.split(",") if f]
    d = _load(args)
    progress = None if args.quiet else (lambda msg: print(msg, file=sys.stderr, flush=True))
    report = benchmark_all(d, cv, specs, vcfg, ecfg, progress=progress)
    files = emit_report(report, args.out, formats)
    if args.json:
        print(json.dumps({"rows": report.to_dict()["rows"], "files": [str(f) for f in files]}, sort_keys=True))
    else:
        print(_format_table(report))
        print(f"wrote {len(files)} file(s) to {args.out}")
    return EXIT_OK if any(r.ok for r in report.rows) else EXIT_INTERNAL


def cmd_predict(args) -> int:
    if args.input:
        texts = [line.rstrip("\n") for line in Path(args.input).read_text(encoding="utf-8").splitlines()]
        texts = [t for t in texts if t.strip()]
        if not texts:
            raise UsageError(f"{args.input} contains no descriptions")
    else:
        if args.description is None or not args.description.strip():
            raise UsageError("a non-empty description (or --input FILE) is required")
        texts = [args.description]
    p = load_pipeline(args.model)
    for text in texts:
        code = predict_one(p, text)
        if args.json:
            print(json.dumps({"soc_code": code, "model_version": p.model_version}, sort_keys=True))
        else:
            print(f"{code}\t{p.model_version}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import PredictionService

    model = args.model or os.environ.get("SOCCODE_MODEL")
    host = args.host or os.environ.get("SOCCODE_HOST") or "127.0.0.1"
    port = args.port if args.port is not None else os.environ.get("SOCCODE_PORT", "8000")
    if not model:
        raise UsageError("--model (or SOCCODE_MODEL) is required")
    try:
        port = int(port)
    except ValueError:
        raise UsageError(f"invalid port {port!r}") from None
    p = load_pipeline(model)
    svc = PredictionService(p, host, port, max_body=args.max_body, allow_reload=not args.no_reload)
    stop = threading.Event()
    for sig in (signal.SIGTERM, signal.SIGINT):
        signal.signal(sig, lambda *_: stop.set())
    svc.start()
    print(f"serving {p.model_version} on http://{svc.host}:{svc.port}", flush=True)
    while not stop.wait(0.5):
        pass
    svc.shutdown()
    print("shut down", flush=True)
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="soccode", description="Predict SOC codes from job descriptions.",
                                     formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    sub = parser.add_subparsers(dest="command", required=True)
    leaves: dict[str, argparse.ArgumentParser] = {}

    data = sub.add_parser("data", help="dataset utilities", formatter_class=fmt)
    data_sub = data.add_subparsers(dest="data_command", required=True)
    p = data_sub.add_parser("synth", help="write a synthetic dataset", formatter_class=fmt)
    p.add_argument("--classes", type=int, default=5, help="number of SOC codes")
    p.add_argument("--docs-per-class", type=int, default=400, help="documents per code")
    p.add_argument("--vocab-per-class", type=int, default=20, help="keywords per code")
    p.add_argument("--noise-rate", type=float, default=0.2, help="fraction of tokens from the shared noise vocabulary")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--format", choices=("csv", "jsonl"), default=None, help="output format (default: from extension)")
    p.add_argument("--out", required=True, help="output file")
    p.set_defaults(func=cmd_data_synth)
    leaves["data synth"] = p

    p = data_sub.add_parser("inspect", help="summarise a dataset", formatter_class=fmt)
    p.add_argument("data", help="dataset file")
    p.add_argument("--format", choices=("csv", "jsonl"), default=None, help="dataset format (default: from extension)")
    p.add_argument("--top-k", type=int, default=None, help="apply top-K label filtering first")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_data_inspect)
    leaves["data inspect"] = p

    p = sub.add_parser("train", help="fit a pipeline on a whole dataset and save it", formatter_class=fmt)
    _add_data_options(p)
    p.add_argument("--representation", choices=("tfidf", "doc2vec"), default="tfidf", help="text vectorization")
    p.add_argument("--algorithm", choices=ALGORITHMS, default="svc_rbf", help="classifier")
    p.add_argument("--out", required=True, help="pipeline file to write")
    p.add_argument("--json", action="store_true", help="machine-readable summary")
    _add_vectorizer_options(p)
    _add_embedding_options(p)
    _add_classifier_options(p)
    p.set_defaults(func=cmd_train)
    leaves["train"] = p

    p = sub.add_parser("benchmark", help="cross-validate representation x classifier rows", formatter_class=fmt)
    _add_data_options(p)
    p.add_argument("--folds", type=int, default=10, help="cross-validation folds")
    p.add_argument("--cv-seed", type=int, default=0, help="fold shuffling seed")
    p.add_argument("--only", action="append", default=[], metavar="REP:ALG",
                   help="restrict to rows such as tfidf:svc_rbf (repeatable or comma-separated)")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--formats", default="csv,json,svg", help="report formats to write")
    p.add_argument("--json", action="store_true", help="machine-readable summary")
    p.add_argument("--quiet", action="store_true", help="no progress messages")
    _add_vectorizer_options(p)
    _add_embedding_options(p)
    _add_classifier_options(p)
    p.set_defaults(func=cmd_benchmark)
    leaves["benchmark"] = p

    p = sub.add_parser("predict", help="predict SOC codes with a saved pipeline", formatter_class=fmt)
    p.add_argument("--model", required=True, help="pipeline file")
    p.add_argument("description", nargs="?", help="job description text")
    p.add_argument("--input", help="file with one description per line")
    p.add_argument("--json", action="store_true", help="one JSON object per line")
    p.set_defaults(func=cmd_predict)
    leaves["predict"] = p

    p = sub.add_parser("serve", help="serve a pipeline over HTTP", formatter_class=fmt)
    p.add_argument("--model", default=None, help="pipeline file [env SOCCODE_MODEL]")
    p.add_argument("--host", default=None, help="bind address [env SOCCODE_HOST, default 127.0.0.1]")
    p.add_argument("--port", type=int, default=None, help="port, 0 for ephemeral [env SOCCODE_PORT, default 8000]")
    p.add_argument("--max-body", type=int, default=1 << 20, help="request body limit in bytes")
    p.add_argument("--no-reload", action="store_true", help="disable POST /admin/reload")
    p.set_defaults(func=cmd_serve)
    leaves["serve"] = p

    for p in leaves.values():
        p.add_argument("--config", default=None, help="JSON file of option defaults")
    return parser, leaves


def _apply_config(argv: list[str], parser, leaves) -> argparse.Namespace:
    # First pass only locates the subcommand and --config, so required
    # options that the config file may supply are relaxed for it.
    required = [a for leaf in leaves.values() for a in leaf._actions if a.required]
    for action in required:
        action.required = False
    try:
        args = parser.parse_args(argv)
    finally:
        for action in required:
            action.required = True
    if not args.config:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must contain a JSON object")
    key = args.command if args.command != "data" else f"data {args.data_command}"
    leaf = leaves[key]
    known = {a.dest for a in leaf._actions} - {"help", "config"}
    unknown = set(cfg) - known
    if unknown:
        raise UsageError(f"unknown config key(s) for {key}: {', '.join(sorted(unknown))}")
    leaf.set_defaults(**cfg)
    for action in leaf._actions:
        if action.dest in cfg:
            action.required = False
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, leaves = build_parser()
    try:
        args = _apply_config(argv, parser, leaves)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"soccode: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"soccode: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (corpus.DataError, FoldError, PipelineError, text_vectorizer.EmptyVocabularyError,
            doc_embedder.EmptyVocabularyError) as exc:
        print(f"soccode: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"soccode: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"soccode: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .crossval import METRICS, REPRESENTATIONS, BenchmarkReport, FoldMetrics  # noqa: E402

FORMATS = ("csv", "json", "svg")

CHARTS = {
    "accuracy": ("accuracy.svg", "Accuracy"),
    "precision_macro": ("precision.svg", "Precision (macro average)"),
    "recall_macro": ("recall.svg", "Recall (macro average)"),
    "f1_macro": ("f1.svg", "F1 score (macro average)"),
    "train_time_s": ("train_time.svg", "Training time (s)"),
}


def fmt(x: float) -> str:
    return format(x, ".17g")


def _write_csv(report: BenchmarkReport, out: Path) -> list[Path]:
    summary, folds = out / "report.csv", out / "folds.csv"
    with summary.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["representation", "algorithm", *METRICS])
        for row in report.rows:
            means = row.means()
            w.writerow([row.representation, row.algorithm, *(fmt(means[m]) if means else "" for m in METRICS)])
    with folds.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["representation", "algorithm", "fold_index", *METRICS])
        for row in report.rows:
            for f in row.folds:
                w.writerow([row.representation, row.algorithm, f.fold_index, *(fmt(getattr(f, m)) for m in METRICS)])
    return [summary, folds]


def read_report_csv(path: str | Path) -> dict[tuple[str, str], dict[str, float]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return {(r["representation"], r["algorithm"]): {m: float(r[m]) for m in METRICS if r[m]}
                for r in csv.DictReader(fh)}


def read_folds_csv(path: str | Path) -> dict[tuple[str, str], list[FoldMetrics]]:
    out: dict[tuple[str, str], list[FoldMetrics]] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            out.setdefault((r["representation"], r["algorithm"]), []).append(FoldMetrics(
                fold_index=int(r["fold_index"]), **{m: float(r[m]) for m in METRICS}))
    return out


def _bar_chart(report: BenchmarkReport, metric: str, path: Path) -> None:
    algorithms = list(dict.fromkeys(r.algorithm for r in report.rows))
    reps = [rep for rep in REPRESENTATIONS if any(r.representation == rep for r in report.rows)]
    width = 0.8 / max(1, len(reps))
    _, title = CHARTS[metric]
    with plt.rc_context({"svg.hashsalt": "soccode", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(10, 5))
        for k, rep in enumerate(reps):
            xs, hs = [], []
            for i, alg in enumerate(algorithms):
                try:
                    row = report.row(rep, alg)
                except KeyError:
                    continue
                if row.ok:
                    xs.append(i + (k - (len(reps) - 1) / 2) * width)
                    hs.append(row.mean(metric))
            bars = ax.bar(xs, hs, width, label=rep)
            ax.bar_label(bars, labels=[f"{h:.3f}" for h in hs], fontsize=7, rotation=90, padding=2)
        ax.set_xticks(range(len(algorithms)), algorithms)
        ax.set_ylabel(title)
        ax.set_title(f"{title} by classifier, mean over folds")
        if metric != "train_time_s":
            ax.set_ylim(0, 1.15)
        else:
            ax.margins(y=0.25)
        ax.legend(title="representation")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def emit_report(report: BenchmarkReport, directory: str | Path, formats=FORMATS) -> list[Path]:
    """Write the report files; returns the paths written.

    csv: report.csv (means) and folds.csv (long format), values with 17
    significant digits. json: report.json. svg: one grouped bar chart per
    metric.
    """
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown report format(s): {', '.join(sorted(unknown))}")
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "csv" in formats:
        written += _write_csv(report, out)
    if "json" in formats:
        path = out / "report.json"
        path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
        written.append(path)
    if "svg" in formats:
        for metric, (name, _) in CHARTS.items():
            _bar_chart(report, metric, out / name)
            written.append(out / name)
    return written

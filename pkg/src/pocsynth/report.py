"""Report files, comparison tables and figures.

Figures are written as SVG through the non-interactive Agg backend with the
timestamp metadata stripped, so rerunning a report gives identical files.
"""
import csv
import json
from pathlib import Path
from typing import List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import AnomalyReport  # noqa: E402

TABLE_COLUMNS = ("dataset", "method", "F1", "AuPRC", "FPR", "n_ood_pixels", "n_id_pixels", "n_ignored")

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "svg.hashsalt": "pocsynth",
    "svg.fonttype": "none",
}


def write_report(report: AnomalyReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")


def load_report(path) -> AnomalyReport:
    data = json.loads(Path(path).read_text())
    return AnomalyReport.from_dict(data)


def report_label(report: AnomalyReport, fallback: str = "") -> str:
    parts = [p for p in (report.dataset, report.method) if p]
    return " / ".join(parts) or fallback


def table_rows(reports: Sequence[AnomalyReport]) -> List[dict]:
    rows = [
        {
            "dataset": r.dataset,
            "method": r.method,
            "F1": r.max_f1,
            "AuPRC": r.auprc,
            "FPR": r.fpr_at_95tpr,
            "n_ood_pixels": r.n_ood_pixels,
            "n_id_pixels": r.n_id_pixels,
            "n_ignored": r.n_ignored,
        }
        for r in reports
    ]
    return sorted(rows, key=lambda row: (row["dataset"], row["method"]))


def write_table(reports: Sequence[AnomalyReport], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        for row in table_rows(reports):
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def read_table(path) -> List[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in ("F1", "AuPRC", "FPR"):
            row[key] = float(row[key])
        for key in ("n_ood_pixels", "n_id_pixels", "n_ignored"):
            row[key] = int(row[key])
    return rows


def write_pr_csv(report: AnomalyReport, path) -> None:
    curve = report.pr_curve or {"threshold": [], "precision": [], "recall": []}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "precision", "recall"])
        for row in zip(curve["threshold"], curve["precision"], curve["recall"]):
            writer.writerow([repr(float(v)) for v in row])


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_pr_curves(reports: Sequence[AnomalyReport], path) -> None:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.5))
        for i, r in enumerate(reports):
            if not r.pr_curve:
                continue
            label = f"{report_label(r, f'report {i}')} (AuPRC {100 * r.auprc:.1f})"
            ax.step(r.pr_curve["recall"], r.pr_curve["precision"], where="post", label=label)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("Recall")
        ax.set_ylabel("Precision")
        ax.set_title("Precision-recall (OOD = positive)")
        ax.legend(loc="lower left")
        ax.grid(alpha=0.3)
        fig.tight_layout()
        _save(fig, path)


def plot_boxplots(reports: Sequence[AnomalyReport], path) -> None:
    """Side-by-side ID/OOD score boxes per report, drawn from stored summaries."""
    stats = []
    for i, r in enumerate(reports):
        name = report_label(r, f"report {i}")
        for tag, five in (("ID", r.boxplot_id), ("OOD", r.boxplot_ood)):
            stats.append({
                "label": f"{name}\n{tag}",
                "whislo": five.min, "q1": five.q1, "med": five.median,
                "q3": five.q3, "whishi": five.max, "fliers": [],
            })
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(3.5, 1.1 * len(stats)), 3.5))
        boxes = ax.bxp(stats, showfliers=False, patch_artist=True)
        for j, patch in enumerate(boxes["boxes"]):
            patch.set_facecolor("#9ecae1" if j % 2 == 0 else "#fc9272")
        ax.set_ylabel("Anomaly score")
        ax.set_title("Anomaly scores of ID and OOD pixels")
        ax.grid(axis="y", alpha=0.3)
        fig.tight_layout()
        _save(fig, path)


def render(reports: Sequence[AnomalyReport], out_dir) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "table.csv", out_dir / "pr_curves.svg", out_dir / "boxplots.svg"]
    write_table(reports, paths[0])
    plot_pr_curves(reports, paths[1])
    plot_boxplots(reports, paths[2])
    return paths
